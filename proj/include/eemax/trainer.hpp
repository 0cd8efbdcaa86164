#ifndef EEMAX_TRAINER_HPP
#define EEMAX_TRAINER_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "eemax/chanmodel.hpp"
#include "eemax/inet.hpp"
#include "eemax/rng.hpp"

namespace eemax {

enum class OptimizerKind { adam, sga };

/// Training hyperparameters. The network heads operate in units of the
/// current region scale s (so the feasible power interval is [0, 1] from the
/// network's point of view); watt conversions happen at evaluation and in
/// the logged metrics.
struct TrainConfig {
    double learning_rate = 1e-3;
    int64_t batch_size = 512;
    int64_t max_epochs = 5000;
    int64_t mc_samples = 16;       // S_mc draws per sample per step
    double epsilon = 10.0;         // penalty weight, in normalized power units
    double delta_kappa = 1e-2;
    int64_t kappa_window = 50;     // h
    double entropy_stop = std::nan("");  // H_0; NaN selects I * ln(10 * ell_min)
    double region_rho = 0.99;
    bool region_adaptation = false;
    OptimizerKind optimizer = OptimizerKind::adam;
    uint64_t rng_seed = 1;

    double mu = 4.0;
    double p_c = 1.0;
    double bandwidth_hz = 180e3;
    double p_max_w = 1.0;
    double ell_min = 1e-6;

    int64_t num_layers = 5;
    int64_t feature_dim = 20;
    int64_t threads = 0;  // 0 = hardware concurrency

    // Baseline-reduction switches: pin every Monte-Carlo draw to a constant
    // and/or bypass the beta head with a constant ell_min width.
    double fixed_u = std::nan("");
    bool fix_ell_min = false;

    double resolved_entropy_stop(int64_t users) const;
};

struct KappaState {
    double kappa = 0.0;
    std::vector<double> history;  // mean entropies of the last h epochs
};

/// Entropy-driven kappa schedule: once h epochs of history exist, raise
/// kappa by delta when the windowed mean entropy is <= the current one (no
/// progress), otherwise lower it by delta/2, clamped at zero. The first h
/// epochs leave kappa untouched.
KappaState update_kappa(KappaState state, double mean_entropy, double delta_kappa, int64_t window);

struct RegionState {
    double s = 1.0;  // current feasible-region scale, W
};

/// Shrinks s by rho only when the epoch's beta outputs (in watts) satisfy
/// mean < 0.5 s and max < 0.9 s.
RegionState update_region(RegionState state, double mean_beta_w, double max_beta_w, double rho);

struct EpochMetrics {
    int64_t epoch = 0;               // 1-based
    double mean_ee_mbit_per_j = 0.0; // at p = clamp(s * alpha(G), 0, s)
    double mean_entropy_nats = 0.0;
    double mean_penalty = 0.0;       // unweighted P(a) + Q(b)
    double kappa = 0.0;              // value used during this epoch
    double s_watts = 0.0;            // scale used during this epoch
};

struct TrainResult {
    NetParams alpha;
    NetParams beta;
    std::vector<EpochMetrics> metrics;
    KappaState kappa;
    RegionState region;
    int64_t epochs_done = 0;
    bool stopped_by_entropy = false;
};

/// Resumable optimizer + schedule state.
struct TrainState {
    NetParams alpha;
    NetParams beta;
    std::vector<double> m_alpha, v_alpha, m_beta, v_beta;
    int64_t adam_steps = 0;
    KappaState kappa;
    RegionState region;
    int64_t epochs_done = 0;
};

struct NanLossError : std::runtime_error {
    explicit NanLossError(int64_t sample, int64_t epoch)
        : std::runtime_error("non-finite loss at dataset sample " + std::to_string(sample) +
                             " in epoch " + std::to_string(epoch)),
          sample_index(sample), epoch(epoch) {}
    int64_t sample_index;
    int64_t epoch;
};

/// Deterministic per-epoch sample permutation (Fisher-Yates on a stream
/// keyed by seed and epoch). Batches are consecutive chunks of this order;
/// within a batch, gradients accumulate in ascending dataset order.
std::vector<int64_t> epoch_order(uint64_t seed, int64_t epoch, int64_t n);

/// Mini-batch gradient ascent on the reparameterized objective over the
/// dataset, with the kappa schedule and optional region adaptation applied
/// once per epoch. Stops when the mean entropy drops below H_0 or the epoch
/// cap is reached. Throws NanLossError on a non-finite loss.
TrainResult train(const Dataset& ds, const TrainConfig& cfg, const TrainState* resume = nullptr,
                  TrainState* final_state = nullptr);

struct EvalSummary {
    double mean_ee = 0.0;          // Mbit/J
    double mean_ratio = std::nan("");      // mean of per-sample net/oracle ratios
    double ratio_of_means = std::nan("");  // mean net EE / mean oracle EE
    std::vector<double> ee;
    std::vector<double> ratios;
    std::vector<std::vector<double>> powers;  // deterministic powers, W
};

/// Deterministic evaluation p = clamp(s * alpha(G), 0, s) per sample.
/// oracle_ee, when given, must hold one Mbit/J value per sample.
EvalSummary evaluate(const NetParams& alpha, const Dataset& test, double s_watts, double mu,
                     double p_c, double bandwidth_hz,
                     const std::vector<double>* oracle_ee = nullptr);

void save_train_state(const TrainState& st, const std::string& path);
TrainState load_train_state(const std::string& path);

// -- Rastrigin demonstration --------------------------------------------------

double rastrigin(const std::vector<double>& x, double a_param);

struct RastriginConfig {
    int64_t dims = 10;
    double a_param = 10.0;
    int64_t iterations = 400000;
    int64_t mc_samples = 512;
    double lr_box = 1e-5;       // ascent rate for the lower bound
    double lr_ell = 1e-5;       // ascent rate for the width
    double lr_gd = 1e-3;        // plain gradient descent on f
    double init_lo = 2.5;       // start drawn uniformly per dimension
    double init_hi = 3.5;
    double init_halfwidth = 5.0;  // box starts at [x0 - w, x0 + w]
    double delta_kappa = 1e-2;
    int64_t kappa_window = 50;
    double ell_min = 1e-6;
    uint64_t rng_seed = 1;
};

struct RastriginTrace {
    std::vector<double> start;
    std::vector<double> f_box;  // f at the box midpoint per iteration
    std::vector<double> f_gd;   // f at the descent iterate per iteration
    double final_f_box = 0.0;
    double final_f_gd = 0.0;
};

/// Optimizes (a, ell) directly on the Rastrigin function (penalties off,
/// the function is unconstrained) and runs plain gradient descent from the
/// same start for comparison.
RastriginTrace rastrigin_demo(const RastriginConfig& cfg);

} // namespace eemax

#endif
