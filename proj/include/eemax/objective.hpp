#ifndef EEMAX_OBJECTIVE_HPP
#define EEMAX_OBJECTIVE_HPP

#include <cstdint>
#include <vector>

#include "eemax/chanmodel.hpp"
#include "eemax/rng.hpp"
#include "eemax/tape.hpp"
#include "eemax/tensor.hpp"

namespace eemax {

/// Transmit power bounds of the uniform box: p ~ U(a, a + ell), per user.
struct UniformBox {
    std::vector<double> a;    // lower bound, W
    std::vector<double> ell;  // width, W; positive after the ell_min clamp
};

struct LossTerms {
    double surrogate_mean = 0.0;  // mean objective over the Monte-Carlo draws, nats/J scale
    double penalty_a = 0.0;
    double penalty_b = 0.0;
    double entropy = 0.0;         // nats
    double total = 0.0;           // surrogate_mean - eps*(penalty_a + penalty_b) - kappa*entropy
};

/// Sum energy efficiency in nats per joule:
/// sum_i ln(1 + g_ii p_i / (1 + sum_{j != i} g_ij p_j)) / (mu p_i + P_c).
/// Throws on negative power.
double sum_ee(const Tensor& gains, const std::vector<double>& p, double mu, double p_c);

/// Reporting variant in Mbit per joule: the rate uses B * log2 instead of ln.
double report_ee(const Tensor& gains, const std::vector<double>& p, double mu, double p_c,
                 double bandwidth_hz);

/// Per-component hinge distances to the feasible region.
double penalty_low(const std::vector<double>& a, double p_min);
double penalty_high(const std::vector<double>& b, double p_max);

/// Literal summed-deviation forms, in which violations on different
/// components can cancel. Kept selectable; the hinge forms are the default.
double penalty_low_literal(const std::vector<double>& a, double p_min);
double penalty_high_literal(const std::vector<double>& b, double p_max);

/// Box entropy sum_i ln(ell_i) in nats. Throws on a nonpositive width.
double entropy_nats(const std::vector<double>& ell);

struct SurrogateConfig {
    int64_t mc_samples = 16;
    double kappa = 0.0;
    double epsilon = 10.0;
    double p_min = 0.0;
    double p_max = 1.0;
    bool literal_penalty = false;
};

struct SurrogateParts {
    Var total;
    Var surrogate_mean;
    Var penalty_a;
    Var penalty_b;
    Var entropy;

    LossTerms values() const;
};

/// Sampled box powers a + ell .* u as an (I, S) node; u holds S columns of
/// U(0,1)^I draws and stays fixed, so the result is a deterministic
/// differentiable function of (a, ell).
Var box_power_samples(Tape& tape, Var a, Var ell, const Tensor& u);

/// Builds the full training objective on the tape:
/// mean_s J(G, a + ell .* u_s) - eps*P(a) - eps*Q(a + ell) - kappa*H(ell).
/// Sampled powers are clamped below at zero before entering J so that boxes
/// initialized outside the feasible region stay evaluable; the penalties,
/// not the clamp, pull the box back inside.
SurrogateParts build_ee_surrogate(Tape& tape, const Tensor& gains, double mu, double p_c,
                                  Var a, Var ell, const Tensor& u, const SurrogateConfig& cfg);

/// Draws an (I, S) matrix of U(0,1) samples, one column per Monte-Carlo draw.
Tensor draw_box_uniforms(Rng& rng, int64_t num_users, int64_t mc_samples);

/// One-call evaluation of the surrogate for a fixed box, with gradients
/// w.r.t. a and ell. The u draws are taken from rng; pass them through
/// the fixed-u overload to pin them.
LossTerms surrogate_loss(const ChannelMatrix& g, const UniformBox& box, double mu, double p_c,
                         const SurrogateConfig& cfg, Rng& rng,
                         std::vector<double>* grad_a = nullptr,
                         std::vector<double>* grad_ell = nullptr);

LossTerms surrogate_loss_fixed_u(const ChannelMatrix& g, const UniformBox& box, double mu,
                                 double p_c, const SurrogateConfig& cfg, const Tensor& u,
                                 std::vector<double>* grad_a = nullptr,
                                 std::vector<double>* grad_ell = nullptr);

} // namespace eemax

#endif
