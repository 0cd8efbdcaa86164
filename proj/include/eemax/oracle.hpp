#ifndef EEMAX_ORACLE_HPP
#define EEMAX_ORACLE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "eemax/chanmodel.hpp"
#include "eemax/rng.hpp"
#include "eemax/tensor.hpp"

namespace eemax {

struct OracleConfig {
    int64_t grid_points = 41;          // per dimension, >= 2
    int64_t multistarts = 64;
    int64_t max_exhaustive_users = 4;  // grid cost is grid_points^I
    bool refine = true;                // local ascent from the best grid cell
    double mu = 4.0;
    double p_c = 1.0;
    double bandwidth_hz = 180e3;

    /// 41 points up to three users, 21 at four.
    static int64_t default_grid_points(int64_t users) { return users <= 3 ? 41 : 21; }
};

struct OracleResult {
    std::vector<double> best_p;      // feasible, in [0, p_max]^I exactly
    double best_ee = 0.0;            // Mbit/J
    std::string mode;                // "grid" or "multistart"
    int64_t evaluations = 0;
};

/// Exhaustive grid over {0, p_max/(k-1), ..., p_max}^I followed by projected
/// gradient ascent from the best grid point. Grid points are visited in
/// lexicographic order and ties keep the first (lexicographically smallest)
/// maximizer. Throws for more than max_exhaustive_users users.
OracleResult grid_search(const ChannelMatrix& g, double p_max, const OracleConfig& cfg);

/// Projected gradient ascent from `starts` uniform random points plus the
/// corners 0 and p_max*1. Deterministic under a fixed rng.
OracleResult multistart(const ChannelMatrix& g, double p_max, int64_t starts,
                        const OracleConfig& cfg, Rng& rng);

/// grid_search when exhaustive mode is affordable, multistart otherwise.
OracleResult solve_instance(const ChannelMatrix& g, double p_max, const OracleConfig& cfg,
                            Rng& rng);

/// Analytic gradient of the nats-based sum EE; local to the oracle so its
/// ascent path stays independent of the reverse-mode machinery it certifies.
std::vector<double> sum_ee_gradient(const Tensor& gains, const std::vector<double>& p, double mu,
                                    double p_c);

} // namespace eemax

#endif
