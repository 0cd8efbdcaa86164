#include "eemax/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "eemax/objective.hpp"

namespace eemax {

std::vector<double> sum_ee_gradient(const Tensor& gains, const std::vector<double>& p, double mu,
                                    double p_c) {
    const int64_t users = gains.dim(0);
    std::vector<double> signal(static_cast<size_t>(users));
    std::vector<double> denom(static_cast<size_t>(users));
    for (int64_t i = 0; i < users; ++i) {
        double d = 1.0;
        for (int64_t j = 0; j < users; ++j)
            if (j != i) d += gains.at2(i, j) * p[static_cast<size_t>(j)];
        denom[static_cast<size_t>(i)] = d;
        signal[static_cast<size_t>(i)] = gains.at2(i, i) * p[static_cast<size_t>(i)];
    }
    std::vector<double> grad(static_cast<size_t>(users), 0.0);
    for (int64_t m = 0; m < users; ++m) {
        const double consumed = mu * p[static_cast<size_t>(m)] + p_c;
        const double sm = signal[static_cast<size_t>(m)], dm = denom[static_cast<size_t>(m)];
        double g = gains.at2(m, m) / (dm + sm) / consumed -
                   mu * std::log1p(sm / dm) / (consumed * consumed);
        for (int64_t i = 0; i < users; ++i) {
            if (i == m) continue;
            const double si = signal[static_cast<size_t>(i)], di = denom[static_cast<size_t>(i)];
            g -= gains.at2(i, m) * si / (di * (di + si)) /
                 (mu * p[static_cast<size_t>(i)] + p_c);
        }
        grad[static_cast<size_t>(m)] = g;
    }
    return grad;
}

namespace {

double clamp01(double v, double hi) { return v < 0.0 ? 0.0 : (v > hi ? hi : v); }

// Monotone projected ascent with backtracking; returns the endpoint.
// Feasibility is a hard clamp, so the endpoint lies in [0, p_max]^I exactly.
void project_ascend(const Tensor& gains, double p_max, double mu, double p_c,
                    std::vector<double>& p, int64_t& evals) {
    double fp = sum_ee(gains, p, mu, p_c);
    ++evals;
    double step = 0.1 * p_max;
    const int64_t max_iters = 400;
    std::vector<double> cand(p.size());
    for (int64_t it = 0; it < max_iters; ++it) {
        const std::vector<double> grad = sum_ee_gradient(gains, p, mu, p_c);
        double gnorm = 0.0;
        for (double g : grad) gnorm = std::max(gnorm, std::fabs(g));
        if (gnorm == 0.0) break;

        bool improved = false;
        double trial = step;
        for (int back = 0; back < 40; ++back) {
            double moved = 0.0;
            for (size_t i = 0; i < p.size(); ++i) {
                cand[i] = clamp01(p[i] + trial * grad[i], p_max);
                moved = std::max(moved, std::fabs(cand[i] - p[i]));
            }
            if (moved == 0.0) break;
            const double fc = sum_ee(gains, cand, mu, p_c);
            ++evals;
            if (fc > fp) {
                p = cand;
                fp = fc;
                step = trial * 2.0;
                improved = true;
                break;
            }
            trial *= 0.5;
        }
        if (!improved) {
            if (step <= 1e-15 * p_max) break;
            step = trial;
            if (trial <= 1e-15 * p_max) break;
        }
    }
}

double to_mbit_per_j(double nats_value, double bandwidth_hz) {
    return bandwidth_hz * nats_value / std::log(2.0) / 1e6;
}

bool lexicographic_less(const std::vector<double>& a, const std::vector<double>& b) {
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

} // namespace

OracleResult grid_search(const ChannelMatrix& g, double p_max, const OracleConfig& cfg) {
    const int64_t users = g.num_users();
    if (users > cfg.max_exhaustive_users)
        throw std::invalid_argument("grid_search: " + std::to_string(users) +
                                    " users exceeds exhaustive limit of " +
                                    std::to_string(cfg.max_exhaustive_users) +
                                    "; use multistart mode");
    if (cfg.grid_points < 2) throw std::invalid_argument("grid_search: need at least 2 grid points");
    if (p_max <= 0.0) throw std::invalid_argument("grid_search: p_max must be positive");

    const int64_t k = cfg.grid_points;
    std::vector<double> levels(static_cast<size_t>(k));
    for (int64_t i = 0; i < k; ++i)
        levels[static_cast<size_t>(i)] = p_max * static_cast<double>(i) / static_cast<double>(k - 1);

    OracleResult res;
    res.mode = "grid";
    std::vector<int64_t> idx(static_cast<size_t>(users), 0);
    std::vector<double> p(static_cast<size_t>(users), 0.0);
    std::vector<double> best_p = p;
    double best = sum_ee(g.gains, p, cfg.mu, cfg.p_c);
    ++res.evaluations;

    // Odometer over the grid in lexicographic order; the first maximum seen
    // is the lexicographically smallest one.
    while (true) {
        int64_t d = users - 1;
        while (d >= 0) {
            if (++idx[static_cast<size_t>(d)] < k) break;
            idx[static_cast<size_t>(d)] = 0;
            --d;
        }
        if (d < 0) break;
        for (int64_t i = 0; i < users; ++i)
            p[static_cast<size_t>(i)] = levels[static_cast<size_t>(idx[static_cast<size_t>(i)])];
        const double v = sum_ee(g.gains, p, cfg.mu, cfg.p_c);
        ++res.evaluations;
        if (v > best) {
            best = v;
            best_p = p;
        }
    }

    if (cfg.refine) project_ascend(g.gains, p_max, cfg.mu, cfg.p_c, best_p, res.evaluations);
    res.best_p = best_p;
    res.best_ee = to_mbit_per_j(sum_ee(g.gains, best_p, cfg.mu, cfg.p_c), cfg.bandwidth_hz);
    return res;
}

OracleResult multistart(const ChannelMatrix& g, double p_max, int64_t starts,
                        const OracleConfig& cfg, Rng& rng) {
    if (starts < 1) throw std::invalid_argument("multistart: need at least one start");
    if (p_max <= 0.0) throw std::invalid_argument("multistart: p_max must be positive");
    const int64_t users = g.num_users();

    std::vector<std::vector<double>> start_points;
    start_points.emplace_back(static_cast<size_t>(users), 0.0);
    start_points.emplace_back(static_cast<size_t>(users), p_max);
    for (int64_t s = 0; s < starts; ++s) {
        std::vector<double> p(static_cast<size_t>(users));
        for (double& v : p) v = rng.uniform(0.0, p_max);
        start_points.push_back(std::move(p));
    }

    OracleResult res;
    res.mode = "multistart";
    double best = -1.0;
    std::vector<double> best_p;
    for (auto& p : start_points) {
        project_ascend(g.gains, p_max, cfg.mu, cfg.p_c, p, res.evaluations);
        const double v = sum_ee(g.gains, p, cfg.mu, cfg.p_c);
        ++res.evaluations;
        if (v > best || (v == best && lexicographic_less(p, best_p))) {
            best = v;
            best_p = p;
        }
    }
    res.best_p = best_p;
    res.best_ee = to_mbit_per_j(best, cfg.bandwidth_hz);
    return res;
}

OracleResult solve_instance(const ChannelMatrix& g, double p_max, const OracleConfig& cfg,
                            Rng& rng) {
    if (g.num_users() <= cfg.max_exhaustive_users) return grid_search(g, p_max, cfg);
    return multistart(g, p_max, cfg.multistarts, cfg, rng);
}

} // namespace eemax
