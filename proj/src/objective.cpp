#include "eemax/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace eemax {

namespace {

void check_powers(const std::vector<double>& p) {
    for (double v : p)
        if (v < 0.0) throw std::invalid_argument("sum_ee: negative transmit power");
}

double rate_sum(const Tensor& gains, const std::vector<double>& p, double mu, double p_c,
                bool bits) {
    const int64_t users = gains.dim(0);
    if (static_cast<int64_t>(p.size()) != users)
        throw std::invalid_argument("sum_ee: power vector length " + std::to_string(p.size()) +
                                    " does not match " + std::to_string(users) + " users");
    double total = 0.0;
    for (int64_t i = 0; i < users; ++i) {
        double denom = 1.0;
        for (int64_t j = 0; j < users; ++j)
            if (j != i) denom += gains.at2(i, j) * p[static_cast<size_t>(j)];
        const double sinr = gains.at2(i, i) * p[static_cast<size_t>(i)] / denom;
        const double rate = bits ? std::log1p(sinr) / std::log(2.0) : std::log1p(sinr);
        total += rate / (mu * p[static_cast<size_t>(i)] + p_c);
    }
    return total;
}

} // namespace

double sum_ee(const Tensor& gains, const std::vector<double>& p, double mu, double p_c) {
    check_powers(p);
    return rate_sum(gains, p, mu, p_c, false);
}

double report_ee(const Tensor& gains, const std::vector<double>& p, double mu, double p_c,
                 double bandwidth_hz) {
    check_powers(p);
    return bandwidth_hz * rate_sum(gains, p, mu, p_c, true) / 1e6;
}

double penalty_low(const std::vector<double>& a, double p_min) {
    double s = 0.0;
    for (double v : a) s += std::max(p_min - v, 0.0);
    return s;
}

double penalty_high(const std::vector<double>& b, double p_max) {
    double s = 0.0;
    for (double v : b) s += std::max(v - p_max, 0.0);
    return s;
}

double penalty_low_literal(const std::vector<double>& a, double p_min) {
    double s = 0.0;
    for (double v : a) s += v - p_min;
    return -std::min(s, 0.0);
}

double penalty_high_literal(const std::vector<double>& b, double p_max) {
    double s = 0.0;
    for (double v : b) s += v - p_max;
    return std::max(s, 0.0);
}

double entropy_nats(const std::vector<double>& ell) {
    double h = 0.0;
    for (double v : ell) {
        if (v <= 0.0) throw std::invalid_argument("entropy: nonpositive box width");
        h += std::log(v);
    }
    return h;
}

LossTerms SurrogateParts::values() const {
    LossTerms lt;
    lt.surrogate_mean = surrogate_mean.value()[0];
    lt.penalty_a = penalty_a.value()[0];
    lt.penalty_b = penalty_b.value()[0];
    lt.entropy = entropy.value()[0];
    lt.total = total.value()[0];
    return lt;
}

Var box_power_samples(Tape& tape, Var a, Var ell, const Tensor& u) {
    if (u.rank() != 2 || u.dim(0) != a.value().numel())
        throw std::invalid_argument("box_power_samples: draw matrix shape " + u.shape_string() +
                                    " does not match box of " +
                                    std::to_string(a.value().numel()) + " users");
    const int64_t s = u.dim(1);
    Var uconst = constant(tape, u);
    return add(col_bcast(a, s), mul(col_bcast(ell, s), uconst));
}

SurrogateParts build_ee_surrogate(Tape& tape, const Tensor& gains, double mu, double p_c,
                                  Var a, Var ell, const Tensor& u, const SurrogateConfig& cfg) {
    const int64_t users = gains.dim(0);
    const int64_t s = u.dim(1);
    if (s < 1) throw std::invalid_argument("build_ee_surrogate: need at least one draw");

    // Powers per draw, clamped below at zero before entering J.
    Var p_raw = box_power_samples(tape, a, ell, u);
    Var p = relu(p_raw);

    Tensor diag_tile({users, s});
    for (int64_t i = 0; i < users; ++i)
        for (int64_t k = 0; k < s; ++k) diag_tile.at2(i, k) = gains.at2(i, i);

    Var g_const = constant(tape, gains);
    Var signal = mul(p, constant(tape, diag_tile));
    Var interference = sub(contract_first(g_const, p), signal);
    Var sinr = div(signal, add_const(interference, 1.0));
    Var rate = vln(add_const(sinr, 1.0));
    Var consumed = add_const(scale(p, mu), p_c);
    Var mean_obj = scale(reduce_sum(div(rate, consumed)), 1.0 / static_cast<double>(s));

    Var b = add(a, ell);
    Var pen_a{&tape, -1}, pen_b{&tape, -1};
    if (cfg.literal_penalty) {
        Tensor pmin_vec = Tensor::full({users}, cfg.p_min);
        Tensor pmax_vec = Tensor::full({users}, cfg.p_max);
        pen_a = relu(reduce_sum(sub(constant(tape, pmin_vec), a)));
        pen_b = relu(reduce_sum(sub(b, constant(tape, pmax_vec))));
    } else {
        Tensor pmin_vec = Tensor::full({users}, cfg.p_min);
        Tensor pmax_vec = Tensor::full({users}, cfg.p_max);
        pen_a = reduce_sum(relu(sub(constant(tape, pmin_vec), a)));
        pen_b = reduce_sum(relu(sub(b, constant(tape, pmax_vec))));
    }
    Var entropy = reduce_sum(vln(ell));

    Var total = sub(mean_obj, scale(pen_a, cfg.epsilon));
    total = sub(total, scale(pen_b, cfg.epsilon));
    total = sub(total, scale(entropy, cfg.kappa));

    return SurrogateParts{total, mean_obj, pen_a, pen_b, entropy};
}

Tensor draw_box_uniforms(Rng& rng, int64_t num_users, int64_t mc_samples) {
    if (mc_samples < 1) throw std::invalid_argument("draw_box_uniforms: need at least one draw");
    Tensor u({num_users, mc_samples});
    // Column-by-column so each draw s consumes I consecutive values.
    for (int64_t k = 0; k < mc_samples; ++k)
        for (int64_t i = 0; i < num_users; ++i) u.at2(i, k) = rng.uniform01();
    return u;
}

LossTerms surrogate_loss_fixed_u(const ChannelMatrix& g, const UniformBox& box, double mu,
                                 double p_c, const SurrogateConfig& cfg, const Tensor& u,
                                 std::vector<double>* grad_a, std::vector<double>* grad_ell) {
    const int64_t users = g.num_users();
    if (static_cast<int64_t>(box.a.size()) != users || static_cast<int64_t>(box.ell.size()) != users)
        throw std::invalid_argument("surrogate_loss: box size does not match channel matrix");

    Tape tape;
    Var a = leaf(tape, Tensor({users}, box.a));
    Var ell = leaf(tape, Tensor({users}, box.ell));
    SurrogateParts parts = build_ee_surrogate(tape, g.gains, mu, p_c, a, ell, u, cfg);
    if (grad_a || grad_ell) {
        tape.backward(parts.total.id);
        if (grad_a) *grad_a = a.grad().vec();
        if (grad_ell) *grad_ell = ell.grad().vec();
    }
    return parts.values();
}

LossTerms surrogate_loss(const ChannelMatrix& g, const UniformBox& box, double mu, double p_c,
                         const SurrogateConfig& cfg, Rng& rng, std::vector<double>* grad_a,
                         std::vector<double>* grad_ell) {
    const Tensor u = draw_box_uniforms(rng, g.num_users(), cfg.mc_samples);
    return surrogate_loss_fixed_u(g, box, mu, p_c, cfg, u, grad_a, grad_ell);
}

} // namespace eemax
