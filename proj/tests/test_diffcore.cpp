#include "doctest.h"

#include <cmath>
#include <vector>

#include "eemax/fd_check.hpp"
#include "eemax/rng.hpp"
#include "eemax/tape.hpp"

using namespace eemax;

TEST_CASE("elementwise primitives") {
    Tape t;
    Var x = leaf(t, Tensor({3}, {-1.0, 0.0, 2.0}));
    Var r = relu(x);
    CHECK(r.value()[0] == 0.0);
    CHECK(r.value()[1] == 0.0);
    CHECK(r.value()[2] == 2.0);

    Var c = clamp_min(x, 0.5);
    CHECK(c.value()[0] == 0.5);
    CHECK(c.value()[2] == 2.0);
}

TEST_CASE("contract_first with identity leaves features unchanged") {
    Tape t;
    Rng rng(7);
    Tensor f({3, 2, 2});
    for (int64_t k = 0; k < f.numel(); ++k) f[k] = rng.uniform(-1.0, 1.0);
    Var fv = leaf(t, f);
    Var w = constant(t, Tensor::eye(3));
    Var out = contract_first(w, fv);
    for (int64_t k = 0; k < f.numel(); ++k) CHECK(out.value()[k] == f[k]);
}

TEST_CASE("diag_first of all-ones 3x3") {
    Tape t;
    Var f = leaf(t, Tensor::full({1, 3, 3}, 1.0));
    Var d = diag_first(f);
    REQUIRE(d.value().numel() == 3);
    for (int64_t k = 0; k < 3; ++k) CHECK(d.value()[k] == 1.0);
}

TEST_CASE("backward: square and product") {
    {
        Tape t;
        Var x = leaf(t, Tensor::scalar(3.0));
        Var y = mul(x, x);
        backward(y);
        CHECK(x.grad()[0] == doctest::Approx(6.0));
    }
    {
        Tape t;
        Var x = leaf(t, Tensor::scalar(2.0));
        Var y = leaf(t, Tensor::scalar(5.0));
        Var z = mul(x, y);
        backward(z);
        CHECK(x.grad()[0] == doctest::Approx(5.0));
        CHECK(y.grad()[0] == doctest::Approx(2.0));
    }
}

TEST_CASE("backward rejects non-scalar roots") {
    Tape t;
    Var x = leaf(t, Tensor({2}, {1.0, 2.0}));
    CHECK_THROWS_AS(backward(x), std::invalid_argument);
}

TEST_CASE("shape mismatch names both shapes") {
    Tape t;
    Var x = leaf(t, Tensor({2}));
    Var y = leaf(t, Tensor({3}));
    try {
        add(x, y);
        FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("(2)") != std::string::npos);
        CHECK(msg.find("(3)") != std::string::npos);
    }
}

TEST_CASE("unreached leaves report zero gradient") {
    Tape t;
    Var a = leaf(t, Tensor::scalar(1.5));
    Var b = leaf(t, Tensor::scalar(-2.0));
    Var loss = mul(a, a);
    backward(loss);
    CHECK(b.grad()[0] == 0.0);
}

namespace {

// Smooth composite chains so central differences are clean.
double composite_eval(const std::vector<double>& x, int variant,
                      std::vector<double>* grad_out) {
    Tape t;
    const int64_t n = static_cast<int64_t>(x.size());
    Var v = leaf(t, Tensor({n}, x));
    Var cur = v;
    for (int depth = 0; depth < 6; ++depth) {
        switch ((variant + depth) % 5) {
        case 0: cur = vln(add_const(mul(cur, cur), 1.1)); break;
        case 1: cur = vcos(scale(cur, 1.3)); break;
        case 2: cur = div(cur, add_const(mul(cur, cur), 1.5)); break;
        case 3: cur = sub(mul(cur, cur), scale(cur, 0.7)); break;
        case 4: cur = add(cur, vcos(cur)); break;
        }
    }
    Var loss = reduce_sum(cur);
    if (grad_out) {
        backward(loss);
        *grad_out = v.grad().vec();
    }
    return loss.value()[0];
}

} // namespace

TEST_CASE("chain rule on randomized composite graphs vs finite differences") {
    Rng rng(123);
    for (int variant = 0; variant < 8; ++variant) {
        std::vector<double> x(5);
        for (double& xi : x) xi = rng.uniform(-2.0, 2.0);
        std::vector<double> analytic;
        composite_eval(x, variant, &analytic);
        auto f = [variant](const std::vector<double>& p) { return composite_eval(p, variant, nullptr); };
        FdReport rep = fd_check(f, x, analytic, 1e-6, 1e-5);
        INFO("variant ", variant, " worst index ", rep.worst_index, " err ", rep.max_err);
        CHECK(rep.pass);
        CHECK(rep.checked > 0);
    }
}

TEST_CASE("linearity of backward") {
    Rng rng(5);
    std::vector<double> x(4);
    for (double& xi : x) xi = rng.uniform(0.5, 2.0);
    const double ca = 1.7, cb = -0.4;

    auto grads_of = [&x](int which) {
        Tape t;
        Var v = leaf(t, Tensor({4}, x));
        Var f = reduce_sum(vln(add_const(mul(v, v), 1.0)));
        Var g = reduce_sum(mul(v, vcos(v)));
        if (which == 0) backward(f);
        else backward(g);
        return v.grad().vec();
    };
    const std::vector<double> gf = grads_of(0);
    const std::vector<double> gg = grads_of(1);

    Tape t;
    Var v = leaf(t, Tensor({4}, x));
    Var f = reduce_sum(vln(add_const(mul(v, v), 1.0)));
    Var g = reduce_sum(mul(v, vcos(v)));
    Var combo = add(scale(f, ca), scale(g, cb));
    backward(combo);
    for (size_t i = 0; i < x.size(); ++i)
        CHECK(std::fabs(v.grad()[static_cast<int64_t>(i)] - (ca * gf[i] + cb * gg[i])) < 1e-12);
}

TEST_CASE("fd_check passes a quadratic at tight tolerance") {
    auto f = [](const std::vector<double>& p) {
        double s = 0.0;
        for (double v : p) s += 3.0 * v * v + 2.0 * v;
        return s;
    };
    std::vector<double> x = {0.3, -1.2, 0.9};
    std::vector<double> grad = {6.0 * x[0] + 2.0, 6.0 * x[1] + 2.0, 6.0 * x[2] + 2.0};
    FdReport rep = fd_check(f, x, grad, 1e-6, 1e-7);
    CHECK(rep.pass);
    CHECK(rep.skipped.empty());
}

TEST_CASE("fd_check skips a relu kink sitting exactly at zero") {
    auto f = [](const std::vector<double>& p) {
        double s = 0.0;
        for (double v : p) s += v > 0.0 ? v : 0.0;
        return s;
    };
    std::vector<double> x = {0.0, 1.0};
    std::vector<double> grad = {0.0, 1.0};  // subgradient 0 at the kink
    FdReport rep = fd_check(f, x, grad, 1e-6, 1e-5);
    REQUIRE(rep.skipped.size() == 1);
    CHECK(rep.skipped[0] == 0);
    CHECK(rep.pass);
}

TEST_CASE("mat_left and mat_right gradients check out") {
    Rng rng(77);
    Tensor e = Tensor::extraction(3);
    std::vector<double> x(2 * 3 * 3);
    for (double& xi : x) xi = rng.uniform(-1.0, 1.0);

    auto eval = [&e](const std::vector<double>& p, std::vector<double>* grad_out) {
        Tape t;
        Var f = leaf(t, Tensor({2, 3, 3}, p));
        Var m = masked_row_mean(e, f, 2.0);
        Var m2 = masked_col_mean(m, e, 2.0);
        Var loss = reduce_sum(mul(m2, m2));
        if (grad_out) {
            backward(loss);
            *grad_out = f.grad().vec();
        }
        return loss.value()[0];
    };
    std::vector<double> analytic;
    eval(x, &analytic);
    FdReport rep = fd_check([&eval](const std::vector<double>& p) { return eval(p, nullptr); }, x,
                            analytic, 1e-6, 1e-5);
    CHECK(rep.pass);
}

TEST_CASE("slice and concat round the gradient through the flat vector") {
    std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    auto eval = [](const std::vector<double>& p, std::vector<double>* grad_out) {
        Tape t;
        Var flat = leaf(t, Tensor({6}, p));
        Var w = slice(flat, 0, {2, 2});
        Var b = slice(flat, 4, {2});
        Var f = constant(t, Tensor({2, 1, 1}, {0.5, -0.25}));
        Var out = bias_first(b, contract_first(w, f));
        Var loss = reduce_sum(mul(out, out));
        if (grad_out) {
            backward(loss);
            *grad_out = flat.grad().vec();
        }
        return loss.value()[0];
    };
    std::vector<double> analytic;
    eval(x, &analytic);
    FdReport rep = fd_check([&eval](const std::vector<double>& p) { return eval(p, nullptr); }, x,
                            analytic, 1e-6, 1e-5);
    CHECK(rep.pass);
}
