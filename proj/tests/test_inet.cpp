#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <vector>

#include "eemax/inet.hpp"
#include "eemax/rng.hpp"

using namespace eemax;

namespace {

Tensor random_gains(int64_t users, Rng& rng) {
    Tensor g({users, users});
    for (int64_t k = 0; k < g.numel(); ++k) g[k] = std::exp(rng.uniform(-4.0, 6.0));
    return g;
}

NetParams random_params(int64_t layers, int64_t dim, Rng& rng, double scale = 0.3) {
    NetParams p;
    p.num_layers = layers;
    p.feature_dim = dim;
    p.flat.resize(static_cast<size_t>(p.param_count()));
    for (double& v : p.flat) v = rng.uniform(-scale, scale);
    return p;
}

Tensor random_permutation(int64_t n, Rng& rng) {
    std::vector<int64_t> sigma(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) sigma[static_cast<size_t>(i)] = i;
    for (int64_t i = n - 1; i > 0; --i)
        std::swap(sigma[static_cast<size_t>(i)],
                  sigma[static_cast<size_t>(rng.uniform_index(static_cast<uint64_t>(i + 1)))]);
    Tensor p({n, n});
    for (int64_t i = 0; i < n; ++i) p.at2(i, sigma[static_cast<size_t>(i)]) = 1.0;
    return p;
}

// Reference category layer evaluated set-by-set: for every channel (i, j),
// category 1 is the channel itself, category 2 the same transmitter at the
// other receivers, category 3 the other transmitters at the same receiver,
// category 4 the rest; each category output is the mean of ReLU(W f + b)
// over its set. Deliberately index based and quadratic in I^2.
Tensor reference_layer(const Tensor& features, const NetParams& meta, int64_t layer,
                       const Tensor& gains) {
    const int64_t users = gains.dim(0);
    const int64_t d = meta.feature_dim;
    const int64_t in_dim = meta.layer_in_dim(layer);
    Tensor out({1 + 4 * d, users, users});

    auto affine_relu = [&](int64_t category, int64_t i, int64_t j, std::vector<double>& dst) {
        const int64_t w = meta.weight_offset(layer, category);
        const int64_t b = meta.bias_offset(layer, category);
        for (int64_t r = 0; r < d; ++r) {
            double acc = meta.flat[static_cast<size_t>(b + r)];
            for (int64_t c = 0; c < in_dim; ++c)
                acc += meta.flat[static_cast<size_t>(w + r * in_dim + c)] * features.at3(c, i, j);
            dst[static_cast<size_t>(r)] = acc > 0.0 ? acc : 0.0;
        }
    };

    std::vector<double> tmp(static_cast<size_t>(d));
    for (int64_t i = 0; i < users; ++i)
        for (int64_t j = 0; j < users; ++j) {
            out.at3(0, i, j) = std::log10(gains.at2(i, j));

            affine_relu(0, i, j, tmp);
            for (int64_t r = 0; r < d; ++r) out.at3(1 + r, i, j) = tmp[static_cast<size_t>(r)];

            std::vector<double> acc2(static_cast<size_t>(d), 0.0);
            for (int64_t k = 0; k < users; ++k) {
                if (k == i) continue;
                affine_relu(1, k, j, tmp);
                for (int64_t r = 0; r < d; ++r) acc2[static_cast<size_t>(r)] += tmp[static_cast<size_t>(r)];
            }
            std::vector<double> acc3(static_cast<size_t>(d), 0.0);
            for (int64_t k = 0; k < users; ++k) {
                if (k == j) continue;
                affine_relu(2, i, k, tmp);
                for (int64_t r = 0; r < d; ++r) acc3[static_cast<size_t>(r)] += tmp[static_cast<size_t>(r)];
            }
            std::vector<double> acc4(static_cast<size_t>(d), 0.0);
            for (int64_t k = 0; k < users; ++k) {
                if (k == i) continue;
                for (int64_t p = 0; p < users; ++p) {
                    if (p == j) continue;
                    affine_relu(3, k, p, tmp);
                    for (int64_t r = 0; r < d; ++r) acc4[static_cast<size_t>(r)] += tmp[static_cast<size_t>(r)];
                }
            }
            const double over = users > 1 ? static_cast<double>(users - 1) : 1.0;
            for (int64_t r = 0; r < d; ++r) {
                out.at3(1 + d + r, i, j) = acc2[static_cast<size_t>(r)] / over;
                out.at3(1 + 2 * d + r, i, j) = acc3[static_cast<size_t>(r)] / over;
                out.at3(1 + 3 * d + r, i, j) = acc4[static_cast<size_t>(r)] / (over * over);
            }
        }
    return out;
}

Tensor run_layer(const Tensor& features, const NetParams& meta, int64_t layer,
                 const Tensor& gains) {
    Tape tape;
    Var flat = leaf(tape, Tensor({meta.param_count()}, meta.flat));
    Var f = constant(tape, features);
    return layer_forward(tape, f, flat, meta, layer, gains).value();
}

} // namespace

TEST_CASE("init_input closed forms") {
    Tensor ones = Tensor::full({3, 3}, 1.0);
    Tensor f = init_input(ones);
    for (int64_t k = 0; k < f.numel(); ++k) CHECK(f[k] == 0.0);

    Tensor powers({2, 2}, {1e-3, 1e2, 1e0, 1e6});
    Tensor fp = init_input(powers);
    CHECK(fp[0] == doctest::Approx(-3.0));
    CHECK(fp[1] == doctest::Approx(2.0));
    CHECK(fp[2] == doctest::Approx(0.0));
    CHECK(fp[3] == doctest::Approx(6.0));

    Rng rng(2);
    Tensor g = random_gains(4, rng);
    Tensor fg = init_input(g);
    for (int64_t i = 0; i < 4; ++i)
        for (int64_t j = 0; j < 4; ++j)
            CHECK(fg.at3(0, i, j) == doctest::Approx(std::log10(g.at2(i, j))).epsilon(1e-14));

    Tensor bad({1, 1}, {0.0});
    CHECK_THROWS_AS(init_input(bad), std::invalid_argument);
}

TEST_CASE("zero parameters give concat(log10 G, zeros)") {
    Rng rng(5);
    Tensor g = random_gains(3, rng);
    NetParams meta;
    meta.num_layers = 5;
    meta.feature_dim = 4;
    meta.flat.assign(static_cast<size_t>(meta.param_count()), 0.0);
    Tensor out = run_layer(init_input(g), meta, 1, g);
    REQUIRE(out.dim(0) == 1 + 4 * 4);
    for (int64_t i = 0; i < 3; ++i)
        for (int64_t j = 0; j < 3; ++j) {
            CHECK(out.at3(0, i, j) == doctest::Approx(std::log10(g.at2(i, j))));
            for (int64_t c = 1; c < out.dim(0); ++c) CHECK(out.at3(c, i, j) == 0.0);
        }
}

TEST_CASE("tensor layer matches the set-by-set reference") {
    Rng rng(11);
    for (int64_t users : {2, 3, 5}) {
        Tensor g = random_gains(users, rng);
        NetParams meta = random_params(3, 6, rng);
        Tensor f1 = init_input(g);
        Tensor got1 = run_layer(f1, meta, 1, g);
        Tensor want1 = reference_layer(f1, meta, 1, g);
        REQUIRE(got1.numel() == want1.numel());
        for (int64_t k = 0; k < got1.numel(); ++k)
            CHECK(got1[k] == doctest::Approx(want1[k]).epsilon(1e-12));

        Tensor got2 = run_layer(got1, meta, 2, g);
        Tensor want2 = reference_layer(want1, meta, 2, g);
        for (int64_t k = 0; k < got2.numel(); ++k)
            CHECK(got2[k] == doctest::Approx(want2[k]).epsilon(1e-12));
    }
}

TEST_CASE("gain channel is passed through every layer") {
    Rng rng(13);
    Tensor g = random_gains(4, rng);
    NetParams meta = random_params(4, 5, rng);
    Tensor f = init_input(g);
    for (int64_t layer = 1; layer < meta.num_layers; ++layer) {
        f = run_layer(f, meta, layer, g);
        for (int64_t i = 0; i < 4; ++i)
            for (int64_t j = 0; j < 4; ++j)
                CHECK(f.at3(0, i, j) == doctest::Approx(std::log10(g.at2(i, j))));
    }
}

TEST_CASE("beta head clamps at ell_min") {
    Rng rng(17);
    Tensor g = random_gains(3, rng);
    NetParams params = random_params(5, 4, rng, 0.0);  // all zero
    params.flat[static_cast<size_t>(params.final_bias_offset())] = -5.0;
    const std::vector<double> out = net_forward(g, params, Head::beta, 1e-6);
    for (double v : out) CHECK(v == 1e-6);
    const std::vector<double> raw = net_forward(g, params, Head::alpha, 1e-6);
    for (double v : raw) CHECK(v == doctest::Approx(-5.0));
}

TEST_CASE("output length equals the user count") {
    Rng rng(19);
    for (int64_t users : {2, 4, 7}) {
        Tensor g = random_gains(users, rng);
        NetParams params = random_params(5, 8, rng);
        CHECK(net_forward(g, params, Head::alpha, 1e-6).size() == static_cast<size_t>(users));
    }
}

TEST_CASE("parameter count reproduces the paper total") {
    CHECK(NetParams::param_count(5, 20) == 19922);
    CHECK(2 * NetParams::param_count(5, 20) == 39844);
    // formula cross-check: 4(20*1+20) + 3*4(20*81+20) + (81+1)
    CHECK(NetParams::param_count(5, 20) == 4 * (20 + 20) + 3 * 4 * (20 * 81 + 20) + 82);
}

TEST_CASE("permute closed forms") {
    Tensor g({3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    Tensor id = Tensor::eye(3);
    Tensor same = permute(g, id);
    CHECK(std::memcmp(same.data(), g.data(), sizeof(double) * 9) == 0);

    // Swapping the second and third rows and columns.
    Tensor p({3, 3}, {1, 0, 0, 0, 0, 1, 0, 1, 0});
    Tensor swapped = permute(g, p);
    Tensor expected({3, 3}, {1, 3, 2, 7, 9, 8, 4, 6, 5});
    for (int64_t k = 0; k < 9; ++k) CHECK(swapped[k] == expected[k]);

    Tensor pt({3, 3});
    for (int64_t i = 0; i < 3; ++i)
        for (int64_t j = 0; j < 3; ++j) pt.at2(i, j) = p.at2(j, i);
    Tensor back = permute(swapped, pt);
    CHECK(std::memcmp(back.data(), g.data(), sizeof(double) * 9) == 0);

    std::vector<double> v = {10, 20, 30};
    std::vector<double> pv = permute_vec(v, p);
    CHECK(pv[0] == 10);
    CHECK(pv[1] == 30);
    CHECK(pv[2] == 20);
}

TEST_CASE("invalid permutation matrices are rejected") {
    Tensor bad1({2, 2}, {1, 0, 1, 0});  // column sums wrong
    Tensor bad2({2, 2}, {0.5, 0.5, 0.5, 0.5});
    CHECK_THROWS_AS(perm_from_matrix(bad1), std::invalid_argument);
    CHECK_THROWS_AS(perm_from_matrix(bad2), std::invalid_argument);
}

TEST_CASE("extraction matrix commutes with permutations exactly") {
    Rng rng(23);
    for (int64_t n : {2, 4, 7}) {
        Tensor p = random_permutation(n, rng);
        Tensor e = Tensor::extraction(n);
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < n; ++j) {
                double ep = 0.0, pe = 0.0;
                for (int64_t k = 0; k < n; ++k) {
                    ep += e.at2(i, k) * p.at2(k, j);
                    pe += p.at2(i, k) * e.at2(k, j);
                }
                CHECK(ep == pe);
            }
    }
}

TEST_CASE("each category slice of a layer is permutation-equivariant") {
    Rng rng(29);
    const int64_t users = 4;
    Tensor g = random_gains(users, rng);
    NetParams meta = random_params(3, 5, rng);
    Tensor p = random_permutation(users, rng);
    const int64_t d = meta.feature_dim;

    Tensor out = run_layer(init_input(g), meta, 1, g);
    Tensor gp = permute(g, p);
    Tensor out_perm = run_layer(init_input(gp), meta, 1, gp);
    Tensor expected = permute_features(out, p);

    const char* names[5] = {"gain", "cat1", "cat2", "cat3", "cat4"};
    for (int64_t cat = 0; cat < 5; ++cat) {
        const int64_t lo = cat == 0 ? 0 : 1 + (cat - 1) * d;
        const int64_t hi = cat == 0 ? 1 : 1 + cat * d;
        double worst = 0.0;
        for (int64_t c = lo; c < hi; ++c)
            for (int64_t i = 0; i < users; ++i)
                for (int64_t j = 0; j < users; ++j)
                    worst = std::max(worst, std::fabs(out_perm.at3(c, i, j) - expected.at3(c, i, j)));
        INFO("category ", names[cat]);
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("network is permutation-equivariant") {
    Rng rng(31);
    for (int64_t users : {2, 4, 7}) {
        for (int rep = 0; rep < 5; ++rep) {
            Tensor g = random_gains(users, rng);
            NetParams params = random_params(4, 6, rng);
            Tensor p = random_permutation(users, rng);
            const std::vector<double> direct = net_forward(permute(g, p), params, Head::alpha, 1e-6);
            const std::vector<double> expected =
                permute_vec(net_forward(g, params, Head::alpha, 1e-6), p);
            for (size_t k = 0; k < direct.size(); ++k)
                CHECK(std::fabs(direct[k] - expected[k]) <= 1e-9);
        }
    }
}

TEST_CASE("message-passing form equals the tensor form") {
    Rng rng(37);
    for (int64_t users : {2, 3, 4, 7}) {
        Tensor g = random_gains(users, rng);
        NetParams params = random_params(5, 6, rng);
        for (Head head : {Head::alpha, Head::beta}) {
            const std::vector<double> tensor_out = net_forward(g, params, head, 1e-6);
            const std::vector<double> mp_out = mp_forward(g, params, head, 1e-6);
            REQUIRE(tensor_out.size() == mp_out.size());
            for (size_t k = 0; k < tensor_out.size(); ++k)
                CHECK(std::fabs(tensor_out[k] - mp_out[k]) <= 1e-9);
        }
    }
}

TEST_CASE("single-user network stays finite with empty categories") {
    Rng rng(41);
    Tensor g({1, 1}, {123.0});
    NetParams params = random_params(5, 4, rng);
    const std::vector<double> out = net_forward(g, params, Head::alpha, 1e-6);
    REQUIRE(out.size() == 1);
    CHECK(std::isfinite(out[0]));
    const std::vector<double> mp = mp_forward(g, params, Head::alpha, 1e-6);
    CHECK(std::fabs(out[0] - mp[0]) <= 1e-12);
}

TEST_CASE("zero-weight network outputs the bias through both forms") {
    Tensor g({2, 2}, {2.0, 3.0, 4.0, 5.0});
    NetParams params;
    params.num_layers = 2;
    params.feature_dim = 3;
    params.flat.assign(static_cast<size_t>(params.param_count()), 0.0);
    params.flat[static_cast<size_t>(params.final_bias_offset())] = 0.75;
    for (Head head : {Head::alpha, Head::beta}) {
        const std::vector<double> t = net_forward(g, params, head, 1e-6);
        const std::vector<double> m = mp_forward(g, params, head, 1e-6);
        for (size_t k = 0; k < 2; ++k) {
            CHECK(t[k] == 0.75);
            CHECK(m[k] == 0.75);
        }
    }
}

TEST_CASE("checkpoint round trip is lossless") {
    Rng rng(43);
    NetParams params = random_params(5, 20, rng);
    const std::string path = "inet_ckpt.eemaxnet";
    save_net(params, path);
    NetParams back = load_net(path);
    CHECK(back.num_layers == params.num_layers);
    CHECK(back.feature_dim == params.feature_dim);
    REQUIRE(back.flat.size() == params.flat.size());
    CHECK(std::memcmp(back.flat.data(), params.flat.data(), sizeof(double) * params.flat.size()) == 0);
    std::remove(path.c_str());

    const std::string bad = "inet_bad.eemaxnet";
    {
        std::FILE* f = std::fopen(bad.c_str(), "wb");
        std::fputs("EEMAX-NOT v1 L=5 d=20\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_net(bad), std::runtime_error);
    std::remove(bad.c_str());
}

TEST_CASE("initialization keeps the box outside the feasible region") {
    Rng rng(47);
    NetParams alpha = init_params(5, 8, Head::alpha, rng, 1.0);
    NetParams beta = init_params(5, 8, Head::beta, rng, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        Tensor g = random_gains(4, rng);
        for (double v : net_forward(g, alpha, Head::alpha, 1e-6)) CHECK(v < 0.0);
        for (double v : net_forward(g, beta, Head::beta, 1e-6)) CHECK(v > 1.0);
    }
}
