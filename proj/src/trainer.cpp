#include "eemax/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include "eemax/objective.hpp"
#include "eemax/tape.hpp"

namespace eemax {

namespace {

constexpr uint64_t kStreamAlphaInit = 0xA1F0;
constexpr uint64_t kStreamBetaInit = 0xBE7A;
constexpr uint64_t kStreamShuffle = 0x511F;
constexpr uint64_t kStreamDraws = 0xD3A0;

constexpr int64_t kBlock = 8;  // samples per reduction block

void parallel_blocks(int64_t nblocks, int64_t threads, const std::function<void(int64_t)>& body) {
    if (threads <= 1 || nblocks <= 1) {
        for (int64_t b = 0; b < nblocks; ++b) body(b);
        return;
    }
    std::atomic<int64_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const int64_t b = next.fetch_add(1);
            if (b >= nblocks) return;
            body(b);
        }
    };
    std::vector<std::thread> pool;
    const int64_t n = std::min<int64_t>(threads, nblocks);
    pool.reserve(static_cast<size_t>(n - 1));
    for (int64_t t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

struct AdamState {
    std::vector<double> m, v;
    int64_t t = 0;
};

void ascent_step(OptimizerKind kind, double lr, std::vector<double>& params,
                 const std::vector<double>& grad, AdamState& adam) {
    if (kind == OptimizerKind::sga) {
        for (size_t i = 0; i < params.size(); ++i) params[i] += lr * grad[i];
        return;
    }
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++adam.t;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam.t));
    for (size_t i = 0; i < params.size(); ++i) {
        adam.m[i] = b1 * adam.m[i] + (1.0 - b1) * grad[i];
        adam.v[i] = b2 * adam.v[i] + (1.0 - b2) * grad[i] * grad[i];
        params[i] += lr * (adam.m[i] / c1) / (std::sqrt(adam.v[i] / c2) + eps);
    }
}

struct BlockAccum {
    std::vector<double> grad_alpha, grad_beta;
    double ee = 0.0, entropy = 0.0, penalty = 0.0;
    double beta_sum = 0.0, beta_max = -std::numeric_limits<double>::infinity();
    int64_t nan_index = -1;
};

} // namespace

double TrainConfig::resolved_entropy_stop(int64_t users) const {
    if (!std::isnan(entropy_stop)) return entropy_stop;
    return static_cast<double>(users) * std::log(10.0 * ell_min);
}

KappaState update_kappa(KappaState state, double mean_entropy, double delta_kappa,
                        int64_t window) {
    if (static_cast<int64_t>(state.history.size()) >= window) {
        double mean = 0.0;
        const size_t n = state.history.size();
        for (size_t i = n - static_cast<size_t>(window); i < n; ++i) mean += state.history[i];
        mean /= static_cast<double>(window);
        if (mean <= mean_entropy)
            state.kappa += delta_kappa;
        else
            state.kappa = std::max(0.0, state.kappa - delta_kappa / 2.0);
    }
    state.history.push_back(mean_entropy);
    if (static_cast<int64_t>(state.history.size()) > window)
        state.history.erase(state.history.begin());
    return state;
}

RegionState update_region(RegionState state, double mean_beta_w, double max_beta_w, double rho) {
    if (mean_beta_w < 0.5 * state.s && max_beta_w < 0.9 * state.s) state.s *= rho;
    return state;
}

std::vector<int64_t> epoch_order(uint64_t seed, int64_t epoch, int64_t n) {
    std::vector<int64_t> order(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    Rng rng = Rng::stream(seed, kStreamShuffle, static_cast<uint64_t>(epoch));
    for (int64_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<int64_t>(rng.uniform_index(static_cast<uint64_t>(i + 1)));
        std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
    return order;
}

TrainResult train(const Dataset& ds, const TrainConfig& cfg, const TrainState* resume,
                  TrainState* final_state) {
    if (ds.samples.empty()) throw std::invalid_argument("train: empty dataset");
    const int64_t users = ds.samples.front().gains.dim(0);
    for (const auto& s : ds.samples)
        if (s.gains.dim(0) != users)
            throw std::invalid_argument("train: inconsistent user counts in dataset");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (cfg.mc_samples < 1) throw std::invalid_argument("train: mc_samples must be >= 1");

    // An epoch cap of zero reports the initial state without touching it:
    // one measurement pass, logged as epoch 0.
    if (cfg.max_epochs == 0 && resume == nullptr) {
        TrainConfig pass = cfg;
        pass.max_epochs = 1;
        pass.learning_rate = 0.0;
        pass.optimizer = OptimizerKind::sga;
        pass.delta_kappa = 0.0;
        TrainResult r = train(ds, pass, nullptr, final_state);
        if (!r.metrics.empty()) r.metrics.front().epoch = 0;
        r.epochs_done = 0;
        r.stopped_by_entropy = false;
        r.kappa = KappaState{};
        if (final_state) {
            final_state->epochs_done = 0;
            final_state->kappa = KappaState{};
        }
        return r;
    }

    NetParams alpha, beta;
    AdamState adam_a, adam_b;
    KappaState kappa;
    RegionState region{cfg.p_max_w};
    int64_t start_epoch = 0;
    if (resume) {
        alpha = resume->alpha;
        beta = resume->beta;
        adam_a = {resume->m_alpha, resume->v_alpha, resume->adam_steps};
        adam_b = {resume->m_beta, resume->v_beta, resume->adam_steps};
        kappa = resume->kappa;
        region = resume->region;
        start_epoch = resume->epochs_done;
    } else {
        Rng rng_a = Rng::stream(cfg.rng_seed, kStreamAlphaInit);
        Rng rng_b = Rng::stream(cfg.rng_seed, kStreamBetaInit);
        // Heads work in units of s, so the init covers [0, 1] from outside.
        alpha = init_params(cfg.num_layers, cfg.feature_dim, Head::alpha, rng_a, 1.0);
        beta = init_params(cfg.num_layers, cfg.feature_dim, Head::beta, rng_b, 1.0);
        const size_t np = alpha.flat.size();
        adam_a = {std::vector<double>(np, 0.0), std::vector<double>(np, 0.0), 0};
        adam_b = {std::vector<double>(np, 0.0), std::vector<double>(np, 0.0), 0};
    }
    const int64_t nparams = alpha.param_count();
    const int64_t n = static_cast<int64_t>(ds.samples.size());
    const double h0 = cfg.resolved_entropy_stop(users);
    const int64_t threads =
        cfg.threads > 0 ? cfg.threads
                        : std::max<int64_t>(1, static_cast<int64_t>(std::thread::hardware_concurrency()));

    TrainResult result;
    result.kappa = kappa;
    result.region = region;

    for (int64_t epoch = start_epoch + 1; epoch <= cfg.max_epochs; ++epoch) {
        const double s = region.s;
        const double kap = kappa.kappa;

        // Epoch accumulators over every sample, independent of batching.
        double ep_ee = 0.0, ep_entropy = 0.0, ep_penalty = 0.0;
        double ep_beta_sum = 0.0, ep_beta_max = -std::numeric_limits<double>::infinity();

        std::vector<int64_t> order = epoch_order(cfg.rng_seed, epoch, n);
        for (int64_t batch_lo = 0; batch_lo < n; batch_lo += cfg.batch_size) {
            const int64_t batch_hi = std::min<int64_t>(batch_lo + cfg.batch_size, n);
            std::vector<int64_t> batch(order.begin() + batch_lo, order.begin() + batch_hi);
            // Accumulation runs in ascending dataset order so the result is
            // independent of the shuffle inside a batch and of threading.
            std::sort(batch.begin(), batch.end());
            const int64_t bsize = batch_hi - batch_lo;
            const int64_t nblocks = (bsize + kBlock - 1) / kBlock;

            std::vector<BlockAccum> blocks(static_cast<size_t>(nblocks));
            parallel_blocks(nblocks, threads, [&](int64_t bi) {
                BlockAccum& acc = blocks[static_cast<size_t>(bi)];
                acc.grad_alpha.assign(static_cast<size_t>(nparams), 0.0);
                acc.grad_beta.assign(static_cast<size_t>(nparams), 0.0);
                const int64_t lo = bi * kBlock, hi = std::min<int64_t>(lo + kBlock, bsize);
                for (int64_t k = lo; k < hi; ++k) {
                    const int64_t idx = batch[static_cast<size_t>(k)];
                    const ChannelMatrix& sample = ds.samples[static_cast<size_t>(idx)];

                    Tape tape;
                    Var aflat = leaf(tape, Tensor({nparams}, alpha.flat));
                    Var bflat = leaf(tape, Tensor({nparams}, beta.flat));
                    Var a_hat = net_forward_tape(tape, aflat, alpha, sample.gains, Head::alpha,
                                                 cfg.ell_min);
                    Var ell_hat = cfg.fix_ell_min
                                      ? constant(tape, Tensor::full({users}, cfg.ell_min))
                                      : net_forward_tape(tape, bflat, beta, sample.gains,
                                                         Head::beta, cfg.ell_min);

                    Tensor u;
                    if (std::isnan(cfg.fixed_u)) {
                        Rng draw_rng = Rng::stream(cfg.rng_seed, kStreamDraws,
                                                   static_cast<uint64_t>(epoch),
                                                   static_cast<uint64_t>(idx));
                        u = draw_box_uniforms(draw_rng, users, cfg.mc_samples);
                    } else {
                        u = Tensor::full({users, cfg.mc_samples}, cfg.fixed_u);
                    }

                    // J is evaluated in normalized power units: gains and the
                    // amplifier slope absorb the scale s.
                    Tensor gains_scaled = sample.gains;
                    for (int64_t e = 0; e < gains_scaled.numel(); ++e) gains_scaled[e] *= s;

                    SurrogateConfig scfg;
                    scfg.mc_samples = cfg.mc_samples;
                    scfg.kappa = kap;
                    scfg.epsilon = cfg.epsilon;
                    scfg.p_min = 0.0;
                    scfg.p_max = 1.0;
                    SurrogateParts parts = build_ee_surrogate(tape, gains_scaled, cfg.mu * s,
                                                              cfg.p_c, a_hat, ell_hat, u, scfg);
                    bool finite = std::isfinite(parts.total.value()[0]);
                    for (int64_t i = 0; finite && i < users; ++i)
                        finite = std::isfinite(a_hat.value()[i]) && std::isfinite(ell_hat.value()[i]);
                    if (!finite) {
                        if (acc.nan_index < 0 || idx < acc.nan_index) acc.nan_index = idx;
                        continue;
                    }
                    tape.backward(parts.total.id);
                    if (tape.node(aflat.id).has_grad) {
                        const Tensor& ga = aflat.grad();
                        for (int64_t i = 0; i < nparams; ++i) acc.grad_alpha[static_cast<size_t>(i)] += ga[i];
                    }
                    if (!cfg.fix_ell_min && tape.node(bflat.id).has_grad) {
                        const Tensor& gb = bflat.grad();
                        for (int64_t i = 0; i < nparams; ++i) acc.grad_beta[static_cast<size_t>(i)] += gb[i];
                    }

                    LossTerms lt = parts.values();
                    acc.entropy += lt.entropy;

                    // The logged penalty is the summed-deviation form, the
                    // quantity the training curves plot; the loss itself
                    // penalizes per-component hinge distances.
                    const Tensor& ah = a_hat.value();
                    const Tensor& lh_pen = ell_hat.value();
                    std::vector<double> a_vec(static_cast<size_t>(users)), b_vec(static_cast<size_t>(users));
                    for (int64_t i = 0; i < users; ++i) {
                        a_vec[static_cast<size_t>(i)] = ah[i];
                        b_vec[static_cast<size_t>(i)] = ah[i] + lh_pen[i];
                    }
                    acc.penalty += penalty_low_literal(a_vec, 0.0) + penalty_high_literal(b_vec, 1.0);

                    std::vector<double> p_w(static_cast<size_t>(users));
                    for (int64_t i = 0; i < users; ++i)
                        p_w[static_cast<size_t>(i)] = std::clamp(s * ah[i], 0.0, s);
                    acc.ee += report_ee(sample.gains, p_w, cfg.mu, cfg.p_c, cfg.bandwidth_hz);

                    const Tensor& lh = ell_hat.value();
                    for (int64_t i = 0; i < users; ++i) {
                        acc.beta_sum += s * lh[i];
                        acc.beta_max = std::max(acc.beta_max, s * lh[i]);
                    }
                }
            });

            int64_t nan_index = -1;
            for (const BlockAccum& acc : blocks)
                if (acc.nan_index >= 0 && (nan_index < 0 || acc.nan_index < nan_index))
                    nan_index = acc.nan_index;
            if (nan_index >= 0) throw NanLossError(nan_index, epoch);

            std::vector<double> grad_a(static_cast<size_t>(nparams), 0.0);
            std::vector<double> grad_b(static_cast<size_t>(nparams), 0.0);
            for (const BlockAccum& acc : blocks) {
                for (int64_t i = 0; i < nparams; ++i) grad_a[static_cast<size_t>(i)] += acc.grad_alpha[static_cast<size_t>(i)];
                for (int64_t i = 0; i < nparams; ++i) grad_b[static_cast<size_t>(i)] += acc.grad_beta[static_cast<size_t>(i)];
                ep_ee += acc.ee;
                ep_entropy += acc.entropy;
                ep_penalty += acc.penalty;
                ep_beta_sum += acc.beta_sum;
                ep_beta_max = std::max(ep_beta_max, acc.beta_max);
            }
            const double inv = 1.0 / static_cast<double>(bsize);
            for (double& g : grad_a) g *= inv;
            for (double& g : grad_b) g *= inv;

            ascent_step(cfg.optimizer, cfg.learning_rate, alpha.flat, grad_a, adam_a);
            ascent_step(cfg.optimizer, cfg.learning_rate, beta.flat, grad_b, adam_b);
        }

        EpochMetrics em;
        em.epoch = epoch;
        em.mean_ee_mbit_per_j = ep_ee / static_cast<double>(n);
        em.mean_entropy_nats = ep_entropy / static_cast<double>(n);
        em.mean_penalty = ep_penalty / static_cast<double>(n);
        em.kappa = kap;
        em.s_watts = s;
        result.metrics.push_back(em);

        kappa = update_kappa(std::move(kappa), em.mean_entropy_nats, cfg.delta_kappa,
                             cfg.kappa_window);
        if (cfg.region_adaptation) {
            const double mean_beta = ep_beta_sum / static_cast<double>(n * users);
            region = update_region(region, mean_beta, ep_beta_max, cfg.region_rho);
        }
        result.epochs_done = epoch;
        if (em.mean_entropy_nats < h0) {
            result.stopped_by_entropy = true;
            break;
        }
    }

    result.alpha = alpha;
    result.beta = beta;
    result.kappa = kappa;
    result.region = region;
    if (final_state) {
        final_state->alpha = alpha;
        final_state->beta = beta;
        final_state->m_alpha = adam_a.m;
        final_state->v_alpha = adam_a.v;
        final_state->m_beta = adam_b.m;
        final_state->v_beta = adam_b.v;
        final_state->adam_steps = adam_a.t;
        final_state->kappa = kappa;
        final_state->region = region;
        final_state->epochs_done = result.epochs_done;
    }
    return result;
}

EvalSummary evaluate(const NetParams& alpha, const Dataset& test, double s_watts, double mu,
                     double p_c, double bandwidth_hz, const std::vector<double>* oracle_ee) {
    if (test.samples.empty()) throw std::invalid_argument("evaluate: empty test set");
    if (oracle_ee && oracle_ee->size() != test.samples.size())
        throw std::invalid_argument("evaluate: oracle results count does not match test set");

    EvalSummary summary;
    double oracle_sum = 0.0;
    for (size_t k = 0; k < test.samples.size(); ++k) {
        const ChannelMatrix& g = test.samples[k];
        const std::vector<double> a_hat = net_forward(g.gains, alpha, Head::alpha, 0.0);
        std::vector<double> p(a_hat.size());
        for (size_t i = 0; i < p.size(); ++i) p[i] = std::clamp(s_watts * a_hat[i], 0.0, s_watts);
        const double ee = report_ee(g.gains, p, mu, p_c, bandwidth_hz);
        summary.ee.push_back(ee);
        summary.powers.push_back(std::move(p));
        if (oracle_ee) {
            const double ratio = ee / (*oracle_ee)[k];
            summary.ratios.push_back(ratio);
            oracle_sum += (*oracle_ee)[k];
        }
    }
    double ee_sum = 0.0;
    for (double v : summary.ee) ee_sum += v;
    summary.mean_ee = ee_sum / static_cast<double>(summary.ee.size());
    if (oracle_ee) {
        double rsum = 0.0;
        for (double v : summary.ratios) rsum += v;
        summary.mean_ratio = rsum / static_cast<double>(summary.ratios.size());
        summary.ratio_of_means = ee_sum / oracle_sum;
    }
    return summary;
}

void save_train_state(const TrainState& st, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_train_state: cannot open " + path);
    out << "EEMAX-STATE v1 L=" << st.alpha.num_layers << " d=" << st.alpha.feature_dim
        << " epochs=" << st.epochs_done << " steps=" << st.adam_steps
        << " hist=" << st.kappa.history.size() << "\n";
    auto put = [&out](const std::vector<double>& v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(sizeof(double) * v.size()));
    };
    const double scalars[2] = {st.kappa.kappa, st.region.s};
    out.write(reinterpret_cast<const char*>(scalars), sizeof(scalars));
    put(st.kappa.history);
    put(st.alpha.flat);
    put(st.beta.flat);
    put(st.m_alpha);
    put(st.v_alpha);
    put(st.m_beta);
    put(st.v_beta);
    if (!out) throw std::runtime_error("save_train_state: write failed for " + path);
}

TrainState load_train_state(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_train_state: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("load_train_state: missing header");
    std::istringstream hs(header);
    std::string magic, version, tok;
    hs >> magic >> version;
    if (magic != "EEMAX-STATE" || version != "v1")
        throw std::runtime_error("load_train_state: malformed header '" + header + "'");
    TrainState st;
    int64_t hist = -1;
    st.alpha.num_layers = -1;
    st.alpha.feature_dim = -1;
    while (hs >> tok) {
        if (tok.rfind("L=", 0) == 0) st.alpha.num_layers = std::stoll(tok.substr(2));
        else if (tok.rfind("d=", 0) == 0) st.alpha.feature_dim = std::stoll(tok.substr(2));
        else if (tok.rfind("epochs=", 0) == 0) st.epochs_done = std::stoll(tok.substr(7));
        else if (tok.rfind("steps=", 0) == 0) st.adam_steps = std::stoll(tok.substr(6));
        else if (tok.rfind("hist=", 0) == 0) hist = std::stoll(tok.substr(5));
        else throw std::runtime_error("load_train_state: unexpected header field '" + tok + "'");
    }
    if (st.alpha.num_layers < 2 || st.alpha.feature_dim < 1 || hist < 0)
        throw std::runtime_error("load_train_state: malformed header '" + header + "'");
    st.beta.num_layers = st.alpha.num_layers;
    st.beta.feature_dim = st.alpha.feature_dim;
    const size_t np = static_cast<size_t>(st.alpha.param_count());
    auto get = [&in, &path](std::vector<double>& v, size_t count) {
        v.resize(count);
        in.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(sizeof(double) * count));
        if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * count))
            throw std::runtime_error("load_train_state: truncated payload in " + path);
    };
    double scalars[2];
    in.read(reinterpret_cast<char*>(scalars), sizeof(scalars));
    if (in.gcount() != sizeof(scalars))
        throw std::runtime_error("load_train_state: truncated payload in " + path);
    st.kappa.kappa = scalars[0];
    st.region.s = scalars[1];
    get(st.kappa.history, static_cast<size_t>(hist));
    get(st.alpha.flat, np);
    get(st.beta.flat, np);
    get(st.m_alpha, np);
    get(st.v_alpha, np);
    get(st.m_beta, np);
    get(st.v_beta, np);
    return st;
}

// -- Rastrigin ----------------------------------------------------------------

double rastrigin(const std::vector<double>& x, double a_param) {
    double f = a_param * static_cast<double>(x.size());
    for (double v : x) f += v * v - a_param * std::cos(2.0 * M_PI * v);
    return f;
}

RastriginTrace rastrigin_demo(const RastriginConfig& cfg) {
    if (cfg.dims < 1) throw std::invalid_argument("rastrigin_demo: need at least one dimension");
    const int64_t n = cfg.dims;
    Rng init_rng = Rng::stream(cfg.rng_seed, 0);
    std::vector<double> x0(static_cast<size_t>(n));
    for (double& v : x0) v = init_rng.uniform(cfg.init_lo, cfg.init_hi);

    RastriginTrace trace;
    trace.start = x0;

    // Box method: plain gradient ascent on -E[f] - kappa * H over (a, ell).
    // Plain steps are scale-proportional, which keeps the box midpoint
    // pinned through the width bands where the smoothed cosine ripple
    // repels it; adaptive steps amplify that instability at full rate.
    {
        std::vector<double> a(x0), ell_raw(static_cast<size_t>(n), 2.0 * cfg.init_halfwidth);
        for (size_t i = 0; i < a.size(); ++i) a[i] -= cfg.init_halfwidth;
        AdamState unused;
        KappaState kappa;
        const double h0 = static_cast<double>(n) * std::log(10.0 * cfg.ell_min);

        for (int64_t it = 1; it <= cfg.iterations; ++it) {
            Rng draw_rng = Rng::stream(cfg.rng_seed, 1, static_cast<uint64_t>(it));
            const Tensor u = draw_box_uniforms(draw_rng, n, cfg.mc_samples);

            Tape tape;
            Var av = leaf(tape, Tensor({n}, a));
            Var lraw = leaf(tape, Tensor({n}, ell_raw));
            Var ell = clamp_min(lraw, cfg.ell_min);
            Var x = box_power_samples(tape, av, ell, u);
            Var term = sub(mul(x, x), scale(vcos(scale(x, 2.0 * M_PI)), cfg.a_param));
            Var mean_f = add_const(
                scale(reduce_sum(term), 1.0 / static_cast<double>(cfg.mc_samples)),
                cfg.a_param * static_cast<double>(n));
            Var entropy = reduce_sum(vln(ell));
            Var total = sub(scale(mean_f, -1.0), scale(entropy, kappa.kappa));
            tape.backward(total.id);

            ascent_step(OptimizerKind::sga, cfg.lr_box, a, av.grad().vec(), unused);
            ascent_step(OptimizerKind::sga, cfg.lr_ell, ell_raw, lraw.grad().vec(), unused);

            kappa = update_kappa(std::move(kappa), entropy.value()[0], cfg.delta_kappa,
                                 cfg.kappa_window);

            std::vector<double> mid(static_cast<size_t>(n));
            for (int64_t i = 0; i < n; ++i)
                mid[static_cast<size_t>(i)] =
                    a[static_cast<size_t>(i)] + std::max(ell_raw[static_cast<size_t>(i)], cfg.ell_min) / 2.0;
            trace.f_box.push_back(rastrigin(mid, cfg.a_param));
            if (entropy.value()[0] < h0) break;
        }
        trace.final_f_box = trace.f_box.back();
    }

    // Plain gradient descent on f from the same start.
    {
        std::vector<double> x(x0);
        for (int64_t it = 1; it <= cfg.iterations; ++it) {
            double gmax = 0.0;
            for (size_t i = 0; i < x.size(); ++i) {
                const double g = 2.0 * x[i] + 2.0 * M_PI * cfg.a_param * std::sin(2.0 * M_PI * x[i]);
                x[i] -= cfg.lr_gd * g;
                gmax = std::max(gmax, std::fabs(g));
            }
            trace.f_gd.push_back(rastrigin(x, cfg.a_param));
            if (gmax < 1e-12) break;
        }
        trace.final_f_gd = trace.f_gd.back();
    }

    return trace;
}

} // namespace eemax
