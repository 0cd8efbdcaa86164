#include "eemax/inet.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace eemax {

int64_t NetParams::param_count(int64_t num_layers, int64_t feature_dim) {
    if (num_layers < 2 || feature_dim < 1)
        throw std::invalid_argument("NetParams: need at least 2 layers and width 1");
    const int64_t d = feature_dim;
    const int64_t wide = 1 + 4 * d;
    int64_t count = 4 * (d * 1 + d);                       // layer 1
    count += (num_layers - 2) * 4 * (d * wide + d);        // layers 2..L-1
    count += wide + 1;                                     // final affine
    return count;
}

namespace {

int64_t hidden_layer_size(const NetParams& m, int64_t layer) {
    return 4 * (m.feature_dim * m.layer_in_dim(layer) + m.feature_dim);
}

int64_t layer_base(const NetParams& m, int64_t layer) {
    int64_t off = 0;
    for (int64_t l = 1; l < layer; ++l) off += hidden_layer_size(m, l);
    return off;
}

} // namespace

int64_t NetParams::weight_offset(int64_t layer, int64_t category) const {
    const int64_t per_cat = feature_dim * layer_in_dim(layer) + feature_dim;
    return layer_base(*this, layer) + category * per_cat;
}

int64_t NetParams::bias_offset(int64_t layer, int64_t category) const {
    return weight_offset(layer, category) + feature_dim * layer_in_dim(layer);
}

int64_t NetParams::final_weight_offset() const { return layer_base(*this, num_layers); }

void NetParams::validate() const {
    if (static_cast<int64_t>(flat.size()) != param_count())
        throw std::invalid_argument("NetParams: have " + std::to_string(flat.size()) +
                                    " values, expected " + std::to_string(param_count()));
}

Tensor init_input(const Tensor& gains) {
    if (gains.rank() != 2 || gains.dim(0) != gains.dim(1))
        throw std::invalid_argument("init_input: expected square gain matrix, got " +
                                    gains.shape_string());
    const int64_t users = gains.dim(0);
    Tensor f({1, users, users});
    for (int64_t k = 0; k < users * users; ++k) {
        if (!(gains[k] > 0.0))
            throw std::invalid_argument("init_input: nonpositive gain at flat index " +
                                        std::to_string(k));
        f[k] = std::log10(gains[k]);
    }
    return f;
}

Var layer_forward(Tape& tape, Var features, Var params_flat, const NetParams& meta,
                  int64_t layer, const Tensor& gains) {
    const int64_t users = gains.dim(0);
    const int64_t d = meta.feature_dim;
    const int64_t in_dim = meta.layer_in_dim(layer);
    if (features.value().dim(0) != in_dim)
        throw std::invalid_argument("layer_forward: feature dim " +
                                    features.value().shape_string() + " does not match layer " +
                                    std::to_string(layer));

    Var z[4];
    for (int64_t k = 0; k < 4; ++k) {
        Var w = slice(params_flat, meta.weight_offset(layer, k), {d, in_dim});
        Var b = slice(params_flat, meta.bias_offset(layer, k), {d});
        z[k] = relu(bias_first(b, contract_first(w, features)));
    }

    // Divisors collapse to 1 for I = 1, where the mask E is zero and the
    // categories 2-4 are empty by definition.
    const double over = static_cast<double>(std::max<int64_t>(users - 1, 1));
    const Tensor e = Tensor::extraction(users);
    Var cat1 = z[0];
    Var cat2 = masked_row_mean(e, z[1], over);
    Var cat3 = masked_col_mean(z[2], e, over);
    Var cat4 = masked_row_mean(e, masked_col_mean(z[3], e, over), over);

    Var gain_channel = constant(tape, init_input(gains));
    return concat_first({gain_channel, cat1, cat2, cat3, cat4});
}

Var net_forward_tape(Tape& tape, Var params_flat, const NetParams& meta, const Tensor& gains,
                     Head head, double ell_min) {
    if (params_flat.value().numel() != meta.param_count())
        throw std::invalid_argument("net_forward: parameter vector has " +
                                    std::to_string(params_flat.value().numel()) + " values, expected " +
                                    std::to_string(meta.param_count()));
    Var f = constant(tape, init_input(gains));
    for (int64_t layer = 1; layer < meta.num_layers; ++layer)
        f = layer_forward(tape, f, params_flat, meta, layer, gains);

    Var w = slice(params_flat, meta.final_weight_offset(), {meta.layer_in_dim(meta.num_layers)});
    Var b = slice(params_flat, meta.final_bias_offset(), {});
    Var out = affine_cols(w, diag_first(f), b);
    if (head == Head::beta) out = clamp_min(out, ell_min);
    return out;
}

std::vector<double> net_forward(const Tensor& gains, const NetParams& params, Head head,
                                double ell_min) {
    params.validate();
    Tape tape;
    Var flat = leaf(tape, Tensor({params.param_count()}, params.flat));
    Var out = net_forward_tape(tape, flat, params, gains, head, ell_min);
    return out.value().vec();
}

namespace {

// relu(W x + b) for one feature column, W (d x in) at w_off inside flat.
void affine_relu_col(const std::vector<double>& flat, int64_t w_off, int64_t b_off, int64_t d,
                     int64_t in_dim, const double* x, int64_t stride, double* out,
                     int64_t out_stride) {
    for (int64_t r = 0; r < d; ++r) {
        double acc = flat[static_cast<size_t>(b_off + r)];
        for (int64_t c = 0; c < in_dim; ++c)
            acc += flat[static_cast<size_t>(w_off + r * in_dim + c)] * x[c * stride];
        out[r * out_stride] = acc > 0.0 ? acc : 0.0;
    }
}

} // namespace

std::vector<double> mp_forward(const Tensor& gains, const NetParams& params, Head head,
                               double ell_min) {
    params.validate();
    const Tensor logg = init_input(gains);
    const int64_t users = gains.dim(0);
    const int64_t d = params.feature_dim;
    const double over = static_cast<double>(std::max<int64_t>(users - 1, 1));

    // Node i carries the features of every channel received at BS i:
    // a (dim, I) matrix stored row-major.
    std::vector<std::vector<double>> node(static_cast<size_t>(users));
    for (int64_t i = 0; i < users; ++i) {
        node[static_cast<size_t>(i)].resize(static_cast<size_t>(users));
        for (int64_t t = 0; t < users; ++t)
            node[static_cast<size_t>(i)][static_cast<size_t>(t)] = logg.at3(0, i, t);
    }

    for (int64_t layer = 1; layer < params.num_layers; ++layer) {
        const int64_t in_dim = params.layer_in_dim(layer);
        const int64_t out_dim = 1 + 4 * d;
        const int64_t w1 = params.weight_offset(layer, 0), b1 = params.bias_offset(layer, 0);
        const int64_t w2 = params.weight_offset(layer, 1), b2 = params.bias_offset(layer, 1);
        const int64_t w3 = params.weight_offset(layer, 2), b3 = params.bias_offset(layer, 2);
        const int64_t w4 = params.weight_offset(layer, 3), b4 = params.bias_offset(layer, 3);

        // Message content per node: cat-2 activations as-is, cat-4
        // activations mixed over the other transmitters.
        std::vector<std::vector<double>> msg(static_cast<size_t>(users),
                                             std::vector<double>(static_cast<size_t>(2 * d * users)));
        std::vector<double> z2(static_cast<size_t>(d * users));
        std::vector<double> z4(static_cast<size_t>(d * users));
        for (int64_t j = 0; j < users; ++j) {
            const auto& f = node[static_cast<size_t>(j)];
            for (int64_t t = 0; t < users; ++t) {
                affine_relu_col(params.flat, w2, b2, d, in_dim, f.data() + t, users,
                                z2.data() + t, users);
                affine_relu_col(params.flat, w4, b4, d, in_dim, f.data() + t, users,
                                z4.data() + t, users);
            }
            auto& m = msg[static_cast<size_t>(j)];
            for (int64_t r = 0; r < d; ++r)
                for (int64_t t = 0; t < users; ++t) {
                    m[static_cast<size_t>(r * users + t)] = z2[static_cast<size_t>(r * users + t)];
                    double acc = 0.0;
                    for (int64_t tp = 0; tp < users; ++tp)
                        if (tp != t) acc += z4[static_cast<size_t>(r * users + tp)];
                    m[static_cast<size_t>((d + r) * users + t)] = acc / over;
                }
        }

        std::vector<std::vector<double>> next(static_cast<size_t>(users),
                                              std::vector<double>(static_cast<size_t>(out_dim * users)));
        for (int64_t i = 0; i < users; ++i) {
            const auto& f = node[static_cast<size_t>(i)];
            auto& nf = next[static_cast<size_t>(i)];

            // Mean message from the other nodes, in ascending node order.
            std::vector<double> agg(static_cast<size_t>(2 * d * users), 0.0);
            for (int64_t j = 0; j < users; ++j) {
                if (j == i) continue;
                const auto& m = msg[static_cast<size_t>(j)];
                for (size_t k = 0; k < agg.size(); ++k) agg[k] += m[k];
            }
            for (double& v : agg) v /= over;

            std::vector<double> z1(static_cast<size_t>(d * users));
            std::vector<double> z3(static_cast<size_t>(d * users));
            for (int64_t t = 0; t < users; ++t) {
                affine_relu_col(params.flat, w1, b1, d, in_dim, f.data() + t, users,
                                z1.data() + t, users);
                affine_relu_col(params.flat, w3, b3, d, in_dim, f.data() + t, users,
                                z3.data() + t, users);
            }

            for (int64_t t = 0; t < users; ++t) nf[static_cast<size_t>(t)] = logg.at3(0, i, t);
            for (int64_t r = 0; r < d; ++r)
                for (int64_t t = 0; t < users; ++t) {
                    nf[static_cast<size_t>((1 + r) * users + t)] = z1[static_cast<size_t>(r * users + t)];
                    nf[static_cast<size_t>((1 + d + r) * users + t)] = agg[static_cast<size_t>(r * users + t)];
                    double acc = 0.0;
                    for (int64_t tp = 0; tp < users; ++tp)
                        if (tp != t) acc += z3[static_cast<size_t>(r * users + tp)];
                    nf[static_cast<size_t>((1 + 2 * d + r) * users + t)] = acc / over;
                    nf[static_cast<size_t>((1 + 3 * d + r) * users + t)] =
                        agg[static_cast<size_t>((d + r) * users + t)];
                }
        }
        node = std::move(next);
    }

    const int64_t fin = params.layer_in_dim(params.num_layers);
    const int64_t w_off = params.final_weight_offset();
    std::vector<double> out(static_cast<size_t>(users));
    for (int64_t j = 0; j < users; ++j) {
        double acc = params.flat[static_cast<size_t>(params.final_bias_offset())];
        const auto& f = node[static_cast<size_t>(j)];
        for (int64_t c = 0; c < fin; ++c)
            acc += params.flat[static_cast<size_t>(w_off + c)] * f[static_cast<size_t>(c * users + j)];
        out[static_cast<size_t>(j)] = head == Head::beta ? std::max(acc, ell_min) : acc;
    }
    return out;
}

std::vector<int64_t> perm_from_matrix(const Tensor& p) {
    if (p.rank() != 2 || p.dim(0) != p.dim(1))
        throw std::invalid_argument("perm_from_matrix: expected square matrix, got " +
                                    p.shape_string());
    const int64_t n = p.dim(0);
    std::vector<int64_t> sigma(static_cast<size_t>(n), -1);
    std::vector<int64_t> col_count(static_cast<size_t>(n), 0);
    for (int64_t i = 0; i < n; ++i) {
        int64_t ones = 0;
        for (int64_t j = 0; j < n; ++j) {
            const double v = p.at2(i, j);
            if (v == 1.0) {
                sigma[static_cast<size_t>(i)] = j;
                ++ones;
                ++col_count[static_cast<size_t>(j)];
            } else if (v != 0.0) {
                throw std::invalid_argument("perm_from_matrix: entry not in {0,1}");
            }
        }
        if (ones != 1) throw std::invalid_argument("perm_from_matrix: row sum != 1");
    }
    for (int64_t j = 0; j < n; ++j)
        if (col_count[static_cast<size_t>(j)] != 1)
            throw std::invalid_argument("perm_from_matrix: column sum != 1");
    return sigma;
}

Tensor permute(const Tensor& gains, const Tensor& p) {
    const auto sigma = perm_from_matrix(p);
    const int64_t n = gains.dim(0);
    if (gains.rank() != 2 || gains.dim(1) != n || static_cast<int64_t>(sigma.size()) != n)
        throw std::invalid_argument("permute: shape mismatch " + gains.shape_string() + " vs " +
                                    p.shape_string());
    Tensor out({n, n});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < n; ++j)
            out.at2(i, j) = gains.at2(sigma[static_cast<size_t>(i)], sigma[static_cast<size_t>(j)]);
    return out;
}

std::vector<double> permute_vec(const std::vector<double>& v, const Tensor& p) {
    const auto sigma = perm_from_matrix(p);
    if (v.size() != sigma.size())
        throw std::invalid_argument("permute_vec: length mismatch");
    std::vector<double> out(v.size());
    for (size_t j = 0; j < v.size(); ++j) out[j] = v[static_cast<size_t>(sigma[j])];
    return out;
}

Tensor permute_features(const Tensor& features, const Tensor& p) {
    const auto sigma = perm_from_matrix(p);
    const int64_t d = features.dim(0), n = features.dim(1);
    if (features.rank() != 3 || features.dim(2) != n || static_cast<int64_t>(sigma.size()) != n)
        throw std::invalid_argument("permute_features: shape mismatch " +
                                    features.shape_string() + " vs " + p.shape_string());
    Tensor out({d, n, n});
    for (int64_t c = 0; c < d; ++c)
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < n; ++j)
                out.at3(c, i, j) =
                    features.at3(c, sigma[static_cast<size_t>(i)], sigma[static_cast<size_t>(j)]);
    return out;
}

NetParams init_params(int64_t num_layers, int64_t feature_dim, Head head, Rng& rng, double p_max) {
    NetParams params;
    params.num_layers = num_layers;
    params.feature_dim = feature_dim;
    params.flat.assign(static_cast<size_t>(params.param_count()), 0.0);
    for (int64_t layer = 1; layer < num_layers; ++layer) {
        const int64_t in_dim = params.layer_in_dim(layer);
        const double bound = std::sqrt(6.0 / static_cast<double>(in_dim + feature_dim));
        for (int64_t k = 0; k < 4; ++k) {
            const int64_t w = params.weight_offset(layer, k);
            for (int64_t idx = 0; idx < feature_dim * in_dim; ++idx)
                params.flat[static_cast<size_t>(w + idx)] = rng.uniform(-bound, bound);
            // biases stay zero
        }
    }
    // Zero final weights pin the initial output to the bias, which places
    // the box outside the feasible region for every input as the training
    // initialization requires: a < 0 and a + ell > p_max.
    params.flat[static_cast<size_t>(params.final_bias_offset())] =
        head == Head::alpha ? -0.1 * p_max : 1.2 * p_max;
    return params;
}

void save_net(const NetParams& params, const std::string& path) {
    params.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_net: cannot open " + path);
    out << "EEMAX-NET v1 L=" << params.num_layers << " d=" << params.feature_dim << "\n";
    out.write(reinterpret_cast<const char*>(params.flat.data()),
              static_cast<std::streamsize>(sizeof(double) * params.flat.size()));
    if (!out) throw std::runtime_error("save_net: write failed for " + path);
}

NetParams load_net(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_net: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("load_net: missing header");
    std::istringstream hs(header);
    std::string magic, version, tok;
    hs >> magic >> version;
    if (magic != "EEMAX-NET" || version != "v1")
        throw std::runtime_error("load_net: malformed header '" + header + "'");
    NetParams params;
    params.num_layers = -1;
    params.feature_dim = -1;
    while (hs >> tok) {
        if (tok.rfind("L=", 0) == 0) params.num_layers = std::stoll(tok.substr(2));
        else if (tok.rfind("d=", 0) == 0) params.feature_dim = std::stoll(tok.substr(2));
        else throw std::runtime_error("load_net: unexpected header field '" + tok + "'");
    }
    if (params.num_layers < 2 || params.feature_dim < 1)
        throw std::runtime_error("load_net: malformed header '" + header + "'");
    params.flat.resize(static_cast<size_t>(params.param_count()));
    in.read(reinterpret_cast<char*>(params.flat.data()),
            static_cast<std::streamsize>(sizeof(double) * params.flat.size()));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * params.flat.size()))
        throw std::runtime_error("load_net: truncated parameter payload");
    return params;
}

} // namespace eemax
