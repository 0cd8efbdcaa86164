#include "eemax/chanmodel.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "dataset payload is little-endian float64");

namespace eemax {

void ScenarioConfig::validate() const {
    if (num_users < 1) throw std::invalid_argument("ScenarioConfig: num_users must be >= 1");
    if (num_bs < 1) throw std::invalid_argument("ScenarioConfig: num_bs must be >= 1");
    if (bs_antennas < 1) throw std::invalid_argument("ScenarioConfig: bs_antennas must be >= 1");
    if (p_max_w <= 0.0) throw std::invalid_argument("ScenarioConfig: p_max must be positive");
    if (bandwidth_hz <= 0.0) throw std::invalid_argument("ScenarioConfig: bandwidth must be positive");
    if (static_power_w <= 0.0) throw std::invalid_argument("ScenarioConfig: static power must be positive");
    if (amp_inefficiency <= 0.0) throw std::invalid_argument("ScenarioConfig: amp inefficiency must be positive");
    if (static_cast<int64_t>(bs_positions.size()) != num_bs)
        throw std::invalid_argument("ScenarioConfig: expected " + std::to_string(num_bs) +
                                    " BS positions, got " + std::to_string(bs_positions.size()));
    for (const Point2& p : bs_positions)
        if (p.x < 0.0 || p.x > area.x || p.y < 0.0 || p.y > area.y)
            throw std::invalid_argument("ScenarioConfig: BS position outside area");
}

double ScenarioConfig::noise_power_w() const {
    const double f_lin = std::pow(10.0, noise_figure_db / 10.0);
    const double n0_w_per_hz = std::pow(10.0, noise_density_dbm_hz / 10.0) * 1e-3;
    return f_lin * n0_w_per_hz * bandwidth_hz;
}

double matched_filter_gain(const std::vector<std::complex<double>>& h_serve,
                           const std::vector<std::complex<double>>& h_src) {
    if (h_serve.size() != h_src.size())
        throw std::invalid_argument("matched_filter_gain: vector lengths differ");
    double norm2 = 0.0;
    for (const auto& h : h_serve) norm2 += std::norm(h);
    if (norm2 == 0.0) throw std::invalid_argument("matched_filter_gain: zero serving vector");
    std::complex<double> inner(0.0, 0.0);
    for (size_t a = 0; a < h_serve.size(); ++a) inner += std::conj(h_serve[a]) * h_src[a];
    return std::norm(inner) / norm2;
}

namespace {

// Log-distance path loss in dB: free-space intercept at d0 = 1 m, then
// 10 * decay * log10(d). Distances below 10 m are floored to keep near-BS
// gains bounded.
double path_loss_db(double dist_km, double carrier_hz, double decay) {
    constexpr double kC = 299792458.0;
    const double d_m = std::max(dist_km * 1000.0, 10.0);
    const double pl0 = 20.0 * std::log10(4.0 * M_PI * 1.0 * carrier_hz / kC);
    return pl0 + 10.0 * decay * std::log10(d_m);
}

} // namespace

ChannelMatrix draw_scenario(const ScenarioConfig& config, Rng& rng, bool normalize) {
    config.validate();
    const int64_t users = config.num_users;
    const int64_t bss = config.num_bs;
    const int64_t ants = config.bs_antennas;

    std::vector<Point2> user_pos(static_cast<size_t>(users));
    for (auto& p : user_pos) {
        p.x = rng.uniform(0.0, config.area.x);
        p.y = rng.uniform(0.0, config.area.y);
    }

    // h[user][bs] is the n_R-antenna channel vector including path loss.
    std::vector<std::vector<std::vector<std::complex<double>>>> h(
        static_cast<size_t>(users),
        std::vector<std::vector<std::complex<double>>>(static_cast<size_t>(bss)));
    for (int64_t j = 0; j < users; ++j)
        for (int64_t m = 0; m < bss; ++m) {
            const double dx = user_pos[j].x - config.bs_positions[m].x;
            const double dy = user_pos[j].y - config.bs_positions[m].y;
            const double dist = std::sqrt(dx * dx + dy * dy);
            const double pl = path_loss_db(dist, config.carrier_freq_hz, config.decay_factor);
            const double amp_scale = std::pow(10.0, -pl / 20.0);
            auto& vec = h[static_cast<size_t>(j)][static_cast<size_t>(m)];
            vec.resize(static_cast<size_t>(ants));
            for (int64_t a = 0; a < ants; ++a) {
                const double amplitude = rng.normal();
                const double phase = rng.uniform(0.0, 2.0 * M_PI);
                vec[static_cast<size_t>(a)] =
                    amp_scale * amplitude * std::complex<double>(std::cos(phase), std::sin(phase));
            }
        }

    // Each user takes the BS with the largest direct matched-filter gain,
    // which for the own link is just the squared channel norm.
    std::vector<int64_t> assignment(static_cast<size_t>(users), 0);
    for (int64_t i = 0; i < users; ++i) {
        double best = -1.0;
        for (int64_t m = 0; m < bss; ++m) {
            double norm2 = 0.0;
            for (const auto& c : h[static_cast<size_t>(i)][static_cast<size_t>(m)]) norm2 += std::norm(c);
            if (norm2 > best) {
                best = norm2;
                assignment[static_cast<size_t>(i)] = m;
            }
        }
    }

    const double sigma2 = normalize ? config.noise_power_w() : 1.0;
    ChannelMatrix cm;
    cm.gains = Tensor({users, users});
    cm.assignment = assignment;
    for (int64_t i = 0; i < users; ++i) {
        const auto& serve = h[static_cast<size_t>(i)][static_cast<size_t>(assignment[static_cast<size_t>(i)])];
        for (int64_t j = 0; j < users; ++j) {
            const auto& src = h[static_cast<size_t>(j)][static_cast<size_t>(assignment[static_cast<size_t>(i)])];
            cm.gains.at2(i, j) = matched_filter_gain(serve, src) / sigma2;
        }
    }
    return cm;
}

Dataset make_dataset(const ScenarioConfig& config, int64_t n, const std::string& split) {
    config.validate();
    Dataset ds;
    ds.config = config;
    ds.split = split;
    ds.samples.reserve(static_cast<size_t>(n));
    for (int64_t k = 0; k < n; ++k) {
        Rng rng = Rng::stream(config.rng_seed, static_cast<uint64_t>(k));
        ds.samples.push_back(draw_scenario(config, rng));
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    const int64_t users = ds.config.num_users;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
    out << "EEMAX v1 I=" << users << " n=" << ds.samples.size() << " seed=" << ds.config.rng_seed
        << "\n";
    for (const ChannelMatrix& cm : ds.samples) {
        if (cm.num_users() != users)
            throw std::invalid_argument("save_dataset: sample user count mismatch");
        out.write(reinterpret_cast<const char*>(cm.gains.data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(cm.gains.numel())));
    }
    if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("load_dataset: missing header");

    int64_t users = -1, n = -1;
    uint64_t seed = 0;
    {
        std::istringstream hs(header);
        std::string magic, version, tok;
        hs >> magic >> version;
        if (magic != "EEMAX" || version != "v1")
            throw std::runtime_error("load_dataset: malformed header '" + header + "'");
        while (hs >> tok) {
            if (tok.rfind("I=", 0) == 0) users = std::stoll(tok.substr(2));
            else if (tok.rfind("n=", 0) == 0) n = std::stoll(tok.substr(2));
            else if (tok.rfind("seed=", 0) == 0) seed = std::stoull(tok.substr(5));
            else throw std::runtime_error("load_dataset: unexpected header field '" + tok + "'");
        }
    }
    if (users < 1 || n < 0) throw std::runtime_error("load_dataset: malformed header '" + header + "'");

    Dataset ds;
    ds.config.num_users = users;
    ds.config.rng_seed = seed;
    ds.samples.reserve(static_cast<size_t>(n));
    const size_t per_sample = static_cast<size_t>(users) * static_cast<size_t>(users);
    for (int64_t k = 0; k < n; ++k) {
        ChannelMatrix cm;
        cm.gains = Tensor({users, users});
        in.read(reinterpret_cast<char*>(cm.gains.data()),
                static_cast<std::streamsize>(sizeof(double) * per_sample));
        if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * per_sample))
            throw std::runtime_error("load_dataset: dimension mismatch, sample " + std::to_string(k) +
                                     " of " + std::to_string(n) + " is truncated");
        ds.samples.push_back(std::move(cm));
    }
    char extra;
    if (in.read(&extra, 1))
        throw std::runtime_error("load_dataset: dimension mismatch, trailing bytes after " +
                                 std::to_string(n) + " samples");
    return ds;
}

} // namespace eemax
