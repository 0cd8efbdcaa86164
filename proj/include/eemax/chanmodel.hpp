#ifndef EEMAX_CHANMODEL_HPP
#define EEMAX_CHANMODEL_HPP

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "eemax/rng.hpp"
#include "eemax/tensor.hpp"

namespace eemax {

struct Point2 {
    double x = 0.0;  // km
    double y = 0.0;  // km
};

/// Multi-cell uplink scenario. Defaults follow the four-BS layout with
/// 1.8 GHz carrier, decay factor 4.5, F = 3 dB, N0 = -174 dBm/Hz and
/// B = 180 kHz; static power 1 W and amplifier inefficiency 4.
struct ScenarioConfig {
    int64_t num_users = 4;
    int64_t num_bs = 4;
    int64_t bs_antennas = 2;
    std::vector<Point2> bs_positions = {{0.5, 0.5}, {0.5, 1.5}, {1.5, 1.5}, {1.5, 0.5}};
    Point2 area = {2.0, 2.0};          // rectangle (0,0)..(area.x, area.y), km
    double carrier_freq_hz = 1.8e9;
    double decay_factor = 4.5;         // path-loss exponent
    double noise_figure_db = 3.0;
    double noise_density_dbm_hz = -174.0;
    double bandwidth_hz = 180e3;
    double static_power_w = 1.0;       // P_c
    double amp_inefficiency = 4.0;     // mu
    double p_max_w = 1.0;
    uint64_t rng_seed = 1;

    void validate() const;

    /// Receiver noise power F * N0 * B in watts.
    double noise_power_w() const;
};

/// Noise-normalized equivalent gains after matched filtering.
/// gains(i, j) is the gain of user j's signal at the BS serving user i,
/// already divided by the noise power, so the SINR denominator is
/// 1 + sum of interfering gain*power terms.
struct ChannelMatrix {
    Tensor gains;                       // (I, I), strictly positive
    std::vector<int64_t> assignment;    // user -> BS; empty when loaded from file

    int64_t num_users() const { return gains.rank() == 2 ? gains.dim(0) : 0; }
};

struct Dataset {
    ScenarioConfig config;
    std::vector<ChannelMatrix> samples;
    std::string split;  // "train" / "test"
};

/// |w^H h_src|^2 with w the unit matched filter along h_serve.
/// Throws if h_serve is the zero vector.
double matched_filter_gain(const std::vector<std::complex<double>>& h_serve,
                           const std::vector<std::complex<double>>& h_src);

/// Draws one scenario realization: uniform user placement, log-distance
/// path loss with exponent decay_factor (free-space intercept at 1 m,
/// distances floored at 10 m), per-antenna fading with standard-normal
/// amplitude and uniform phase, strongest-gain BS assignment and matched
/// filter reduction to an I x I gain matrix.
/// With normalize = false the raw gains are returned instead of
/// gains / (F * N0 * B).
ChannelMatrix draw_scenario(const ScenarioConfig& config, Rng& rng, bool normalize = true);

/// n samples with independent per-sample RNG streams derived from
/// (config.rng_seed, sample index).
Dataset make_dataset(const ScenarioConfig& config, int64_t n, const std::string& split);

/// File format: UTF-8 header line `EEMAX v1 I=<I> n=<N> seed=<seed>` then a
/// little-endian float64 payload of N*I*I gains in row-major
/// (sample, receiver, transmitter) order. BS assignments are not persisted.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

} // namespace eemax

#endif
