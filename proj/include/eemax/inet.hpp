#ifndef EEMAX_INET_HPP
#define EEMAX_INET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "eemax/rng.hpp"
#include "eemax/tape.hpp"
#include "eemax/tensor.hpp"

namespace eemax {

enum class Head { alpha, beta };

/// Category-layer network mapping an I x I gain matrix to one value per
/// user-BS pair. Layers 1..L-1 apply the four per-category affine+ReLU maps
/// and concatenate [log10(G), cat1..cat4] along the feature dimension; layer
/// L is an affine map over the diagonal features only.
///
/// Parameters are stored flat in checkpoint order:
///   for l = 1..L-1: for k = 1..4: W_l^k row-major (dim x in_dim), then b_l^k
///   then the final weights w_L (in_dim) and bias b_L.
struct NetParams {
    int64_t num_layers = 5;    // L, counting the final affine layer
    int64_t feature_dim = 20;  // width per category
    std::vector<double> flat;

    int64_t layer_in_dim(int64_t layer) const {  // layer is 1-based
        return layer == 1 ? 1 : 1 + 4 * feature_dim;
    }

    /// Offset of W_l^k (k in 0..3) in the flat vector.
    int64_t weight_offset(int64_t layer, int64_t category) const;
    int64_t bias_offset(int64_t layer, int64_t category) const;
    int64_t final_weight_offset() const;
    int64_t final_bias_offset() const { return final_weight_offset() + layer_in_dim(num_layers); }

    static int64_t param_count(int64_t num_layers, int64_t feature_dim);
    int64_t param_count() const { return param_count(num_layers, feature_dim); }

    void validate() const;
};

/// Input features log10(g_ij) as a (1, I, I) tensor. Throws on a
/// nonpositive gain.
Tensor init_input(const Tensor& gains);

/// One category layer in tensor form: the four masked category means plus
/// the log-gain channel, concatenated to (1 + 4*dim, I, I).
Var layer_forward(Tape& tape, Var features, Var params_flat, const NetParams& meta,
                  int64_t layer, const Tensor& gains);

/// Full forward pass on a tape; params_flat must hold meta.param_count()
/// values. The beta head clamps the raw output at ell_min.
Var net_forward_tape(Tape& tape, Var params_flat, const NetParams& meta, const Tensor& gains,
                     Head head, double ell_min);

/// Value-only forward pass (runs a scratch tape).
std::vector<double> net_forward(const Tensor& gains, const NetParams& params, Head head,
                                double ell_min);

/// Message-passing form: each receiver row is a node; categories 2 and 4
/// travel as messages aggregated by mean over the other nodes, categories 1
/// and 3 are node-local. Agrees with net_forward up to float reassociation.
/// Verification surface only; training uses the tensor form.
std::vector<double> mp_forward(const Tensor& gains, const NetParams& params, Head head,
                               double ell_min);

/// Permutation sigma from a permutation matrix; validates entries and
/// row/column sums. P(j, sigma(j)) = 1.
std::vector<int64_t> perm_from_matrix(const Tensor& p);

/// G' = P G P^T: simultaneous row and column relabeling.
Tensor permute(const Tensor& gains, const Tensor& p);
/// p' = p P^T, the output relabeling matching permute().
std::vector<double> permute_vec(const std::vector<double>& v, const Tensor& p);
/// F' = P o F o P^T on a (d, I, I) feature tensor.
Tensor permute_features(const Tensor& features, const Tensor& p);

/// Xavier-uniform hidden layers. The final layer starts at zero weights with
/// bias -0.1 * p_max (alpha) or 1.2 * p_max (beta) so the initial box covers
/// the feasible region from outside for every input.
NetParams init_params(int64_t num_layers, int64_t feature_dim, Head head, Rng& rng,
                      double p_max = 1.0);

/// Checkpoint format: `EEMAX-NET v1 L=<L> d=<dim>` then little-endian
/// float64 parameters in flat order.
void save_net(const NetParams& params, const std::string& path);
NetParams load_net(const std::string& path);

} // namespace eemax

#endif
