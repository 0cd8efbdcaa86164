#ifndef EEMAX_TAPE_HPP
#define EEMAX_TAPE_HPP

#include <cstdint>
#include <vector>

#include "eemax/tensor.hpp"

namespace eemax {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
struct Var {
    Tape* tape = nullptr;
    int32_t id = -1;

    const Tensor& value() const;
    const Tensor& grad() const;
};

enum class Op : uint8_t {
    Leaf,
    Slice,
    Add,
    Sub,
    Mul,
    Div,
    AddConst,
    Scale,
    Relu,
    ClampMin,
    Max,
    Ln,
    Log10,
    Cos,
    ContractFirst,
    BiasFirst,
    MatLeft,
    MatRight,
    ConcatFirst,
    DiagFirst,
    DotCols,
    AddScalarVar,
    ColBcast,
    ReduceSum,
};

struct Node {
    Op op = Op::Leaf;
    std::vector<int32_t> inputs;
    Tensor value;
    Tensor grad;       // allocated on first accumulation during backward
    bool has_grad = false;
    double scalar = 0.0;   // AddConst / Scale / ClampMin constant
    int64_t offset = 0;    // Slice start
    Tensor aux;            // MatLeft / MatRight constant matrix
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so node ids
/// form a topological order of the DAG and backward() is a single reverse
/// sweep that visits every node exactly once.
class Tape {
public:
    Var make(Op op, std::vector<int32_t> inputs, Tensor value);

    Node& node(int32_t id) { return nodes_[static_cast<size_t>(id)]; }
    const Node& node(int32_t id) const { return nodes_[static_cast<size_t>(id)]; }
    size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

    /// Seeds d(root)/d(root) = 1 and propagates to every reachable node.
    /// root must hold a single element; unreached leaves keep zero gradient.
    void backward(int32_t root);

private:
    void accumulate(int32_t id, const Node& out);
    Tensor& grad_buffer(int32_t id);

    std::vector<Node> nodes_;
};

// -- graph construction ------------------------------------------------------

Var leaf(Tape& t, Tensor value);
/// Same node kind as leaf; names an input whose gradient is never read.
Var constant(Tape& t, Tensor value);

Var slice(Var x, int64_t offset, std::vector<int64_t> shape);
Var add(Var x, Var y);
Var sub(Var x, Var y);
Var mul(Var x, Var y);
Var div(Var x, Var y);
Var add_const(Var x, double c);
Var scale(Var x, double c);
Var relu(Var x);
/// max(x, c) elementwise; subgradient 0 on the clamped branch and at the tie.
Var clamp_min(Var x, double c);
/// Elementwise max of two tensors; ties send the gradient to x.
Var vmax(Var x, Var y);
Var vln(Var x);
Var vlog10(Var x);
Var vcos(Var x);

/// W (o x i) applied down the first dimension of F (i, rest...) -> (o, rest...).
Var contract_first(Var w, Var f);
/// Adds b[c] to every element of channel c of F (c, rest...).
Var bias_first(Var b, Var f);
/// P * F[c,:,:] for every channel c; P is a constant matrix.
Var mat_left(const Tensor& p, Var f);
/// F[c,:,:] * P for every channel c; P is a constant matrix.
Var mat_right(Var f, const Tensor& p);
/// Mean over the masked row set: E * F[c,:,:] / divisor (composition helper).
Var masked_row_mean(const Tensor& e, Var f, double divisor);
/// Mean over the masked column set: F[c,:,:] * E / divisor.
Var masked_col_mean(Var f, const Tensor& e, double divisor);
Var concat_first(const std::vector<Var>& parts);
/// (d, I, I) -> (d, I), keeps the diagonal of every channel.
Var diag_first(Var f);
/// w (d) dotted with every column of M (d, I) -> (I).
Var dot_cols(Var w, Var m);
/// x + s with s a scalar node broadcast over x.
Var add_scalar_var(Var x, Var s);
/// Tile vector v (I) into (I, cols).
Var col_bcast(Var v, int64_t cols);
Var reduce_sum(Var x);
/// w . M + b per column: affine map producing one scalar per column.
Var affine_cols(Var w, Var m, Var b);

void backward(Var root);

} // namespace eemax

#endif
