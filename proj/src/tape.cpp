#include "eemax/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace eemax {

const Tensor& Var::value() const { return tape->node(id).value; }

const Tensor& Var::grad() const {
    Node& n = tape->node(id);
    if (!n.has_grad) {
        // Nodes the backward sweep never reached hold a zero gradient.
        n.grad = Tensor(n.value.shape());
        n.has_grad = true;
    }
    return n.grad;
}

Var Tape::make(Op op, std::vector<int32_t> inputs, Tensor value) {
    Node n;
    n.op = op;
    n.inputs = std::move(inputs);
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int32_t>(nodes_.size() - 1)};
}

Tensor& Tape::grad_buffer(int32_t id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.has_grad) {
        n.grad = Tensor(n.value.shape());
        n.has_grad = true;
    }
    return n.grad;
}

void Tape::backward(int32_t root) {
    if (root < 0 || static_cast<size_t>(root) >= nodes_.size())
        throw std::invalid_argument("backward: root id out of range");
    Node& r = nodes_[static_cast<size_t>(root)];
    if (r.value.numel() != 1)
        throw std::invalid_argument("backward: root must be scalar, got shape " +
                                    r.value.shape_string());
    grad_buffer(root)[0] = 1.0;
    for (int32_t id = root; id >= 0; --id) {
        const Node& n = nodes_[static_cast<size_t>(id)];
        if (!n.has_grad || n.op == Op::Leaf) continue;
        accumulate(id, n);
    }
}

void Tape::accumulate(int32_t id, const Node& out) {
    const Tensor& g = out.grad;
    const int64_t n = g.numel();
    switch (out.op) {
    case Op::Leaf:
        break;
    case Op::Slice: {
        Tensor& gx = grad_buffer(out.inputs[0]);
        for (int64_t k = 0; k < n; ++k) gx[out.offset + k] += g[k];
        break;
    }
    case Op::Add: {
        Tensor& gx = grad_buffer(out.inputs[0]);
        Tensor& gy = grad_buffer(out.inputs[1]);
        for (int64_t k = 0; k < n; ++k) gx[k] += g[k];
        for (int64_t k = 0; k < n; ++k) gy[k] += g[k];
        break;
    }
    case Op::Sub: {
        Tensor& gx = grad_buffer(out.inputs[0]);
        Tensor& gy = grad_buffer(out.inputs[1]);
        for (int64_t k = 0; k < n; ++k) gx[k] += g[k];
        for (int64_t k = 0; k < n; ++k) gy[k] -= g[k];
        break;
    }
    case Op::Mul: {
        const Tensor& x = nodes_[static_cast<size_t>(out.inputs[0])].value;
        const Tensor& y = nodes_[static_cast<size_t>(out.inputs[1])].value;
        Tensor& gx = grad_buffer(out.inputs[0]);
        Tensor& gy = grad_buffer(out.inputs[1]);
        for (int64_t k = 0; k < n; ++k) gx[k] += g[k] * y[k];
        for (int64_t k = 0; k < n; ++k) gy[k] += g[k] * x[k];
        break;
    }
    case Op::Div: {
        const Tensor& y = nodes_[static_cast<size_t>(out.inputs[1])].value;
        Tensor& gx = grad_buffer(out.inputs[0]);
        Tensor& gy = grad_buffer(out.inputs[1]);
        for (int64_t k = 0; k < n; ++k) gx[k] += g[k] / y[k];
        for (int64_t k = 0; k < n; ++k) gy[k] -= g[k] * out.value[k] / y[k];
        break;
    }
    case Op::AddConst: {
        Tensor& gx = grad_buffer(out.inputs[0]);
        for (int64_t k = 0; k < n; ++k) gx[k] += g[k];
        break;
    }
    case Op::Scale: {
        Tensor& gx = grad_buffer(out.inputs[0]);
        for (int64_t k = 0; k < n; ++k) gx[k] += out.scalar * g[k];
        break;
    }
    case Op::Relu: {
        const Tensor& x = nodes_[static_cast<size_t>(out.inputs[0])].value;
        Tensor& gx = grad_buffer(out.inputs[0]);
        for (int64_t k = 0; k < n; ++k)
            if (x[k] > 0.0) gx[k] += g[k];
        break;
    }
    case Op::ClampMin: {
        const Tensor& x = nodes_[static_cast<size_t>(out.inputs[0])].value;
        Tensor& gx = grad_buffer(out.inputs[0]);
        for (int64_t k = 0; k < n; ++k)
            if (x[k] > out.scalar) gx[k] += g[k];
        break;
    }
    case Op::Max: {
        const Tensor& x = nodes_[static_cast<size_t>(out.inputs[0])].value;
        const Tensor& y = nodes_[static_cast<size_t>(out.inputs[1])].value;
        Tensor& gx = grad_buffer(out.inputs[0]);
        Tensor& gy = grad_buffer(out.inputs[1]);
        for (int64_t k = 0; k < n; ++k) {
            if (x[k] >= y[k]) gx[k] += g[k];
            else gy[k] += g[k];
        }
        break;
    }
    case Op::Ln: {
        const Tensor& x = nodes_[static_cast<size_t>(out.inputs[0])].value;
        Tensor& gx = grad_buffer(out.inputs[0]);
        for (int64_t k = 0; k < n; ++k) gx[k] += g[k] / x[k];
        break;
    }
    case Op::Log10: {
        const Tensor& x = nodes_[static_cast<size_t>(out.inputs[0])].value;
        Tensor& gx = grad_buffer(out.inputs[0]);
        const double inv_ln10 = 1.0 / std::log(10.0);
        for (int64_t k = 0; k < n; ++k) gx[k] += g[k] * inv_ln10 / x[k];
        break;
    }
    case Op::Cos: {
        const Tensor& x = nodes_[static_cast<size_t>(out.inputs[0])].value;
        Tensor& gx = grad_buffer(out.inputs[0]);
        for (int64_t k = 0; k < n; ++k) gx[k] -= g[k] * std::sin(x[k]);
        break;
    }
    case Op::ContractFirst: {
        const Tensor& w = nodes_[static_cast<size_t>(out.inputs[0])].value;
        const Tensor& f = nodes_[static_cast<size_t>(out.inputs[1])].value;
        Tensor& gw = grad_buffer(out.inputs[0]);
        Tensor& gf = grad_buffer(out.inputs[1]);
        const int64_t o = w.dim(0), i = w.dim(1);
        const int64_t rest = f.numel() / i;
        for (int64_t a = 0; a < o; ++a)
            for (int64_t c = 0; c < i; ++c) {
                double acc = 0.0;
                const double wac = w[a * i + c];
                for (int64_t x = 0; x < rest; ++x) {
                    acc += g[a * rest + x] * f[c * rest + x];
                    gf[c * rest + x] += wac * g[a * rest + x];
                }
                gw[a * i + c] += acc;
            }
        break;
    }
    case Op::BiasFirst: {
        Tensor& gb = grad_buffer(out.inputs[0]);
        Tensor& gf = grad_buffer(out.inputs[1]);
        const int64_t o = gb.numel();
        const int64_t rest = n / o;
        for (int64_t a = 0; a < o; ++a) {
            double acc = 0.0;
            for (int64_t x = 0; x < rest; ++x) {
                acc += g[a * rest + x];
                gf[a * rest + x] += g[a * rest + x];
            }
            gb[a] += acc;
        }
        break;
    }
    case Op::MatLeft: {
        // out[c,i,j] = sum_k P[i,k] F[c,k,j]  =>  gF[c,k,j] += sum_i P[i,k] g[c,i,j]
        const Tensor& p = out.aux;
        Tensor& gf = grad_buffer(out.inputs[0]);
        const int64_t d = out.value.dim(0), rows = out.value.dim(1), cols = out.value.dim(2);
        for (int64_t c = 0; c < d; ++c)
            for (int64_t k = 0; k < rows; ++k)
                for (int64_t j = 0; j < cols; ++j) {
                    double acc = 0.0;
                    for (int64_t i = 0; i < rows; ++i)
                        acc += p.at2(i, k) * g[(c * rows + i) * cols + j];
                    gf[(c * rows + k) * cols + j] += acc;
                }
        break;
    }
    case Op::MatRight: {
        // out[c,i,j] = sum_k F[c,i,k] P[k,j]  =>  gF[c,i,k] += sum_j g[c,i,j] P[k,j]
        const Tensor& p = out.aux;
        Tensor& gf = grad_buffer(out.inputs[0]);
        const int64_t d = out.value.dim(0), rows = out.value.dim(1), cols = out.value.dim(2);
        for (int64_t c = 0; c < d; ++c)
            for (int64_t i = 0; i < rows; ++i)
                for (int64_t k = 0; k < cols; ++k) {
                    double acc = 0.0;
                    for (int64_t j = 0; j < cols; ++j)
                        acc += g[(c * rows + i) * cols + j] * p.at2(k, j);
                    gf[(c * rows + i) * cols + k] += acc;
                }
        break;
    }
    case Op::ConcatFirst: {
        int64_t off = 0;
        for (int32_t in : out.inputs) {
            Tensor& gi = grad_buffer(in);
            const int64_t m = gi.numel();
            for (int64_t k = 0; k < m; ++k) gi[k] += g[off + k];
            off += m;
        }
        break;
    }
    case Op::DiagFirst: {
        Tensor& gf = grad_buffer(out.inputs[0]);
        const int64_t d = out.value.dim(0), m = out.value.dim(1);
        for (int64_t c = 0; c < d; ++c)
            for (int64_t i = 0; i < m; ++i)
                gf[(c * m + i) * m + i] += g[c * m + i];
        break;
    }
    case Op::DotCols: {
        const Tensor& w = nodes_[static_cast<size_t>(out.inputs[0])].value;
        const Tensor& m = nodes_[static_cast<size_t>(out.inputs[1])].value;
        Tensor& gw = grad_buffer(out.inputs[0]);
        Tensor& gm = grad_buffer(out.inputs[1]);
        const int64_t d = w.numel(), cols = out.value.numel();
        for (int64_t c = 0; c < d; ++c) {
            double acc = 0.0;
            for (int64_t j = 0; j < cols; ++j) {
                acc += g[j] * m[c * cols + j];
                gm[c * cols + j] += w[c] * g[j];
            }
            gw[c] += acc;
        }
        break;
    }
    case Op::AddScalarVar: {
        Tensor& gx = grad_buffer(out.inputs[0]);
        Tensor& gs = grad_buffer(out.inputs[1]);
        double acc = 0.0;
        for (int64_t k = 0; k < n; ++k) {
            gx[k] += g[k];
            acc += g[k];
        }
        gs[0] += acc;
        break;
    }
    case Op::ColBcast: {
        Tensor& gv = grad_buffer(out.inputs[0]);
        const int64_t rows = out.value.dim(0), cols = out.value.dim(1);
        for (int64_t i = 0; i < rows; ++i) {
            double acc = 0.0;
            for (int64_t s = 0; s < cols; ++s) acc += g[i * cols + s];
            gv[i] += acc;
        }
        break;
    }
    case Op::ReduceSum: {
        Tensor& gx = grad_buffer(out.inputs[0]);
        const double gs = g[0];
        const int64_t m = gx.numel();
        for (int64_t k = 0; k < m; ++k) gx[k] += gs;
        break;
    }
    }
    (void)id;
}

// -- construction helpers ----------------------------------------------------

namespace {

void require_same_shape(const char* op, const Var& x, const Var& y) {
    if (!x.value().same_shape(y.value()))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    x.value().shape_string() + " vs " + y.value().shape_string());
}

Tensor map_unary(const Tensor& x, double (*fn)(double)) {
    Tensor out(x.shape());
    const int64_t n = x.numel();
    for (int64_t k = 0; k < n; ++k) out[k] = fn(x[k]);
    return out;
}

} // namespace

Var leaf(Tape& t, Tensor value) { return t.make(Op::Leaf, {}, std::move(value)); }
Var constant(Tape& t, Tensor value) { return t.make(Op::Leaf, {}, std::move(value)); }

Var slice(Var x, int64_t offset, std::vector<int64_t> shape) {
    Tensor out(shape);
    const int64_t n = out.numel();
    if (offset < 0 || offset + n > x.value().numel())
        throw std::invalid_argument("slice: range [" + std::to_string(offset) + "," +
                                    std::to_string(offset + n) + ") exceeds input of " +
                                    std::to_string(x.value().numel()) + " elements");
    for (int64_t k = 0; k < n; ++k) out[k] = x.value()[offset + k];
    Var v = x.tape->make(Op::Slice, {x.id}, std::move(out));
    x.tape->node(v.id).offset = offset;
    return v;
}

Var add(Var x, Var y) {
    require_same_shape("add", x, y);
    Tensor out(x.value().shape());
    const int64_t n = out.numel();
    for (int64_t k = 0; k < n; ++k) out[k] = x.value()[k] + y.value()[k];
    return x.tape->make(Op::Add, {x.id, y.id}, std::move(out));
}

Var sub(Var x, Var y) {
    require_same_shape("sub", x, y);
    Tensor out(x.value().shape());
    const int64_t n = out.numel();
    for (int64_t k = 0; k < n; ++k) out[k] = x.value()[k] - y.value()[k];
    return x.tape->make(Op::Sub, {x.id, y.id}, std::move(out));
}

Var mul(Var x, Var y) {
    require_same_shape("mul", x, y);
    Tensor out(x.value().shape());
    const int64_t n = out.numel();
    for (int64_t k = 0; k < n; ++k) out[k] = x.value()[k] * y.value()[k];
    return x.tape->make(Op::Mul, {x.id, y.id}, std::move(out));
}

Var div(Var x, Var y) {
    require_same_shape("div", x, y);
    Tensor out(x.value().shape());
    const int64_t n = out.numel();
    for (int64_t k = 0; k < n; ++k) out[k] = x.value()[k] / y.value()[k];
    return x.tape->make(Op::Div, {x.id, y.id}, std::move(out));
}

Var add_const(Var x, double c) {
    Tensor out(x.value().shape());
    const int64_t n = out.numel();
    for (int64_t k = 0; k < n; ++k) out[k] = x.value()[k] + c;
    Var v = x.tape->make(Op::AddConst, {x.id}, std::move(out));
    x.tape->node(v.id).scalar = c;
    return v;
}

Var scale(Var x, double c) {
    Tensor out(x.value().shape());
    const int64_t n = out.numel();
    for (int64_t k = 0; k < n; ++k) out[k] = x.value()[k] * c;
    Var v = x.tape->make(Op::Scale, {x.id}, std::move(out));
    x.tape->node(v.id).scalar = c;
    return v;
}

Var relu(Var x) {
    Tensor out(x.value().shape());
    const int64_t n = out.numel();
    for (int64_t k = 0; k < n; ++k) out[k] = x.value()[k] > 0.0 ? x.value()[k] : 0.0;
    return x.tape->make(Op::Relu, {x.id}, std::move(out));
}

Var clamp_min(Var x, double c) {
    Tensor out(x.value().shape());
    const int64_t n = out.numel();
    for (int64_t k = 0; k < n; ++k) out[k] = x.value()[k] > c ? x.value()[k] : c;
    Var v = x.tape->make(Op::ClampMin, {x.id}, std::move(out));
    x.tape->node(v.id).scalar = c;
    return v;
}

Var vmax(Var x, Var y) {
    require_same_shape("vmax", x, y);
    Tensor out(x.value().shape());
    const int64_t n = out.numel();
    for (int64_t k = 0; k < n; ++k) out[k] = x.value()[k] >= y.value()[k] ? x.value()[k] : y.value()[k];
    return x.tape->make(Op::Max, {x.id, y.id}, std::move(out));
}

Var vln(Var x) { return x.tape->make(Op::Ln, {x.id}, map_unary(x.value(), [](double v) { return std::log(v); })); }
Var vlog10(Var x) { return x.tape->make(Op::Log10, {x.id}, map_unary(x.value(), [](double v) { return std::log10(v); })); }
Var vcos(Var x) { return x.tape->make(Op::Cos, {x.id}, map_unary(x.value(), [](double v) { return std::cos(v); })); }

Var contract_first(Var w, Var f) {
    const Tensor& wt = w.value();
    const Tensor& ft = f.value();
    if (wt.rank() != 2 || ft.rank() < 1 || wt.dim(1) != ft.dim(0))
        throw std::invalid_argument("contract_first: shape mismatch " + wt.shape_string() +
                                    " vs " + ft.shape_string());
    const int64_t o = wt.dim(0), i = wt.dim(1);
    const int64_t rest = ft.numel() / i;
    std::vector<int64_t> oshape = ft.shape();
    oshape[0] = o;
    Tensor out(oshape);
    for (int64_t a = 0; a < o; ++a)
        for (int64_t c = 0; c < i; ++c) {
            const double wac = wt[a * i + c];
            if (wac == 0.0) continue;
            const double* src = ft.data() + c * rest;
            double* dst = out.data() + a * rest;
            for (int64_t x = 0; x < rest; ++x) dst[x] += wac * src[x];
        }
    return w.tape->make(Op::ContractFirst, {w.id, f.id}, std::move(out));
}

Var bias_first(Var b, Var f) {
    const Tensor& bt = b.value();
    const Tensor& ft = f.value();
    if (bt.rank() != 1 || bt.dim(0) != ft.dim(0))
        throw std::invalid_argument("bias_first: shape mismatch " + bt.shape_string() +
                                    " vs " + ft.shape_string());
    const int64_t o = bt.dim(0);
    const int64_t rest = ft.numel() / o;
    Tensor out(ft.shape());
    for (int64_t a = 0; a < o; ++a)
        for (int64_t x = 0; x < rest; ++x) out[a * rest + x] = ft[a * rest + x] + bt[a];
    return b.tape->make(Op::BiasFirst, {b.id, f.id}, std::move(out));
}

Var mat_left(const Tensor& p, Var f) {
    const Tensor& ft = f.value();
    if (p.rank() != 2 || ft.rank() != 3 || p.dim(1) != ft.dim(1) || p.dim(0) != ft.dim(1))
        throw std::invalid_argument("mat_left: shape mismatch " + p.shape_string() + " vs " +
                                    ft.shape_string());
    const int64_t d = ft.dim(0), rows = ft.dim(1), cols = ft.dim(2);
    Tensor out({d, rows, cols});
    for (int64_t c = 0; c < d; ++c)
        for (int64_t i = 0; i < rows; ++i)
            for (int64_t j = 0; j < cols; ++j) {
                double acc = 0.0;
                for (int64_t k = 0; k < rows; ++k)
                    acc += p.at2(i, k) * ft[(c * rows + k) * cols + j];
                out[(c * rows + i) * cols + j] = acc;
            }
    Var v = f.tape->make(Op::MatLeft, {f.id}, std::move(out));
    f.tape->node(v.id).aux = p;
    return v;
}

Var mat_right(Var f, const Tensor& p) {
    const Tensor& ft = f.value();
    if (p.rank() != 2 || ft.rank() != 3 || p.dim(0) != ft.dim(2) || p.dim(1) != ft.dim(2))
        throw std::invalid_argument("mat_right: shape mismatch " + ft.shape_string() + " vs " +
                                    p.shape_string());
    const int64_t d = ft.dim(0), rows = ft.dim(1), cols = ft.dim(2);
    Tensor out({d, rows, cols});
    for (int64_t c = 0; c < d; ++c)
        for (int64_t i = 0; i < rows; ++i)
            for (int64_t j = 0; j < cols; ++j) {
                double acc = 0.0;
                for (int64_t k = 0; k < cols; ++k)
                    acc += ft[(c * rows + i) * cols + k] * p.at2(k, j);
                out[(c * rows + i) * cols + j] = acc;
            }
    Var v = f.tape->make(Op::MatRight, {f.id}, std::move(out));
    f.tape->node(v.id).aux = p;
    return v;
}

Var masked_row_mean(const Tensor& e, Var f, double divisor) {
    return scale(mat_left(e, f), 1.0 / divisor);
}

Var masked_col_mean(Var f, const Tensor& e, double divisor) {
    return scale(mat_right(f, e), 1.0 / divisor);
}

Var concat_first(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_first: no inputs");
    std::vector<int64_t> oshape = parts[0].value().shape();
    int64_t d = 0;
    for (const Var& p : parts) {
        const Tensor& t = p.value();
        if (t.rank() != oshape.size())
            throw std::invalid_argument("concat_first: rank mismatch " + t.shape_string() +
                                        " vs " + parts[0].value().shape_string());
        for (size_t k = 1; k < oshape.size(); ++k)
            if (t.shape()[k] != oshape[k])
                throw std::invalid_argument("concat_first: shape mismatch " + t.shape_string() +
                                            " vs " + parts[0].value().shape_string());
        d += t.dim(0);
    }
    oshape[0] = d;
    Tensor out(oshape);
    std::vector<int32_t> ids;
    int64_t off = 0;
    for (const Var& p : parts) {
        const Tensor& t = p.value();
        for (int64_t k = 0; k < t.numel(); ++k) out[off + k] = t[k];
        off += t.numel();
        ids.push_back(p.id);
    }
    return parts[0].tape->make(Op::ConcatFirst, std::move(ids), std::move(out));
}

Var diag_first(Var f) {
    const Tensor& ft = f.value();
    if (ft.rank() != 3 || ft.dim(1) != ft.dim(2))
        throw std::invalid_argument("diag_first: expected (d,I,I), got " + ft.shape_string());
    const int64_t d = ft.dim(0), m = ft.dim(1);
    Tensor out({d, m});
    for (int64_t c = 0; c < d; ++c)
        for (int64_t i = 0; i < m; ++i) out[c * m + i] = ft[(c * m + i) * m + i];
    return f.tape->make(Op::DiagFirst, {f.id}, std::move(out));
}

Var dot_cols(Var w, Var m) {
    const Tensor& wt = w.value();
    const Tensor& mt = m.value();
    if (wt.rank() != 1 || mt.rank() != 2 || wt.dim(0) != mt.dim(0))
        throw std::invalid_argument("dot_cols: shape mismatch " + wt.shape_string() + " vs " +
                                    mt.shape_string());
    const int64_t d = wt.dim(0), cols = mt.dim(1);
    Tensor out({cols});
    for (int64_t c = 0; c < d; ++c)
        for (int64_t j = 0; j < cols; ++j) out[j] += wt[c] * mt[c * cols + j];
    return w.tape->make(Op::DotCols, {w.id, m.id}, std::move(out));
}

Var add_scalar_var(Var x, Var s) {
    if (s.value().numel() != 1)
        throw std::invalid_argument("add_scalar_var: second argument must be scalar, got " +
                                    s.value().shape_string());
    Tensor out(x.value().shape());
    const double sv = s.value()[0];
    const int64_t n = out.numel();
    for (int64_t k = 0; k < n; ++k) out[k] = x.value()[k] + sv;
    return x.tape->make(Op::AddScalarVar, {x.id, s.id}, std::move(out));
}

Var col_bcast(Var v, int64_t cols) {
    const Tensor& vt = v.value();
    if (vt.rank() != 1) throw std::invalid_argument("col_bcast: expected vector, got " + vt.shape_string());
    const int64_t rows = vt.dim(0);
    Tensor out({rows, cols});
    for (int64_t i = 0; i < rows; ++i)
        for (int64_t s = 0; s < cols; ++s) out[i * cols + s] = vt[i];
    return v.tape->make(Op::ColBcast, {v.id}, std::move(out));
}

Var reduce_sum(Var x) {
    double acc = 0.0;
    const int64_t n = x.value().numel();
    for (int64_t k = 0; k < n; ++k) acc += x.value()[k];
    return x.tape->make(Op::ReduceSum, {x.id}, Tensor::scalar(acc));
}

Var affine_cols(Var w, Var m, Var b) { return add_scalar_var(dot_cols(w, m), b); }

void backward(Var root) { root.tape->backward(root.id); }

} // namespace eemax
