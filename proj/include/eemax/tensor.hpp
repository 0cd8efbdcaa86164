#ifndef EEMAX_TENSOR_HPP
#define EEMAX_TENSOR_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace eemax {

/// Dense row-major float64 tensor. Rank is the length of shape();
/// scalars have an empty shape and a single element.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int64_t> shape)
        : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

    Tensor(std::vector<int64_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<int64_t>(data_.size()) != checked_numel(shape_))
            throw std::invalid_argument("Tensor: data length " + std::to_string(data_.size()) +
                                        " does not match shape " + shape_string(shape_));
    }

    static Tensor scalar(double v) { return Tensor({}, {v}); }

    static Tensor full(std::vector<int64_t> shape, double v) {
        Tensor t(std::move(shape));
        for (double& x : t.data_) x = v;
        return t;
    }

    /// Identity matrix of size n.
    static Tensor eye(int64_t n) {
        Tensor t({n, n});
        for (int64_t i = 0; i < n; ++i) t.data_[static_cast<size_t>(i * n + i)] = 1.0;
        return t;
    }

    /// Extraction matrix E = 1 - I: all ones except a zero diagonal.
    /// Masks out the self channel in category aggregations.
    static Tensor extraction(int64_t n) {
        Tensor t = full({n, n}, 1.0);
        for (int64_t i = 0; i < n; ++i) t.data_[static_cast<size_t>(i * n + i)] = 0.0;
        return t;
    }

    const std::vector<int64_t>& shape() const { return shape_; }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    int64_t dim(size_t i) const { return shape_.at(i); }
    size_t rank() const { return shape_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    /// (i, j) access for rank-2 tensors.
    double& at2(int64_t i, int64_t j) { return data_[static_cast<size_t>(i * shape_[1] + j)]; }
    double at2(int64_t i, int64_t j) const { return data_[static_cast<size_t>(i * shape_[1] + j)]; }

    /// (c, i, j) access for rank-3 tensors.
    double& at3(int64_t c, int64_t i, int64_t j) {
        return data_[static_cast<size_t>((c * shape_[1] + i) * shape_[2] + j)];
    }
    double at3(int64_t c, int64_t i, int64_t j) const {
        return data_[static_cast<size_t>((c * shape_[1] + i) * shape_[2] + j)];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    static std::string shape_string(const std::vector<int64_t>& s) {
        std::string out = "(";
        for (size_t i = 0; i < s.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(s[i]);
        }
        out += ")";
        return out;
    }

    std::string shape_string() const { return shape_string(shape_); }

private:
    static int64_t checked_numel(const std::vector<int64_t>& shape) {
        int64_t n = 1;
        for (int64_t e : shape) {
            if (e < 0) throw std::invalid_argument("Tensor: negative extent in shape " + shape_string(shape));
            n *= e;
        }
        return n;
    }

    std::vector<int64_t> shape_;
    std::vector<double> data_;
};

} // namespace eemax

#endif
