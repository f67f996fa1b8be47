#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "lffd/errors.hpp"

namespace lffd {

// Extents of a tensor, rank 1..4. Activations are N x C x H x W, conv
// weights are O x I x Kh x Kw, both flat row-major.
using Shape = std::vector<int>;

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ']';
    return os.str();
}

inline std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (int e : s) n *= e;
    return n;
}

// Dense float tensor. float in production, double in gradient-check mode.
// Once built, values are only mutated through explicit in-place updates
// (the optimizer); everything else treats tensors as values.
template <typename T>
class Tensor {
    static_assert(std::is_floating_point_v<T>, "Tensor holds IEEE-754 floats");

public:
    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)) {
        validate_shape(shape_);
        data_.assign(static_cast<std::size_t>(shape_numel(shape_)), fill);
    }

    static Tensor from_data(Shape shape, std::vector<T> data) {
        validate_shape(shape);
        if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = std::move(data);
        return t;
    }

    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    const std::vector<T>& values() const { return data_; }

    T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // NCHW accessor for rank-4 tensors.
    T& at4(int n, int c, int h, int w) { return data_[static_cast<std::size_t>(flat4(n, c, h, w))]; }
    const T& at4(int n, int c, int h, int w) const {
        return data_[static_cast<std::size_t>(flat4(n, c, h, w))];
    }

    std::int64_t flat4(int n, int c, int h, int w) const {
        return ((static_cast<std::int64_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
    }

    // Same data sequence under a new shape; element order unchanged.
    Tensor reshaped(Shape new_shape) const {
        validate_shape(new_shape);
        if (shape_numel(new_shape) != numel())
            throw ShapeError("reshape " + shape_str(shape_) + " -> " + shape_str(new_shape) +
                             ": element count mismatch");
        Tensor t;
        t.shape_ = std::move(new_shape);
        t.data_ = data_;
        return t;
    }

    void fill(T v) { data_.assign(data_.size(), v); }

    bool all_finite() const {
        for (T v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Tensor& o) const { return shape_ == o.shape_ && data_ == o.data_; }

private:
    static void validate_shape(const Shape& s) {
        if (s.empty() || s.size() > 4)
            throw ShapeError("tensor rank must be 1..4, got " + shape_str(s));
        for (int e : s)
            if (e < 1) throw ShapeError("tensor extents must be >= 1, got " + shape_str(s));
    }

    Shape shape_;
    std::vector<T> data_;
};

enum class BinaryOp { Add, Sub, Mul };

template <typename T>
Tensor<T> zip_binary(const Tensor<T>& a, const Tensor<T>& b, BinaryOp op) {
    if (!a.same_shape(b))
        throw ShapeError("zip_binary shape mismatch: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    Tensor<T> out(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    const std::int64_t n = a.numel();
    switch (op) {
    case BinaryOp::Add:
        for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
        break;
    case BinaryOp::Sub:
        for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
        break;
    case BinaryOp::Mul:
        for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
        break;
    }
    return out;
}

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> var; // biased (divide by count)
};

// Per-channel mean and biased variance over all N*H*W elements of an
// NCHW tensor. Two-pass, 64-bit accumulation in flat-index order, so the
// result is bit-reproducible and the variance is structurally >= 0.
template <typename T>
ChannelStats channel_stats(const Tensor<T>& t) {
    if (t.rank() != 4)
        throw ShapeError("channel_stats expects an NCHW tensor, got " + shape_str(t.shape()));
    const int n = t.dim(0), c = t.dim(1), h = t.dim(2), w = t.dim(3);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    const std::int64_t count = static_cast<std::int64_t>(n) * plane;
    ChannelStats st;
    st.mean.assign(static_cast<std::size_t>(c), 0.0);
    st.var.assign(static_cast<std::size_t>(c), 0.0);
    const T* p = t.data();
    for (int ci = 0; ci < c; ++ci) {
        double sum = 0.0;
        for (int ni = 0; ni < n; ++ni) {
            const T* q = p + (static_cast<std::int64_t>(ni) * c + ci) * plane;
            for (std::int64_t i = 0; i < plane; ++i) sum += static_cast<double>(q[i]);
        }
        const double mean = sum / static_cast<double>(count);
        double sq = 0.0;
        for (int ni = 0; ni < n; ++ni) {
            const T* q = p + (static_cast<std::int64_t>(ni) * c + ci) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
                const double d = static_cast<double>(q[i]) - mean;
                sq += d * d;
            }
        }
        st.mean[static_cast<std::size_t>(ci)] = mean;
        st.var[static_cast<std::size_t>(ci)] = sq / static_cast<double>(count);
    }
    return st;
}

} // namespace lffd
