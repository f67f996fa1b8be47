#pragma once

#include <cstdint>
#include <vector>

#include "lffd/tensor.hpp"

// Layer-level API over the raw kernels: owns parameter/cache types, shape
// validation, and the Parallel/Serial kernel dispatch (see lffd/exec.hpp).

namespace lffd {

template <typename T>
struct ConvParams {
    Tensor<T> weights; // O x I x 3 x 3
    Tensor<T> bias;    // O
};

template <typename T>
struct BNParams {
    Tensor<T> gamma;        // C
    Tensor<T> beta;         // C
    Tensor<T> running_mean; // C
    Tensor<T> running_var;  // C
    double momentum = 0.9;  // weight of the batch statistic in the running update
    double epsilon = 1e-5;
};

template <typename T>
struct FCParams {
    Tensor<T> weights; // K x D
    Tensor<T> bias;    // K
};

template <typename T>
struct ConvCache {
    Tensor<T> input;
};

template <typename T>
struct BNCache {
    Tensor<T> x_hat;
    std::vector<double> inv_std; // per channel, 1/sqrt(batch_var + eps)
};

struct ReluCache {
    std::vector<std::uint8_t> mask; // input > 0
    Shape shape;
};

struct PoolCache {
    std::vector<std::int64_t> argmax; // flat input index per output cell
    Shape in_shape;
    Shape out_shape;
};

template <typename T>
struct FCCache {
    Tensor<T> input; // N x D
};

template <typename T>
struct ConvGrads {
    Tensor<T> d_input, d_weights, d_bias;
};

template <typename T>
struct BNGrads {
    Tensor<T> d_input, d_gamma, d_beta;
};

template <typename T>
struct FCGrads {
    Tensor<T> d_input, d_weights, d_bias;
};

// 3x3, stride 1, zero padding 1: output spatial size equals input's.
template <typename T>
Tensor<T> conv_forward(const ConvParams<T>& p, const Tensor<T>& input, ConvCache<T>* cache);

// need_input=false skips the d_input computation (first conv of a net).
template <typename T>
ConvGrads<T> conv_backward(const ConvParams<T>& p, const ConvCache<T>& cache,
                           const Tensor<T>& d_out, bool need_input = true);

// Train mode: batch statistics, running stats updated as
// running <- (1 - momentum) * running + momentum * batch.
template <typename T>
Tensor<T> batchnorm_forward_train(BNParams<T>& p, const Tensor<T>& input, BNCache<T>* cache);

// Infer mode: running statistics, no mutation.
template <typename T>
Tensor<T> batchnorm_forward_infer(const BNParams<T>& p, const Tensor<T>& input);

template <typename T>
BNGrads<T> batchnorm_backward(const BNParams<T>& p, const BNCache<T>& cache, const Tensor<T>& d_out);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input, ReluCache* cache);

template <typename T>
Tensor<T> relu_backward(const ReluCache& cache, const Tensor<T>& d_out);

// 2x2 window, stride 2; odd trailing row/column dropped; ties keep the
// lowest flat index.
template <typename T>
Tensor<T> maxpool_forward(const Tensor<T>& input, PoolCache* cache);

template <typename T>
Tensor<T> maxpool_backward(const PoolCache& cache, const Tensor<T>& d_out);

template <typename T>
Tensor<T> fc_forward(const FCParams<T>& p, const Tensor<T>& input, FCCache<T>* cache);

template <typename T>
FCGrads<T> fc_backward(const FCParams<T>& p, const FCCache<T>& cache, const Tensor<T>& d_out);

// Row-wise softmax with max subtraction; logits must be finite.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

} // namespace lffd
