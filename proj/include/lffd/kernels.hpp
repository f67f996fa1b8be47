#pragma once

#include <cstdint>

// Layer compute kernels on raw buffers. Activations are NCHW, conv weights
// O x I x 3 x 3, FC weights K x D, all flat row-major.
//
// Every kernel in lffd::kernels has a serial twin in lffd::kernels::ref with
// the same per-element accumulation order, so the two produce bit-identical
// results; the parity tests assert that and the trainer relies on it.
// Reductions that feed parameter updates accumulate in double.

namespace lffd::kernels {

// 3x3 convolution, zero padding 1, stride 1; spatial size is preserved.
template <typename T>
void conv2d_forward(const T* in, const T* w, const T* b, T* out,
                    int n, int ic, int oc, int h, int wd);

template <typename T>
void conv2d_backward_input(const T* d_out, const T* w, T* d_in,
                           int n, int ic, int oc, int h, int wd);

template <typename T>
void conv2d_backward_weights(const T* d_out, const T* in, T* d_w, T* d_b,
                             int n, int ic, int oc, int h, int wd);

// Per-channel batch mean and biased variance of an NCHW activation.
template <typename T>
void batchnorm_stats(const T* in, double* mean, double* var,
                     int n, int c, int h, int w);

// x_hat = (x - mean) / sqrt(var + eps), out = gamma * x_hat + beta.
// Emits x_hat and per-channel inv_std for the backward pass.
template <typename T>
void batchnorm_normalize(const T* in, const T* gamma, const T* beta,
                         const double* mean, const double* var, double eps,
                         T* out, T* x_hat, double* inv_std,
                         int n, int c, int h, int w);

template <typename T>
void batchnorm_backward(const T* d_out, const T* x_hat, const double* inv_std,
                        const T* gamma, T* d_in, T* d_gamma, T* d_beta,
                        int n, int c, int h, int w);

// mask[i] = in[i] > 0; the subgradient at exactly zero is taken as 0.
template <typename T>
void relu_forward(const T* in, T* out, std::uint8_t* mask, std::int64_t count);

template <typename T>
void relu_backward(const T* d_out, const std::uint8_t* mask, T* d_in, std::int64_t count);

// 2x2 window, stride 2; a trailing odd row/column is dropped. argmax holds
// flat indices into the input; ties resolve to the lowest flat index.
template <typename T>
void maxpool_forward(const T* in, T* out, std::int64_t* argmax,
                     int n, int c, int h, int w);

template <typename T>
void maxpool_backward(const T* d_out, const std::int64_t* argmax, T* d_in,
                      std::int64_t out_count, std::int64_t in_count);

// x: N x D, w: K x D, b: K, y: N x K.
template <typename T>
void fc_forward(const T* x, const T* w, const T* b, T* y, int n, int d, int k);

template <typename T>
void fc_backward_input(const T* d_out, const T* w, T* d_x, int n, int d, int k);

template <typename T>
void fc_backward_weights(const T* d_out, const T* x, T* d_w, T* d_b, int n, int d, int k);

// Row-wise softmax; the row max is always subtracted before exponentiation.
template <typename T>
void softmax_rows(const T* logits, T* probs, int n, int k);

// One Adam step over a parameter block. bc1 = 1 - beta1^t, bc2 = 1 - beta2^t
// are precomputed by the caller; all per-element math runs in double.
template <typename T>
void adam_update(T* param, const T* grad, T* m, T* v, std::int64_t count,
                 double lr, double beta1, double beta2, double eps,
                 double bc1, double bc2);

namespace ref {

template <typename T>
void conv2d_forward(const T* in, const T* w, const T* b, T* out,
                    int n, int ic, int oc, int h, int wd);

template <typename T>
void conv2d_backward_input(const T* d_out, const T* w, T* d_in,
                           int n, int ic, int oc, int h, int wd);

template <typename T>
void conv2d_backward_weights(const T* d_out, const T* in, T* d_w, T* d_b,
                             int n, int ic, int oc, int h, int wd);

template <typename T>
void batchnorm_stats(const T* in, double* mean, double* var,
                     int n, int c, int h, int w);

template <typename T>
void batchnorm_normalize(const T* in, const T* gamma, const T* beta,
                         const double* mean, const double* var, double eps,
                         T* out, T* x_hat, double* inv_std,
                         int n, int c, int h, int w);

template <typename T>
void batchnorm_backward(const T* d_out, const T* x_hat, const double* inv_std,
                        const T* gamma, T* d_in, T* d_gamma, T* d_beta,
                        int n, int c, int h, int w);

template <typename T>
void relu_forward(const T* in, T* out, std::uint8_t* mask, std::int64_t count);

template <typename T>
void relu_backward(const T* d_out, const std::uint8_t* mask, T* d_in, std::int64_t count);

template <typename T>
void maxpool_forward(const T* in, T* out, std::int64_t* argmax,
                     int n, int c, int h, int w);

template <typename T>
void maxpool_backward(const T* d_out, const std::int64_t* argmax, T* d_in,
                      std::int64_t out_count, std::int64_t in_count);

template <typename T>
void fc_forward(const T* x, const T* w, const T* b, T* y, int n, int d, int k);

template <typename T>
void fc_backward_input(const T* d_out, const T* w, T* d_x, int n, int d, int k);

template <typename T>
void fc_backward_weights(const T* d_out, const T* x, T* d_w, T* d_b, int n, int d, int k);

template <typename T>
void softmax_rows(const T* logits, T* probs, int n, int k);

template <typename T>
void adam_update(T* param, const T* grad, T* m, T* v, std::int64_t count,
                 double lr, double beta1, double beta2, double eps,
                 double bc1, double bc2);

} // namespace ref

} // namespace lffd::kernels
