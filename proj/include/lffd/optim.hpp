#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lffd/model.hpp"
#include "lffd/tensor.hpp"

namespace lffd {

// Defaults are the paper's configuration: Adam, lr 1e-4, mini-batch 16.
struct Hyperparams {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 16;
    int epochs = 10;
};

// Throws ConfigError on out-of-range values.
void validate(const Hyperparams& h);

template <typename T>
struct AdamState {
    struct Slot {
        Tensor<T> m, v;
    };
    std::map<std::string, Slot> slots; // keyed like the model's parameter names
    std::int64_t t = 0;
};

// One Adam step over every trainable tensor. Slots are created lazily
// (zeros); a gradient map missing a parameter or shaped differently is an
// error. In-place on model and state.
template <typename T>
void adam_step(Model<T>& model, AdamState<T>& state, const GradMap<T>& grads, const Hyperparams& h);

// Single-tensor Adam update (the primitive adam_step applies per parameter).
template <typename T>
void adam_update_tensor(Tensor<T>& param, const Tensor<T>& grad, Tensor<T>& m, Tensor<T>& v,
                        std::int64_t t, const Hyperparams& h);

// Mean over the batch of -ln(clamp(probs[n, label_n], 1e-12, 1)).
template <typename T>
double cross_entropy_loss(const Tensor<T>& probs, const std::vector<int>& labels);

// Fused gradient of mean cross-entropy through softmax, taken at the
// logits: (probs - onehot(label)) / N.
template <typename T>
Tensor<T> softmax_ce_grad(const Tensor<T>& probs, const std::vector<int>& labels);

} // namespace lffd
