#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "lffd/layers.hpp"
#include "lffd/tensor.hpp"

namespace lffd {

enum class LayerKind { Input, Conv, BatchNorm, Relu, MaxPool, Flatten, FC, Softmax };

struct LayerDesc {
    LayerKind kind = LayerKind::Input;
    std::string name;          // "conv1", "bn1", "fc", ... — prefixes the parameter names
    int channels = 0;          // Input: image channels; Conv: filters; FC: classes
    int height = 0, width = 0; // Input only
};

struct ArchSpec {
    std::string id; // "lightffdnet-v1", "lightffdnet-v2"; reduced inputs get an "@<hw>" suffix
    std::vector<LayerDesc> layers;

    const LayerDesc& input() const { return layers.front(); }
};

// version is "v1" or "v2". input_hw != 224 builds a reduced-input variant
// (test oracles only) whose id carries the "@<hw>" suffix.
ArchSpec build_arch(const std::string& version, int input_hw = 224);

// Inverse of the id scheme above; rejects unknown ids.
ArchSpec arch_from_id(const std::string& id);

// Layer count by the convention the paper reports (conv + fully connected
// only): 3 for v1, 6 for v2.
int paper_layer_count(const ArchSpec& spec);

int fc_input_dim(const ArchSpec& spec);

// Trainable scalars: conv weights+bias, BN gamma+beta, FC weights+bias.
// Running statistics are not counted.
std::int64_t param_count(const ArchSpec& spec);

template <typename T>
using LayerParams = std::variant<std::monostate, ConvParams<T>, BNParams<T>, FCParams<T>>;

template <typename T>
struct Model {
    ArchSpec spec;
    std::vector<LayerParams<T>> params; // aligned with spec.layers
    std::uint64_t rng_seed = 0;
};

// Glorot-uniform conv/FC weights (bounds ±sqrt(6/(fan_in+fan_out))), zero
// biases, BN gamma=1 beta=0 running mean 0 / var 1. Deterministic in seed.
template <typename T>
Model<T> init_params(const ArchSpec& spec, std::uint64_t seed);

struct FlattenCache {
    Shape in_shape;
};

template <typename T>
using ModelLayerCache =
    std::variant<std::monostate, ConvCache<T>, BNCache<T>, ReluCache, PoolCache, FlattenCache,
                 FCCache<T>>;

// Train-mode forward: fills one cache per layer, updates BN running stats,
// returns softmax probabilities (N x 2).
template <typename T>
Tensor<T> model_forward(Model<T>& m, const Tensor<T>& batch, std::vector<ModelLayerCache<T>>& caches);

// Infer-mode forward: BN uses running stats; pure.
template <typename T>
Tensor<T> model_infer(const Model<T>& m, const Tensor<T>& batch);

template <typename T>
using GradMap = std::map<std::string, Tensor<T>>;

// d_logits is the upstream gradient at the FC output (softmax and
// cross-entropy fuse into (p - onehot)/N upstream of here). Returns
// gradients keyed like the parameters: "conv1.weights", "bn1.gamma", ...
template <typename T>
GradMap<T> model_backward(const Model<T>& m, const std::vector<ModelLayerCache<T>>& caches,
                          const Tensor<T>& d_logits);

// Deterministic iteration over named parameter tensors, layer order.
// for_each_trainable visits what the optimizer updates; for_each_tensor
// additionally visits BN running stats (checkpoint contents).
template <typename T>
void for_each_trainable(Model<T>& m, const std::function<void(const std::string&, Tensor<T>&)>& fn);

template <typename T>
void for_each_trainable(const Model<T>& m,
                        const std::function<void(const std::string&, const Tensor<T>&)>& fn);

template <typename T>
void for_each_tensor(Model<T>& m, const std::function<void(const std::string&, Tensor<T>&)>& fn);

template <typename T>
void for_each_tensor(const Model<T>& m,
                     const std::function<void(const std::string&, const Tensor<T>&)>& fn);

} // namespace lffd
