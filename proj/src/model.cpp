#include "lffd/model.hpp"

#include <cmath>

#include "lffd/errors.hpp"
#include "lffd/rng.hpp"

namespace lffd {

namespace {

struct Dims {
    int c, h, w;
};

// Activation dims after each layer; also validates pool feasibility.
Dims walk_to(const ArchSpec& spec, std::size_t end) {
    const LayerDesc& in = spec.input();
    Dims d{in.channels, in.height, in.width};
    for (std::size_t i = 1; i < end; ++i) {
        const LayerDesc& l = spec.layers[i];
        switch (l.kind) {
        case LayerKind::Conv:
            d.c = l.channels;
            break;
        case LayerKind::MaxPool:
            if (d.h < 2 || d.w < 2)
                throw ConfigError("input size " + std::to_string(in.height) +
                                  " is too small for '" + spec.id + "' (pool underflow)");
            d.h /= 2;
            d.w /= 2;
            break;
        case LayerKind::Flatten:
            d.c = d.c * d.h * d.w;
            d.h = d.w = 1;
            break;
        case LayerKind::FC:
            d.c = l.channels;
            break;
        default:
            break;
        }
    }
    return d;
}

void append_block(std::vector<LayerDesc>& layers, int idx, bool pool) {
    const std::string n = std::to_string(idx);
    layers.push_back({LayerKind::Conv, "conv" + n, 32, 0, 0});
    layers.push_back({LayerKind::BatchNorm, "bn" + n, 0, 0, 0});
    layers.push_back({LayerKind::Relu, "relu" + n, 0, 0, 0});
    if (pool) layers.push_back({LayerKind::MaxPool, "pool" + n, 0, 0, 0});
}

} // namespace

ArchSpec build_arch(const std::string& version, int input_hw) {
    if (version != "v1" && version != "v2")
        throw ConfigError("unknown model version '" + version + "' (expected v1 or v2)");
    if (input_hw < 1) throw ConfigError("input size must be positive");
    ArchSpec spec;
    spec.id = "lightffdnet-" + version;
    if (input_hw != 224) spec.id += "@" + std::to_string(input_hw);
    spec.layers.push_back({LayerKind::Input, "input", 3, input_hw, input_hw});
    const int blocks = version == "v1" ? 2 : 5;
    for (int b = 1; b <= blocks; ++b) {
        // v1 pools after block 1 only; v2 pools after blocks 1-4.
        const bool pool = version == "v1" ? b == 1 : b != blocks;
        append_block(spec.layers, b, pool);
    }
    spec.layers.push_back({LayerKind::Flatten, "flatten", 0, 0, 0});
    spec.layers.push_back({LayerKind::FC, "fc", 2, 0, 0});
    spec.layers.push_back({LayerKind::Softmax, "softmax", 0, 0, 0});
    walk_to(spec, spec.layers.size()); // validates pool feasibility
    return spec;
}

ArchSpec arch_from_id(const std::string& id) {
    const std::string prefix = "lightffdnet-";
    if (id.rfind(prefix, 0) != 0) throw ConfigError("unknown architecture id '" + id + "'");
    std::string rest = id.substr(prefix.size());
    int hw = 224;
    if (const auto at = rest.find('@'); at != std::string::npos) {
        try {
            std::size_t used = 0;
            hw = std::stoi(rest.substr(at + 1), &used);
            if (used != rest.size() - at - 1) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ConfigError("unknown architecture id '" + id + "'");
        }
        rest = rest.substr(0, at);
    }
    ArchSpec spec = build_arch(rest, hw);
    if (spec.id != id) throw ConfigError("unknown architecture id '" + id + "'");
    return spec;
}

int paper_layer_count(const ArchSpec& spec) {
    int n = 0;
    for (const LayerDesc& l : spec.layers)
        if (l.kind == LayerKind::Conv || l.kind == LayerKind::FC) ++n;
    return n;
}

int fc_input_dim(const ArchSpec& spec) {
    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        if (spec.layers[i].kind == LayerKind::FC) return walk_to(spec, i).c;
    throw ConfigError("architecture '" + spec.id + "' has no FC layer");
}

std::int64_t param_count(const ArchSpec& spec) {
    std::int64_t total = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerDesc& l = spec.layers[i];
        const Dims d = walk_to(spec, i); // dims entering this layer
        switch (l.kind) {
        case LayerKind::Conv:
            total += static_cast<std::int64_t>(l.channels) * d.c * 9 + l.channels;
            break;
        case LayerKind::BatchNorm:
            total += 2 * static_cast<std::int64_t>(d.c);
            break;
        case LayerKind::FC:
            total += static_cast<std::int64_t>(l.channels) * d.c + l.channels;
            break;
        default:
            break;
        }
    }
    return total;
}

template <typename T>
static Tensor<T> glorot_uniform(const Shape& shape, std::int64_t fan_in, std::int64_t fan_out,
                                Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor<T> t(shape);
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.uniform(-bound, bound));
    return t;
}

template <typename T>
Model<T> init_params(const ArchSpec& spec, std::uint64_t seed) {
    Model<T> m;
    m.spec = spec;
    m.rng_seed = seed;
    m.params.resize(spec.layers.size());
    Rng rng(seed);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerDesc& l = spec.layers[i];
        const Dims d = walk_to(spec, i);
        switch (l.kind) {
        case LayerKind::Conv: {
            ConvParams<T> p;
            p.weights = glorot_uniform<T>(Shape{l.channels, d.c, 3, 3},
                                          static_cast<std::int64_t>(d.c) * 9,
                                          static_cast<std::int64_t>(l.channels) * 9, rng);
            p.bias = Tensor<T>(Shape{l.channels}, T(0));
            m.params[i] = std::move(p);
            break;
        }
        case LayerKind::BatchNorm: {
            BNParams<T> p;
            p.gamma = Tensor<T>(Shape{d.c}, T(1));
            p.beta = Tensor<T>(Shape{d.c}, T(0));
            p.running_mean = Tensor<T>(Shape{d.c}, T(0));
            p.running_var = Tensor<T>(Shape{d.c}, T(1));
            m.params[i] = std::move(p);
            break;
        }
        case LayerKind::FC: {
            FCParams<T> p;
            p.weights = glorot_uniform<T>(Shape{l.channels, d.c}, d.c, l.channels, rng);
            p.bias = Tensor<T>(Shape{l.channels}, T(0));
            m.params[i] = std::move(p);
            break;
        }
        default:
            m.params[i] = std::monostate{};
            break;
        }
    }
    return m;
}

namespace {

template <typename T>
void check_input(const ArchSpec& spec, const Tensor<T>& batch) {
    const LayerDesc& in = spec.input();
    if (batch.rank() != 4 || batch.dim(1) != in.channels || batch.dim(2) != in.height ||
        batch.dim(3) != in.width)
        throw ShapeError("model '" + spec.id + "' expects Nx" + std::to_string(in.channels) + "x" +
                         std::to_string(in.height) + "x" + std::to_string(in.width) +
                         " input, got " + shape_str(batch.shape()));
}

} // namespace

template <typename T>
Tensor<T> model_forward(Model<T>& m, const Tensor<T>& batch,
                        std::vector<ModelLayerCache<T>>& caches) {
    check_input(m.spec, batch);
    caches.clear();
    caches.reserve(m.spec.layers.size());
    Tensor<T> x = batch;
    for (std::size_t i = 0; i < m.spec.layers.size(); ++i) {
        switch (m.spec.layers[i].kind) {
        case LayerKind::Input:
            caches.emplace_back(std::monostate{});
            break;
        case LayerKind::Conv: {
            ConvCache<T> c;
            x = conv_forward(std::get<ConvParams<T>>(m.params[i]), x, &c);
            caches.emplace_back(std::move(c));
            break;
        }
        case LayerKind::BatchNorm: {
            BNCache<T> c;
            x = batchnorm_forward_train(std::get<BNParams<T>>(m.params[i]), x, &c);
            caches.emplace_back(std::move(c));
            break;
        }
        case LayerKind::Relu: {
            ReluCache c;
            x = relu_forward(x, &c);
            caches.emplace_back(std::move(c));
            break;
        }
        case LayerKind::MaxPool: {
            PoolCache c;
            x = maxpool_forward(x, &c);
            caches.emplace_back(std::move(c));
            break;
        }
        case LayerKind::Flatten: {
            FlattenCache c{x.shape()};
            const int n = x.dim(0);
            x = x.reshaped(Shape{n, static_cast<int>(x.numel() / n)});
            caches.emplace_back(std::move(c));
            break;
        }
        case LayerKind::FC: {
            FCCache<T> c;
            x = fc_forward(std::get<FCParams<T>>(m.params[i]), x, &c);
            caches.emplace_back(std::move(c));
            break;
        }
        case LayerKind::Softmax:
            x = softmax(x);
            caches.emplace_back(std::monostate{});
            break;
        }
    }
    return x;
}

template <typename T>
Tensor<T> model_infer(const Model<T>& m, const Tensor<T>& batch) {
    check_input(m.spec, batch);
    Tensor<T> x = batch;
    for (std::size_t i = 0; i < m.spec.layers.size(); ++i) {
        switch (m.spec.layers[i].kind) {
        case LayerKind::Input:
            break;
        case LayerKind::Conv:
            x = conv_forward<T>(std::get<ConvParams<T>>(m.params[i]), x, nullptr);
            break;
        case LayerKind::BatchNorm:
            x = batchnorm_forward_infer(std::get<BNParams<T>>(m.params[i]), x);
            break;
        case LayerKind::Relu:
            x = relu_forward(x, nullptr);
            break;
        case LayerKind::MaxPool:
            x = maxpool_forward(x, nullptr);
            break;
        case LayerKind::Flatten: {
            const int n = x.dim(0);
            x = x.reshaped(Shape{n, static_cast<int>(x.numel() / n)});
            break;
        }
        case LayerKind::FC:
            x = fc_forward<T>(std::get<FCParams<T>>(m.params[i]), x, nullptr);
            break;
        case LayerKind::Softmax:
            x = softmax(x);
            break;
        }
    }
    return x;
}

template <typename T>
GradMap<T> model_backward(const Model<T>& m, const std::vector<ModelLayerCache<T>>& caches,
                          const Tensor<T>& d_logits) {
    if (caches.size() != m.spec.layers.size())
        throw ShapeError("cache list does not match architecture '" + m.spec.id + "'");
    GradMap<T> grads;
    Tensor<T> g = d_logits;
    for (std::size_t ri = m.spec.layers.size(); ri-- > 0;) {
        const LayerDesc& l = m.spec.layers[ri];
        const auto cache_mismatch = [&]() {
            return ShapeError("cache for layer '" + l.name + "' does not match its kind");
        };
        switch (l.kind) {
        case LayerKind::Softmax:
            break; // gradient arrives at the logits (fused softmax + cross-entropy)
        case LayerKind::FC: {
            const auto* c = std::get_if<FCCache<T>>(&caches[ri]);
            if (!c) throw cache_mismatch();
            FCGrads<T> fg = fc_backward(std::get<FCParams<T>>(m.params[ri]), *c, g);
            grads[l.name + ".weights"] = std::move(fg.d_weights);
            grads[l.name + ".bias"] = std::move(fg.d_bias);
            g = std::move(fg.d_input);
            break;
        }
        case LayerKind::Flatten: {
            const auto* c = std::get_if<FlattenCache>(&caches[ri]);
            if (!c) throw cache_mismatch();
            g = g.reshaped(c->in_shape);
            break;
        }
        case LayerKind::Relu: {
            const auto* c = std::get_if<ReluCache>(&caches[ri]);
            if (!c) throw cache_mismatch();
            g = relu_backward(*c, g);
            break;
        }
        case LayerKind::MaxPool: {
            const auto* c = std::get_if<PoolCache>(&caches[ri]);
            if (!c) throw cache_mismatch();
            g = maxpool_backward(*c, g);
            break;
        }
        case LayerKind::BatchNorm: {
            const auto* c = std::get_if<BNCache<T>>(&caches[ri]);
            if (!c) throw cache_mismatch();
            BNGrads<T> bg = batchnorm_backward(std::get<BNParams<T>>(m.params[ri]), *c, g);
            grads[l.name + ".gamma"] = std::move(bg.d_gamma);
            grads[l.name + ".beta"] = std::move(bg.d_beta);
            g = std::move(bg.d_input);
            break;
        }
        case LayerKind::Conv: {
            const auto* c = std::get_if<ConvCache<T>>(&caches[ri]);
            if (!c) throw cache_mismatch();
            const bool need_input = ri > 1; // skip d_input for the conv fed by Input
            ConvGrads<T> cg = conv_backward(std::get<ConvParams<T>>(m.params[ri]), *c, g, need_input);
            grads[l.name + ".weights"] = std::move(cg.d_weights);
            grads[l.name + ".bias"] = std::move(cg.d_bias);
            if (need_input) g = std::move(cg.d_input);
            break;
        }
        case LayerKind::Input:
            break;
        }
    }
    return grads;
}

namespace {

template <typename ModelT, typename Fn>
void visit_params(ModelT& m, const Fn& fn, bool include_running) {
    for (std::size_t i = 0; i < m.spec.layers.size(); ++i) {
        const std::string& name = m.spec.layers[i].name;
        std::visit(
            [&](auto& p) {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, std::monostate>) {
                    (void)p;
                } else if constexpr (requires { p.gamma; }) {
                    fn(name + ".gamma", p.gamma);
                    fn(name + ".beta", p.beta);
                    if (include_running) {
                        fn(name + ".running_mean", p.running_mean);
                        fn(name + ".running_var", p.running_var);
                    }
                } else {
                    fn(name + ".weights", p.weights);
                    fn(name + ".bias", p.bias);
                }
            },
            m.params[i]);
    }
}

} // namespace

template <typename T>
void for_each_trainable(Model<T>& m, const std::function<void(const std::string&, Tensor<T>&)>& fn) {
    visit_params(m, fn, false);
}

template <typename T>
void for_each_trainable(const Model<T>& m,
                        const std::function<void(const std::string&, const Tensor<T>&)>& fn) {
    visit_params(m, fn, false);
}

template <typename T>
void for_each_tensor(Model<T>& m, const std::function<void(const std::string&, Tensor<T>&)>& fn) {
    visit_params(m, fn, true);
}

template <typename T>
void for_each_tensor(const Model<T>& m,
                     const std::function<void(const std::string&, const Tensor<T>&)>& fn) {
    visit_params(m, fn, true);
}

#define LFFD_INSTANTIATE_MODEL(T)                                                              \
    template Model<T> init_params<T>(const ArchSpec&, std::uint64_t);                          \
    template Tensor<T> model_forward<T>(Model<T>&, const Tensor<T>&,                           \
                                        std::vector<ModelLayerCache<T>>&);                     \
    template Tensor<T> model_infer<T>(const Model<T>&, const Tensor<T>&);                      \
    template GradMap<T> model_backward<T>(const Model<T>&,                                     \
                                          const std::vector<ModelLayerCache<T>>&,              \
                                          const Tensor<T>&);                                   \
    template void for_each_trainable<T>(Model<T>&,                                             \
                                        const std::function<void(const std::string&, Tensor<T>&)>&); \
    template void for_each_trainable<T>(                                                       \
        const Model<T>&, const std::function<void(const std::string&, const Tensor<T>&)>&);    \
    template void for_each_tensor<T>(Model<T>&,                                                \
                                     const std::function<void(const std::string&, Tensor<T>&)>&); \
    template void for_each_tensor<T>(                                                          \
        const Model<T>&, const std::function<void(const std::string&, const Tensor<T>&)>&);

LFFD_INSTANTIATE_MODEL(float)
LFFD_INSTANTIATE_MODEL(double)

#undef LFFD_INSTANTIATE_MODEL

} // namespace lffd
