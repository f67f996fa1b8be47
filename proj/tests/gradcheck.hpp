#pragma once

// Central finite-difference gradient checking in 64-bit, shared by the unit
// tests and the acceptance gate. Objectives are scalarized as dot(out, r)
// with a fixed random weighting r, whose gradient at out is exactly r.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "lffd/layers.hpp"
#include "lffd/model.hpp"
#include "lffd/optim.hpp"
#include "lffd/rng.hpp"
#include "lffd/tensor.hpp"

namespace lffd::testing {

inline Tensor<double> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0,
                                    double hi = 1.0) {
    Tensor<double> t(shape);
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

inline double dot_objective(const Tensor<double>& out, const Tensor<double>& r) {
    double s = 0.0;
    for (std::int64_t i = 0; i < out.numel(); ++i) s += out[i] * r[i];
    return s;
}

inline std::vector<std::int64_t> all_coords(std::int64_t numel) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(numel));
    std::iota(idx.begin(), idx.end(), std::int64_t{0});
    return idx;
}

inline std::vector<std::int64_t> sample_coords(std::int64_t numel, int want, Rng& rng) {
    std::vector<std::int64_t> idx = all_coords(numel);
    if (numel <= want) return idx;
    rng.shuffle(idx);
    idx.resize(static_cast<std::size_t>(want));
    return idx;
}

// Perturbs x in place coordinate by coordinate and compares the central
// difference of objective() against the analytic gradient. Coordinates
// where both values are ~0 pass trivially.
inline double max_rel_err(Tensor<double>& x, const std::function<double()>& objective,
                          const Tensor<double>& analytic,
                          const std::vector<std::int64_t>& coords, double h = 1e-5) {
    double worst = 0.0;
    for (std::int64_t i : coords) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = objective();
        x[i] = keep - h;
        const double down = objective();
        x[i] = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double exact = analytic[i];
        if (std::abs(exact) + std::abs(numeric) <= 1e-8) continue;
        worst = std::max(worst, std::abs(exact - numeric) /
                                    std::max(std::abs(exact), std::abs(numeric)));
    }
    return worst;
}

// Each check_* runs `instances` random small instances of one layer and
// returns the worst relative error seen across all checked inputs.

inline double check_conv_grads(int instances, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < instances; ++k) {
        const int n = 1 + static_cast<int>(rng.below(2));
        const int ic = 1 + static_cast<int>(rng.below(3));
        const int oc = 1 + static_cast<int>(rng.below(3));
        const int h = 2 + static_cast<int>(rng.below(4));
        const int w = 2 + static_cast<int>(rng.below(4));
        Tensor<double> x = random_tensor({n, ic, h, w}, rng);
        ConvParams<double> p{random_tensor({oc, ic, 3, 3}, rng), random_tensor({oc}, rng)};
        const Tensor<double> r = random_tensor({n, oc, h, w}, rng);

        ConvCache<double> cache;
        conv_forward(p, x, &cache);
        const ConvGrads<double> g = conv_backward(p, cache, r);

        const auto obj = [&] { return dot_objective(conv_forward<double>(p, x, nullptr), r); };
        worst = std::max(worst, max_rel_err(x, obj, g.d_input, all_coords(x.numel())));
        worst = std::max(worst,
                         max_rel_err(p.weights, obj, g.d_weights, all_coords(p.weights.numel())));
        worst = std::max(worst, max_rel_err(p.bias, obj, g.d_bias, all_coords(p.bias.numel())));
    }
    return worst;
}

inline double check_bn_grads(int instances, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < instances; ++k) {
        const int n = 2 + static_cast<int>(rng.below(2));
        const int c = 1 + static_cast<int>(rng.below(3));
        const int h = 1 + static_cast<int>(rng.below(3));
        const int w = 1 + static_cast<int>(rng.below(3));
        Tensor<double> x = random_tensor({n, c, h, w}, rng);
        BNParams<double> p;
        p.gamma = random_tensor({c}, rng, 0.5, 1.5);
        p.beta = random_tensor({c}, rng);
        p.running_mean = Tensor<double>({c});
        p.running_var = Tensor<double>({c}, 1.0);
        const Tensor<double> r = random_tensor({n, c, h, w}, rng);

        BNParams<double> train_p = p; // forward_train updates running stats
        BNCache<double> cache;
        batchnorm_forward_train(train_p, x, &cache);
        const BNGrads<double> g = batchnorm_backward(p, cache, r);

        const auto obj = [&] {
            BNParams<double> q = p;
            return dot_objective(batchnorm_forward_train<double>(q, x, nullptr), r);
        };
        worst = std::max(worst, max_rel_err(x, obj, g.d_input, all_coords(x.numel())));
        worst =
            std::max(worst, max_rel_err(p.gamma, obj, g.d_gamma, all_coords(p.gamma.numel())));
        worst = std::max(worst, max_rel_err(p.beta, obj, g.d_beta, all_coords(p.beta.numel())));
    }
    return worst;
}

// Inputs kept away from the ReLU kink at 0 so the FD step cannot cross it.
inline double check_relu_grads(int instances, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < instances; ++k) {
        const int count = 4 + static_cast<int>(rng.below(40));
        Tensor<double> x({count});
        for (std::int64_t i = 0; i < x.numel(); ++i) {
            const double sign = rng.below(2) == 0 ? -1.0 : 1.0;
            x[i] = sign * rng.uniform(1e-2, 1.0);
        }
        const Tensor<double> r = random_tensor({count}, rng);
        ReluCache cache;
        relu_forward(x, &cache);
        const Tensor<double> d = relu_backward<double>(cache, r);
        const auto obj = [&] { return dot_objective(relu_forward<double>(x, nullptr), r); };
        worst = std::max(worst, max_rel_err(x, obj, d, all_coords(x.numel())));
    }
    return worst;
}

// All-distinct input values keep the pooling argmax stable under the
// +-h perturbation (tie-free instances).
inline double check_pool_grads(int instances, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < instances; ++k) {
        const int n = 1 + static_cast<int>(rng.below(2));
        const int c = 1 + static_cast<int>(rng.below(3));
        const int h = 2 + static_cast<int>(rng.below(4));
        const int w = 2 + static_cast<int>(rng.below(4));
        Tensor<double> x({n, c, h, w});
        std::vector<std::int64_t> order = all_coords(x.numel());
        rng.shuffle(order);
        for (std::int64_t i = 0; i < x.numel(); ++i)
            x[i] = 0.01 * static_cast<double>(order[static_cast<std::size_t>(i)]) - 0.5;
        PoolCache cache;
        const Tensor<double> out = maxpool_forward(x, &cache);
        const Tensor<double> r = random_tensor(out.shape(), rng);
        const Tensor<double> d = maxpool_backward<double>(cache, r);
        const auto obj = [&] { return dot_objective(maxpool_forward<double>(x, nullptr), r); };
        worst = std::max(worst, max_rel_err(x, obj, d, all_coords(x.numel())));
    }
    return worst;
}

inline double check_fc_grads(int instances, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < instances; ++k) {
        const int n = 1 + static_cast<int>(rng.below(3));
        const int d = 1 + static_cast<int>(rng.below(6));
        const int kk = 2 + static_cast<int>(rng.below(3));
        Tensor<double> x = random_tensor({n, d}, rng);
        FCParams<double> p{random_tensor({kk, d}, rng), random_tensor({kk}, rng)};
        const Tensor<double> r = random_tensor({n, kk}, rng);
        FCCache<double> cache;
        fc_forward(p, x, &cache);
        const FCGrads<double> g = fc_backward(p, cache, r);
        const auto obj = [&] { return dot_objective(fc_forward<double>(p, x, nullptr), r); };
        worst = std::max(worst, max_rel_err(x, obj, g.d_input, all_coords(x.numel())));
        worst = std::max(worst,
                         max_rel_err(p.weights, obj, g.d_weights, all_coords(p.weights.numel())));
        worst = std::max(worst, max_rel_err(p.bias, obj, g.d_bias, all_coords(p.bias.numel())));
    }
    return worst;
}

// Fused softmax + mean cross-entropy, differentiated at the logits.
inline double check_softmax_ce_grads(int instances, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (int inst = 0; inst < instances; ++inst) {
        const int n = 1 + static_cast<int>(rng.below(4));
        const int k = 2 + static_cast<int>(rng.below(3));
        Tensor<double> logits = random_tensor({n, k}, rng, -2.0, 2.0);
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (int& l : labels) l = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
        const Tensor<double> probs = softmax(logits);
        const Tensor<double> g = softmax_ce_grad(probs, labels);
        const auto obj = [&] { return cross_entropy_loss(softmax(logits), labels); };
        worst = std::max(worst, max_rel_err(logits, obj, g, all_coords(logits.numel())));
    }
    return worst;
}

// Parameter gradients of a reduced-input v1 through the full composition
// (conv/BN/ReLU/pool/FC/softmax/cross-entropy), checked on a coordinate
// subsample of every trainable tensor.
inline double check_end_to_end_grads(int coords_per_tensor, std::uint64_t seed) {
    Rng rng(seed);
    const ArchSpec spec = build_arch("v1", 8);
    const Model<double> base = init_params<double>(spec, seed);
    Tensor<double> batch = random_tensor({2, 3, 8, 8}, rng, 0.0, 1.0);
    const std::vector<int> labels = {0, 1};

    Model<double> work = base;
    std::vector<ModelLayerCache<double>> caches;
    const Tensor<double> probs = model_forward(work, batch, caches);
    const GradMap<double> grads =
        model_backward(work, caches, softmax_ce_grad(probs, labels));

    const auto loss_with = [&](const std::string& name, std::int64_t coord, double delta) {
        Model<double> m = base;
        for_each_trainable<double>(m, [&](const std::string& n, Tensor<double>& t) {
            if (n == name) t[coord] += delta;
        });
        std::vector<ModelLayerCache<double>> c;
        return cross_entropy_loss(model_forward(m, batch, c), labels);
    };

    const double h = 1e-5;
    double worst = 0.0;
    for (const auto& [name, grad] : grads) {
        for (std::int64_t i : sample_coords(grad.numel(), coords_per_tensor, rng)) {
            const double numeric =
                (loss_with(name, i, h) - loss_with(name, i, -h)) / (2.0 * h);
            const double exact = grad[i];
            if (std::abs(exact) + std::abs(numeric) <= 1e-8) continue;
            worst = std::max(worst, std::abs(exact - numeric) /
                                        std::max(std::abs(exact), std::abs(numeric)));
        }
    }
    return worst;
}

} // namespace lffd::testing
