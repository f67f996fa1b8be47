#include "lffd/layers.hpp"

#include "lffd/errors.hpp"
#include "lffd/exec.hpp"
#include "lffd/kernels.hpp"

namespace lffd {

namespace {

bool parallel() { return exec_mode() == ExecMode::Parallel; }

void require(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
}

} // namespace

template <typename T>
Tensor<T> conv_forward(const ConvParams<T>& p, const Tensor<T>& input, ConvCache<T>* cache) {
    require(input.rank() == 4, "conv input must be NCHW, got " + shape_str(input.shape()));
    require(p.weights.rank() == 4 && p.weights.dim(2) == 3 && p.weights.dim(3) == 3,
            "conv weights must be OxIx3x3-shaped, got " + shape_str(p.weights.shape()));
    const int oc = p.weights.dim(0), ic = p.weights.dim(1);
    require(input.dim(1) == ic, "conv channel mismatch: input " + shape_str(input.shape()) +
                                    " vs weights " + shape_str(p.weights.shape()));
    require(p.bias.rank() == 1 && p.bias.dim(0) == oc, "conv bias length must equal filter count");
    const int n = input.dim(0), h = input.dim(2), w = input.dim(3);
    Tensor<T> out(Shape{n, oc, h, w});
    if (parallel())
        kernels::conv2d_forward(input.data(), p.weights.data(), p.bias.data(), out.data(),
                                n, ic, oc, h, w);
    else
        kernels::ref::conv2d_forward(input.data(), p.weights.data(), p.bias.data(), out.data(),
                                     n, ic, oc, h, w);
    if (cache) cache->input = input;
    return out;
}

template <typename T>
ConvGrads<T> conv_backward(const ConvParams<T>& p, const ConvCache<T>& cache,
                           const Tensor<T>& d_out, bool need_input) {
    const Tensor<T>& in = cache.input;
    require(in.rank() == 4, "conv backward needs the forward cache");
    const int n = in.dim(0), ic = in.dim(1), h = in.dim(2), w = in.dim(3);
    const int oc = p.weights.dim(0);
    require(d_out.shape() == Shape({n, oc, h, w}),
            "conv d_out shape " + shape_str(d_out.shape()) + " does not match forward output");
    ConvGrads<T> g;
    g.d_weights = Tensor<T>(p.weights.shape());
    g.d_bias = Tensor<T>(p.bias.shape());
    if (parallel())
        kernels::conv2d_backward_weights(d_out.data(), in.data(), g.d_weights.data(),
                                         g.d_bias.data(), n, ic, oc, h, w);
    else
        kernels::ref::conv2d_backward_weights(d_out.data(), in.data(), g.d_weights.data(),
                                              g.d_bias.data(), n, ic, oc, h, w);
    if (need_input) {
        g.d_input = Tensor<T>(in.shape());
        if (parallel())
            kernels::conv2d_backward_input(d_out.data(), p.weights.data(), g.d_input.data(),
                                           n, ic, oc, h, w);
        else
            kernels::ref::conv2d_backward_input(d_out.data(), p.weights.data(), g.d_input.data(),
                                                n, ic, oc, h, w);
    }
    return g;
}

template <typename T>
Tensor<T> batchnorm_forward_train(BNParams<T>& p, const Tensor<T>& input, BNCache<T>* cache) {
    require(input.rank() == 4, "batchnorm input must be NCHW, got " + shape_str(input.shape()));
    const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    require(p.gamma.numel() == c, "batchnorm channel mismatch");
    if (static_cast<std::int64_t>(n) * h * w < 2)
        throw DegenerateBatchError("batchnorm train mode needs at least 2 values per channel, got " +
                                   shape_str(input.shape()));
    std::vector<double> mean(static_cast<std::size_t>(c)), var(static_cast<std::size_t>(c));
    Tensor<T> out(input.shape()), x_hat(input.shape());
    std::vector<double> inv_std(static_cast<std::size_t>(c));
    if (parallel()) {
        kernels::batchnorm_stats(input.data(), mean.data(), var.data(), n, c, h, w);
        kernels::batchnorm_normalize(input.data(), p.gamma.data(), p.beta.data(), mean.data(),
                                     var.data(), p.epsilon, out.data(), x_hat.data(),
                                     inv_std.data(), n, c, h, w);
    } else {
        kernels::ref::batchnorm_stats(input.data(), mean.data(), var.data(), n, c, h, w);
        kernels::ref::batchnorm_normalize(input.data(), p.gamma.data(), p.beta.data(), mean.data(),
                                          var.data(), p.epsilon, out.data(), x_hat.data(),
                                          inv_std.data(), n, c, h, w);
    }
    for (int ci = 0; ci < c; ++ci) {
        const double keep = 1.0 - p.momentum;
        p.running_mean[ci] = static_cast<T>(keep * static_cast<double>(p.running_mean[ci]) +
                                            p.momentum * mean[static_cast<std::size_t>(ci)]);
        p.running_var[ci] = static_cast<T>(keep * static_cast<double>(p.running_var[ci]) +
                                           p.momentum * var[static_cast<std::size_t>(ci)]);
    }
    if (cache) {
        cache->x_hat = std::move(x_hat);
        cache->inv_std = std::move(inv_std);
    }
    return out;
}

template <typename T>
Tensor<T> batchnorm_forward_infer(const BNParams<T>& p, const Tensor<T>& input) {
    require(input.rank() == 4, "batchnorm input must be NCHW, got " + shape_str(input.shape()));
    const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    require(p.gamma.numel() == c, "batchnorm channel mismatch");
    std::vector<double> mean(static_cast<std::size_t>(c)), var(static_cast<std::size_t>(c));
    for (int ci = 0; ci < c; ++ci) {
        mean[static_cast<std::size_t>(ci)] = static_cast<double>(p.running_mean[ci]);
        var[static_cast<std::size_t>(ci)] = static_cast<double>(p.running_var[ci]);
    }
    Tensor<T> out(input.shape()), x_hat(input.shape());
    std::vector<double> inv_std(static_cast<std::size_t>(c));
    if (parallel())
        kernels::batchnorm_normalize(input.data(), p.gamma.data(), p.beta.data(), mean.data(),
                                     var.data(), p.epsilon, out.data(), x_hat.data(),
                                     inv_std.data(), n, c, h, w);
    else
        kernels::ref::batchnorm_normalize(input.data(), p.gamma.data(), p.beta.data(), mean.data(),
                                          var.data(), p.epsilon, out.data(), x_hat.data(),
                                          inv_std.data(), n, c, h, w);
    return out;
}

template <typename T>
BNGrads<T> batchnorm_backward(const BNParams<T>& p, const BNCache<T>& cache, const Tensor<T>& d_out) {
    const Tensor<T>& x_hat = cache.x_hat;
    require(x_hat.rank() == 4, "batchnorm backward needs the forward cache");
    require(d_out.shape() == x_hat.shape(),
            "batchnorm d_out shape " + shape_str(d_out.shape()) + " does not match forward output");
    const int n = x_hat.dim(0), c = x_hat.dim(1), h = x_hat.dim(2), w = x_hat.dim(3);
    BNGrads<T> g;
    g.d_input = Tensor<T>(x_hat.shape());
    g.d_gamma = Tensor<T>(Shape{c});
    g.d_beta = Tensor<T>(Shape{c});
    if (parallel())
        kernels::batchnorm_backward(d_out.data(), x_hat.data(), cache.inv_std.data(),
                                    p.gamma.data(), g.d_input.data(), g.d_gamma.data(),
                                    g.d_beta.data(), n, c, h, w);
    else
        kernels::ref::batchnorm_backward(d_out.data(), x_hat.data(), cache.inv_std.data(),
                                         p.gamma.data(), g.d_input.data(), g.d_gamma.data(),
                                         g.d_beta.data(), n, c, h, w);
    return g;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input, ReluCache* cache) {
    Tensor<T> out(input.shape());
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(input.numel()));
    if (parallel())
        kernels::relu_forward(input.data(), out.data(), mask.data(), input.numel());
    else
        kernels::ref::relu_forward(input.data(), out.data(), mask.data(), input.numel());
    if (cache) {
        cache->mask = std::move(mask);
        cache->shape = input.shape();
    }
    return out;
}

template <typename T>
Tensor<T> relu_backward(const ReluCache& cache, const Tensor<T>& d_out) {
    require(d_out.shape() == cache.shape,
            "relu d_out shape " + shape_str(d_out.shape()) + " does not match forward input");
    Tensor<T> d_in(cache.shape);
    if (parallel())
        kernels::relu_backward(d_out.data(), cache.mask.data(), d_in.data(), d_out.numel());
    else
        kernels::ref::relu_backward(d_out.data(), cache.mask.data(), d_in.data(), d_out.numel());
    return d_in;
}

template <typename T>
Tensor<T> maxpool_forward(const Tensor<T>& input, PoolCache* cache) {
    require(input.rank() == 4, "maxpool input must be NCHW, got " + shape_str(input.shape()));
    const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    require(h >= 2 && w >= 2, "maxpool needs H, W >= 2, got " + shape_str(input.shape()));
    Tensor<T> out(Shape{n, c, h / 2, w / 2});
    std::vector<std::int64_t> argmax(static_cast<std::size_t>(out.numel()));
    if (parallel())
        kernels::maxpool_forward(input.data(), out.data(), argmax.data(), n, c, h, w);
    else
        kernels::ref::maxpool_forward(input.data(), out.data(), argmax.data(), n, c, h, w);
    if (cache) {
        cache->argmax = std::move(argmax);
        cache->in_shape = input.shape();
        cache->out_shape = out.shape();
    }
    return out;
}

template <typename T>
Tensor<T> maxpool_backward(const PoolCache& cache, const Tensor<T>& d_out) {
    require(d_out.shape() == cache.out_shape,
            "maxpool d_out shape " + shape_str(d_out.shape()) + " does not match forward output");
    Tensor<T> d_in(cache.in_shape);
    if (parallel())
        kernels::maxpool_backward(d_out.data(), cache.argmax.data(), d_in.data(), d_out.numel(),
                                  d_in.numel());
    else
        kernels::ref::maxpool_backward(d_out.data(), cache.argmax.data(), d_in.data(),
                                       d_out.numel(), d_in.numel());
    return d_in;
}

template <typename T>
Tensor<T> fc_forward(const FCParams<T>& p, const Tensor<T>& input, FCCache<T>* cache) {
    require(input.rank() == 2, "fc input must be N x D, got " + shape_str(input.shape()));
    require(p.weights.rank() == 2, "fc weights must be K x D");
    const int n = input.dim(0), d = input.dim(1), k = p.weights.dim(0);
    require(p.weights.dim(1) == d, "fc dimension mismatch: input " + shape_str(input.shape()) +
                                       " vs weights " + shape_str(p.weights.shape()));
    require(p.bias.numel() == k, "fc bias length must equal class count");
    Tensor<T> out(Shape{n, k});
    if (parallel())
        kernels::fc_forward(input.data(), p.weights.data(), p.bias.data(), out.data(), n, d, k);
    else
        kernels::ref::fc_forward(input.data(), p.weights.data(), p.bias.data(), out.data(), n, d, k);
    if (cache) cache->input = input;
    return out;
}

template <typename T>
FCGrads<T> fc_backward(const FCParams<T>& p, const FCCache<T>& cache, const Tensor<T>& d_out) {
    const Tensor<T>& in = cache.input;
    require(in.rank() == 2, "fc backward needs the forward cache");
    const int n = in.dim(0), d = in.dim(1), k = p.weights.dim(0);
    require(d_out.shape() == Shape({n, k}),
            "fc d_out shape " + shape_str(d_out.shape()) + " does not match forward output");
    FCGrads<T> g;
    g.d_input = Tensor<T>(in.shape());
    g.d_weights = Tensor<T>(p.weights.shape());
    g.d_bias = Tensor<T>(p.bias.shape());
    if (parallel()) {
        kernels::fc_backward_weights(d_out.data(), in.data(), g.d_weights.data(), g.d_bias.data(),
                                     n, d, k);
        kernels::fc_backward_input(d_out.data(), p.weights.data(), g.d_input.data(), n, d, k);
    } else {
        kernels::ref::fc_backward_weights(d_out.data(), in.data(), g.d_weights.data(),
                                          g.d_bias.data(), n, d, k);
        kernels::ref::fc_backward_input(d_out.data(), p.weights.data(), g.d_input.data(), n, d, k);
    }
    return g;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
    require(logits.rank() == 2 && logits.dim(1) >= 2,
            "softmax expects N x K logits with K >= 2, got " + shape_str(logits.shape()));
    if (!logits.all_finite()) throw NumericError("softmax input contains non-finite logits");
    Tensor<T> probs(logits.shape());
    if (parallel())
        kernels::softmax_rows(logits.data(), probs.data(), logits.dim(0), logits.dim(1));
    else
        kernels::ref::softmax_rows(logits.data(), probs.data(), logits.dim(0), logits.dim(1));
    return probs;
}

#define LFFD_INSTANTIATE_LAYERS(T)                                                             \
    template Tensor<T> conv_forward<T>(const ConvParams<T>&, const Tensor<T>&, ConvCache<T>*); \
    template ConvGrads<T> conv_backward<T>(const ConvParams<T>&, const ConvCache<T>&,          \
                                           const Tensor<T>&, bool);                            \
    template Tensor<T> batchnorm_forward_train<T>(BNParams<T>&, const Tensor<T>&, BNCache<T>*); \
    template Tensor<T> batchnorm_forward_infer<T>(const BNParams<T>&, const Tensor<T>&);       \
    template BNGrads<T> batchnorm_backward<T>(const BNParams<T>&, const BNCache<T>&,           \
                                              const Tensor<T>&);                               \
    template Tensor<T> relu_forward<T>(const Tensor<T>&, ReluCache*);                          \
    template Tensor<T> relu_backward<T>(const ReluCache&, const Tensor<T>&);                   \
    template Tensor<T> maxpool_forward<T>(const Tensor<T>&, PoolCache*);                       \
    template Tensor<T> maxpool_backward<T>(const PoolCache&, const Tensor<T>&);                \
    template Tensor<T> fc_forward<T>(const FCParams<T>&, const Tensor<T>&, FCCache<T>*);       \
    template FCGrads<T> fc_backward<T>(const FCParams<T>&, const FCCache<T>&, const Tensor<T>&); \
    template Tensor<T> softmax<T>(const Tensor<T>&);

LFFD_INSTANTIATE_LAYERS(float)
LFFD_INSTANTIATE_LAYERS(double)

#undef LFFD_INSTANTIATE_LAYERS

} // namespace lffd
