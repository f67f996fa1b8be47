#include "lffd/optim.hpp"

#include <cmath>

#include "lffd/errors.hpp"
#include "lffd/exec.hpp"
#include "lffd/kernels.hpp"

namespace lffd {

void validate(const Hyperparams& h) {
    if (!(h.learning_rate > 0)) throw ConfigError("learning rate must be positive");
    if (!(h.beta1 >= 0 && h.beta1 < 1)) throw ConfigError("beta1 must lie in [0, 1)");
    if (!(h.beta2 >= 0 && h.beta2 < 1)) throw ConfigError("beta2 must lie in [0, 1)");
    if (!(h.epsilon > 0)) throw ConfigError("epsilon must be positive");
    if (h.batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (h.epochs < 1) throw ConfigError("epoch count must be at least 1");
}

template <typename T>
void adam_update_tensor(Tensor<T>& param, const Tensor<T>& grad, Tensor<T>& m, Tensor<T>& v,
                        std::int64_t t, const Hyperparams& h) {
    if (!param.same_shape(grad) || !param.same_shape(m) || !param.same_shape(v))
        throw ShapeError("adam update shape mismatch: param " + shape_str(param.shape()) +
                         " vs grad " + shape_str(grad.shape()));
    const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
    if (exec_mode() == ExecMode::Parallel)
        kernels::adam_update(param.data(), grad.data(), m.data(), v.data(), param.numel(),
                             h.learning_rate, h.beta1, h.beta2, h.epsilon, bc1, bc2);
    else
        kernels::ref::adam_update(param.data(), grad.data(), m.data(), v.data(), param.numel(),
                                  h.learning_rate, h.beta1, h.beta2, h.epsilon, bc1, bc2);
}

template <typename T>
void adam_step(Model<T>& model, AdamState<T>& state, const GradMap<T>& grads, const Hyperparams& h) {
    state.t += 1;
    for_each_trainable<T>(model, [&](const std::string& name, Tensor<T>& param) {
        const auto git = grads.find(name);
        if (git == grads.end()) throw ShapeError("gradient map is missing parameter '" + name + "'");
        auto [sit, inserted] = state.slots.try_emplace(name);
        if (inserted) {
            sit->second.m = Tensor<T>(param.shape(), T(0));
            sit->second.v = Tensor<T>(param.shape(), T(0));
        }
        adam_update_tensor(param, git->second, sit->second.m, sit->second.v, state.t, h);
    });
}

template <typename T>
static void check_labels(const Tensor<T>& probs, const std::vector<int>& labels) {
    if (probs.rank() != 2)
        throw ShapeError("class probabilities must be N x K, got " + shape_str(probs.shape()));
    if (static_cast<std::int64_t>(labels.size()) != probs.dim(0))
        throw ShapeError("label count " + std::to_string(labels.size()) +
                         " does not match batch size " + std::to_string(probs.dim(0)));
    for (int l : labels)
        if (l < 0 || l >= probs.dim(1))
            throw LabelError("label " + std::to_string(l) + " outside [0, " +
                             std::to_string(probs.dim(1)) + ")");
}

template <typename T>
double cross_entropy_loss(const Tensor<T>& probs, const std::vector<int>& labels) {
    check_labels(probs, labels);
    const int n = probs.dim(0), k = probs.dim(1);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double p = static_cast<double>(probs[static_cast<std::int64_t>(i) * k + labels[static_cast<std::size_t>(i)]]);
        if (p < 1e-12) p = 1e-12;
        if (p > 1.0) p = 1.0;
        sum += -std::log(p);
    }
    return sum / static_cast<double>(n);
}

template <typename T>
Tensor<T> softmax_ce_grad(const Tensor<T>& probs, const std::vector<int>& labels) {
    check_labels(probs, labels);
    const int n = probs.dim(0), k = probs.dim(1);
    Tensor<T> g(probs.shape());
    const double inv_n = 1.0 / static_cast<double>(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j) {
            const std::int64_t idx = static_cast<std::int64_t>(i) * k + j;
            const double onehot = labels[static_cast<std::size_t>(i)] == j ? 1.0 : 0.0;
            g[idx] = static_cast<T>((static_cast<double>(probs[idx]) - onehot) * inv_n);
        }
    }
    return g;
}

#define LFFD_INSTANTIATE_OPTIM(T)                                                              \
    template void adam_update_tensor<T>(Tensor<T>&, const Tensor<T>&, Tensor<T>&, Tensor<T>&,  \
                                        std::int64_t, const Hyperparams&);                     \
    template void adam_step<T>(Model<T>&, AdamState<T>&, const GradMap<T>&, const Hyperparams&); \
    template double cross_entropy_loss<T>(const Tensor<T>&, const std::vector<int>&);          \
    template Tensor<T> softmax_ce_grad<T>(const Tensor<T>&, const std::vector<int>&);

LFFD_INSTANTIATE_OPTIM(float)
LFFD_INSTANTIATE_OPTIM(double)

#undef LFFD_INSTANTIATE_OPTIM

} // namespace lffd
