#include "lffd/kernels.hpp"

#include <cmath>

// OpenMP kernels. Work is split so that every output element (or reduction
// cell) is produced by exactly one thread, accumulating in the same order as
// the serial reference in kernels_ref.cpp — results are bit-identical to it
// for any thread count.

namespace lffd::kernels {

template <typename T>
void conv2d_forward(const T* in, const T* w, const T* b, T* out,
                    int n, int ic, int oc, int h, int wd) {
    const std::int64_t plane = static_cast<std::int64_t>(h) * wd;
#pragma omp parallel for collapse(2) schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        for (int o = 0; o < oc; ++o) {
            T* dst = out + (static_cast<std::int64_t>(ni) * oc + o) * plane;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < wd; ++x) {
                    T acc = b[o];
                    for (int i = 0; i < ic; ++i) {
                        const T* src = in + (static_cast<std::int64_t>(ni) * ic + i) * plane;
                        const T* ker = w + ((static_cast<std::int64_t>(o) * ic + i) * 9);
                        for (int ky = 0; ky < 3; ++ky) {
                            const int iy = y + ky - 1;
                            if (iy < 0 || iy >= h) continue;
                            for (int kx = 0; kx < 3; ++kx) {
                                const int ix = x + kx - 1;
                                if (ix < 0 || ix >= wd) continue;
                                acc += src[static_cast<std::int64_t>(iy) * wd + ix] * ker[ky * 3 + kx];
                            }
                        }
                    }
                    dst[static_cast<std::int64_t>(y) * wd + x] = acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_input(const T* d_out, const T* w, T* d_in,
                           int n, int ic, int oc, int h, int wd) {
    const std::int64_t plane = static_cast<std::int64_t>(h) * wd;
#pragma omp parallel for collapse(2) schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        for (int i = 0; i < ic; ++i) {
            T* dst = d_in + (static_cast<std::int64_t>(ni) * ic + i) * plane;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < wd; ++x) {
                    T acc = T(0);
                    for (int o = 0; o < oc; ++o) {
                        const T* g = d_out + (static_cast<std::int64_t>(ni) * oc + o) * plane;
                        const T* ker = w + ((static_cast<std::int64_t>(o) * ic + i) * 9);
                        for (int ky = 0; ky < 3; ++ky) {
                            const int oy = y - ky + 1;
                            if (oy < 0 || oy >= h) continue;
                            for (int kx = 0; kx < 3; ++kx) {
                                const int ox = x - kx + 1;
                                if (ox < 0 || ox >= wd) continue;
                                acc += g[static_cast<std::int64_t>(oy) * wd + ox] * ker[ky * 3 + kx];
                            }
                        }
                    }
                    dst[static_cast<std::int64_t>(y) * wd + x] = acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_weights(const T* d_out, const T* in, T* d_w, T* d_b,
                             int n, int ic, int oc, int h, int wd) {
    const std::int64_t plane = static_cast<std::int64_t>(h) * wd;
#pragma omp parallel for collapse(2) schedule(static)
    for (int o = 0; o < oc; ++o) {
        for (int i = 0; i < ic; ++i) {
            T* cell = d_w + (static_cast<std::int64_t>(o) * ic + i) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    double acc = 0.0;
                    for (int ni = 0; ni < n; ++ni) {
                        const T* g = d_out + (static_cast<std::int64_t>(ni) * oc + o) * plane;
                        const T* src = in + (static_cast<std::int64_t>(ni) * ic + i) * plane;
                        for (int y = 0; y < h; ++y) {
                            const int iy = y + ky - 1;
                            if (iy < 0 || iy >= h) continue;
                            for (int x = 0; x < wd; ++x) {
                                const int ix = x + kx - 1;
                                if (ix < 0 || ix >= wd) continue;
                                acc += static_cast<double>(g[static_cast<std::int64_t>(y) * wd + x]) *
                                       static_cast<double>(src[static_cast<std::int64_t>(iy) * wd + ix]);
                            }
                        }
                    }
                    cell[ky * 3 + kx] = static_cast<T>(acc);
                }
            }
        }
    }
#pragma omp parallel for schedule(static)
    for (int o = 0; o < oc; ++o) {
        double acc = 0.0;
        for (int ni = 0; ni < n; ++ni) {
            const T* g = d_out + (static_cast<std::int64_t>(ni) * oc + o) * plane;
            for (std::int64_t p = 0; p < plane; ++p) acc += static_cast<double>(g[p]);
        }
        d_b[o] = static_cast<T>(acc);
    }
}

template <typename T>
void batchnorm_stats(const T* in, double* mean, double* var,
                     int n, int c, int h, int w) {
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    const double count = static_cast<double>(static_cast<std::int64_t>(n) * plane);
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < c; ++ci) {
        double sum = 0.0;
        for (int ni = 0; ni < n; ++ni) {
            const T* src = in + (static_cast<std::int64_t>(ni) * c + ci) * plane;
            for (std::int64_t p = 0; p < plane; ++p) sum += static_cast<double>(src[p]);
        }
        const double m = sum / count;
        double sq = 0.0;
        for (int ni = 0; ni < n; ++ni) {
            const T* src = in + (static_cast<std::int64_t>(ni) * c + ci) * plane;
            for (std::int64_t p = 0; p < plane; ++p) {
                const double dd = static_cast<double>(src[p]) - m;
                sq += dd * dd;
            }
        }
        mean[ci] = m;
        var[ci] = sq / count;
    }
}

template <typename T>
void batchnorm_normalize(const T* in, const T* gamma, const T* beta,
                         const double* mean, const double* var, double eps,
                         T* out, T* x_hat, double* inv_std,
                         int n, int c, int h, int w) {
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    for (int ci = 0; ci < c; ++ci) inv_std[ci] = 1.0 / std::sqrt(var[ci] + eps);
#pragma omp parallel for collapse(2) schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        for (int ci = 0; ci < c; ++ci) {
            const std::int64_t base = (static_cast<std::int64_t>(ni) * c + ci) * plane;
            const double m = mean[ci], s = inv_std[ci];
            const double g = static_cast<double>(gamma[ci]), bt = static_cast<double>(beta[ci]);
            for (std::int64_t p = 0; p < plane; ++p) {
                const double xh = (static_cast<double>(in[base + p]) - m) * s;
                x_hat[base + p] = static_cast<T>(xh);
                out[base + p] = static_cast<T>(g * xh + bt);
            }
        }
    }
}

template <typename T>
void batchnorm_backward(const T* d_out, const T* x_hat, const double* inv_std,
                        const T* gamma, T* d_in, T* d_gamma, T* d_beta,
                        int n, int c, int h, int w) {
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    const double count = static_cast<double>(static_cast<std::int64_t>(n) * plane);
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < c; ++ci) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (int ni = 0; ni < n; ++ni) {
            const std::int64_t base = (static_cast<std::int64_t>(ni) * c + ci) * plane;
            for (std::int64_t p = 0; p < plane; ++p) {
                const double g = static_cast<double>(d_out[base + p]);
                sum_g += g;
                sum_gx += g * static_cast<double>(x_hat[base + p]);
            }
        }
        d_beta[ci] = static_cast<T>(sum_g);
        d_gamma[ci] = static_cast<T>(sum_gx);
        const double scale = static_cast<double>(gamma[ci]) * inv_std[ci];
        const double mean_g = sum_g / count, mean_gx = sum_gx / count;
        for (int ni = 0; ni < n; ++ni) {
            const std::int64_t base = (static_cast<std::int64_t>(ni) * c + ci) * plane;
            for (std::int64_t p = 0; p < plane; ++p) {
                const double g = static_cast<double>(d_out[base + p]);
                const double xh = static_cast<double>(x_hat[base + p]);
                d_in[base + p] = static_cast<T>(scale * (g - mean_g - xh * mean_gx));
            }
        }
    }
}

template <typename T>
void relu_forward(const T* in, T* out, std::uint8_t* mask, std::int64_t count) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
        const bool pos = in[i] > T(0);
        mask[i] = pos ? 1 : 0;
        out[i] = pos ? in[i] : T(0);
    }
}

template <typename T>
void relu_backward(const T* d_out, const std::uint8_t* mask, T* d_in, std::int64_t count) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) d_in[i] = mask[i] ? d_out[i] : T(0);
}

template <typename T>
void maxpool_forward(const T* in, T* out, std::int64_t* argmax,
                     int n, int c, int h, int w) {
    const int oh = h / 2, ow = w / 2;
    const std::int64_t in_plane = static_cast<std::int64_t>(h) * w;
    const std::int64_t out_plane = static_cast<std::int64_t>(oh) * ow;
#pragma omp parallel for collapse(2) schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        for (int ci = 0; ci < c; ++ci) {
            const std::int64_t in_base = (static_cast<std::int64_t>(ni) * c + ci) * in_plane;
            const std::int64_t out_base = (static_cast<std::int64_t>(ni) * c + ci) * out_plane;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    std::int64_t best = in_base + static_cast<std::int64_t>(2 * oy) * w + 2 * ox;
                    T best_v = in[best];
                    for (int ky = 0; ky < 2; ++ky) {
                        for (int kx = 0; kx < 2; ++kx) {
                            const std::int64_t idx =
                                in_base + static_cast<std::int64_t>(2 * oy + ky) * w + (2 * ox + kx);
                            if (in[idx] > best_v) {
                                best_v = in[idx];
                                best = idx;
                            }
                        }
                    }
                    const std::int64_t o = out_base + static_cast<std::int64_t>(oy) * ow + ox;
                    out[o] = best_v;
                    argmax[o] = best;
                }
            }
        }
    }
}

template <typename T>
void maxpool_backward(const T* d_out, const std::int64_t* argmax, T* d_in,
                      std::int64_t out_count, std::int64_t in_count) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < in_count; ++i) d_in[i] = T(0);
    // Pool windows are disjoint, so the argmax targets are distinct: the
    // scatter below is race-free.
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < out_count; ++i) d_in[argmax[i]] += d_out[i];
}

template <typename T>
void fc_forward(const T* x, const T* w, const T* b, T* y, int n, int d, int k) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        for (int ki = 0; ki < k; ++ki) {
            const T* row = x + static_cast<std::int64_t>(ni) * d;
            const T* wr = w + static_cast<std::int64_t>(ki) * d;
            double acc = static_cast<double>(b[ki]);
            for (int di = 0; di < d; ++di)
                acc += static_cast<double>(row[di]) * static_cast<double>(wr[di]);
            y[static_cast<std::int64_t>(ni) * k + ki] = static_cast<T>(acc);
        }
    }
}

template <typename T>
void fc_backward_input(const T* d_out, const T* w, T* d_x, int n, int d, int k) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        for (int di = 0; di < d; ++di) {
            const T* g = d_out + static_cast<std::int64_t>(ni) * k;
            T acc = T(0);
            for (int ki = 0; ki < k; ++ki) acc += g[ki] * w[static_cast<std::int64_t>(ki) * d + di];
            d_x[static_cast<std::int64_t>(ni) * d + di] = acc;
        }
    }
}

template <typename T>
void fc_backward_weights(const T* d_out, const T* x, T* d_w, T* d_b, int n, int d, int k) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int ki = 0; ki < k; ++ki) {
        for (int di = 0; di < d; ++di) {
            double acc = 0.0;
            for (int ni = 0; ni < n; ++ni)
                acc += static_cast<double>(d_out[static_cast<std::int64_t>(ni) * k + ki]) *
                       static_cast<double>(x[static_cast<std::int64_t>(ni) * d + di]);
            d_w[static_cast<std::int64_t>(ki) * d + di] = static_cast<T>(acc);
        }
    }
#pragma omp parallel for schedule(static)
    for (int ki = 0; ki < k; ++ki) {
        double acc = 0.0;
        for (int ni = 0; ni < n; ++ni)
            acc += static_cast<double>(d_out[static_cast<std::int64_t>(ni) * k + ki]);
        d_b[ki] = static_cast<T>(acc);
    }
}

template <typename T>
void softmax_rows(const T* logits, T* probs, int n, int k) {
#pragma omp parallel for schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        const T* row = logits + static_cast<std::int64_t>(ni) * k;
        T* dst = probs + static_cast<std::int64_t>(ni) * k;
        double mx = static_cast<double>(row[0]);
        for (int ki = 1; ki < k; ++ki)
            if (static_cast<double>(row[ki]) > mx) mx = static_cast<double>(row[ki]);
        double sum = 0.0;
        for (int ki = 0; ki < k; ++ki) sum += std::exp(static_cast<double>(row[ki]) - mx);
        for (int ki = 0; ki < k; ++ki)
            dst[ki] = static_cast<T>(std::exp(static_cast<double>(row[ki]) - mx) / sum);
    }
}

template <typename T>
void adam_update(T* param, const T* grad, T* m, T* v, std::int64_t count,
                 double lr, double beta1, double beta2, double eps,
                 double bc1, double bc2) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
        const double g = static_cast<double>(grad[i]);
        const double mi = beta1 * static_cast<double>(m[i]) + (1.0 - beta1) * g;
        const double vi = beta2 * static_cast<double>(v[i]) + (1.0 - beta2) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        const double mhat = mi / bc1;
        const double vhat = vi / bc2;
        param[i] = static_cast<T>(static_cast<double>(param[i]) - lr * mhat / (std::sqrt(vhat) + eps));
    }
}

#define LFFD_INSTANTIATE_OMP(T)                                                                \
    template void conv2d_forward<T>(const T*, const T*, const T*, T*, int, int, int, int, int); \
    template void conv2d_backward_input<T>(const T*, const T*, T*, int, int, int, int, int);   \
    template void conv2d_backward_weights<T>(const T*, const T*, T*, T*, int, int, int, int, int); \
    template void batchnorm_stats<T>(const T*, double*, double*, int, int, int, int);          \
    template void batchnorm_normalize<T>(const T*, const T*, const T*, const double*,          \
                                         const double*, double, T*, T*, double*, int, int, int, int); \
    template void batchnorm_backward<T>(const T*, const T*, const double*, const T*, T*, T*,   \
                                        T*, int, int, int, int);                               \
    template void relu_forward<T>(const T*, T*, std::uint8_t*, std::int64_t);                  \
    template void relu_backward<T>(const T*, const std::uint8_t*, T*, std::int64_t);           \
    template void maxpool_forward<T>(const T*, T*, std::int64_t*, int, int, int, int);         \
    template void maxpool_backward<T>(const T*, const std::int64_t*, T*, std::int64_t, std::int64_t); \
    template void fc_forward<T>(const T*, const T*, const T*, T*, int, int, int);              \
    template void fc_backward_input<T>(const T*, const T*, T*, int, int, int);                 \
    template void fc_backward_weights<T>(const T*, const T*, T*, T*, int, int, int);           \
    template void softmax_rows<T>(const T*, T*, int, int);                                     \
    template void adam_update<T>(T*, const T*, T*, T*, std::int64_t, double, double, double,   \
                                 double, double, double);

LFFD_INSTANTIATE_OMP(float)
LFFD_INSTANTIATE_OMP(double)

#undef LFFD_INSTANTIATE_OMP

} // namespace lffd::kernels
