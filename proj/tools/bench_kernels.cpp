// Times each compute kernel in serial (reference) and OpenMP form on
// model-sized workloads and prints the speedup table.
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lffd/kernels.hpp"
#include "lffd/rng.hpp"

using lffd::Rng;

namespace {

using Clock = std::chrono::steady_clock;

std::vector<float> random_buf(std::int64_t count, Rng& rng) {
    std::vector<float> buf(static_cast<std::size_t>(count));
    for (float& v : buf) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return buf;
}

double time_best_ms(int reps, const std::function<void()>& fn) {
    fn(); // warm-up
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = Clock::now();
        fn();
        const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        if (ms < best) best = ms;
    }
    return best;
}

void report(const char* name, int reps, const std::function<void()>& serial,
            const std::function<void()>& omp) {
    const double s = time_best_ms(reps, serial);
    const double p = time_best_ms(reps, omp);
    std::printf("  %-24s %10.2f %10.2f %8.2fx\n", name, s, p, s / p);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs OpenMP kernel timings"};
    int reps = 3;
    app.add_option("--reps", reps, "timed repetitions per kernel (best is kept)")
        ->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    Rng rng(7);
    namespace k = lffd::kernels;

    // Conv block sized like v2's second stage: 16 x 32 x 56 x 56.
    const int n = 16, ic = 32, oc = 32, h = 56, w = 56;
    const auto conv_in = random_buf(static_cast<std::int64_t>(n) * ic * h * w, rng);
    const auto conv_w = random_buf(static_cast<std::int64_t>(oc) * ic * 9, rng);
    const auto conv_b = random_buf(oc, rng);
    std::vector<float> conv_out(static_cast<std::size_t>(n) * oc * h * w);
    std::vector<float> conv_din(conv_in.size());
    std::vector<float> conv_dw(conv_w.size());
    std::vector<float> conv_db(conv_b.size());

    std::vector<double> bn_mean(oc), bn_var(oc), bn_inv_std(oc);
    const auto bn_gamma = random_buf(oc, rng);
    const auto bn_beta = random_buf(oc, rng);
    std::vector<float> bn_out(conv_out.size()), bn_xhat(conv_out.size());
    std::vector<float> bn_din(conv_out.size()), bn_dg(oc), bn_db(oc);

    std::vector<std::uint8_t> relu_mask(conv_out.size());
    std::vector<float> relu_out(conv_out.size());

    std::vector<float> pool_out(static_cast<std::size_t>(n) * oc * (h / 2) * (w / 2));
    std::vector<std::int64_t> pool_arg(pool_out.size());

    // FC sized like v1's head: 16 x 401408 -> 2.
    const int fd = 401408, fk = 2;
    const auto fc_x = random_buf(static_cast<std::int64_t>(n) * fd, rng);
    const auto fc_w = random_buf(static_cast<std::int64_t>(fk) * fd, rng);
    const auto fc_b = random_buf(fk, rng);
    std::vector<float> fc_y(static_cast<std::size_t>(n) * fk);
    std::vector<float> fc_dw(fc_w.size()), fc_db(fc_b.size());

    const std::int64_t pc = 1 << 21; // Adam over ~2M parameters
    auto adam_p = random_buf(pc, rng);
    const auto adam_g = random_buf(pc, rng);
    std::vector<float> adam_m(adam_p.size()), adam_v(adam_p.size());

    std::printf("  %-24s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");
    report("conv2d_forward", reps,
           [&] { k::ref::conv2d_forward(conv_in.data(), conv_w.data(), conv_b.data(),
                                        conv_out.data(), n, ic, oc, h, w); },
           [&] { k::conv2d_forward(conv_in.data(), conv_w.data(), conv_b.data(),
                                   conv_out.data(), n, ic, oc, h, w); });
    report("conv2d_backward_input", reps,
           [&] { k::ref::conv2d_backward_input(conv_out.data(), conv_w.data(),
                                               conv_din.data(), n, ic, oc, h, w); },
           [&] { k::conv2d_backward_input(conv_out.data(), conv_w.data(), conv_din.data(),
                                          n, ic, oc, h, w); });
    report("conv2d_backward_weights", reps,
           [&] { k::ref::conv2d_backward_weights(conv_out.data(), conv_in.data(),
                                                 conv_dw.data(), conv_db.data(), n, ic, oc,
                                                 h, w); },
           [&] { k::conv2d_backward_weights(conv_out.data(), conv_in.data(), conv_dw.data(),
                                            conv_db.data(), n, ic, oc, h, w); });
    report("batchnorm_stats", reps,
           [&] { k::ref::batchnorm_stats(conv_out.data(), bn_mean.data(), bn_var.data(), n,
                                         oc, h, w); },
           [&] { k::batchnorm_stats(conv_out.data(), bn_mean.data(), bn_var.data(), n, oc,
                                    h, w); });
    report("batchnorm_normalize", reps,
           [&] { k::ref::batchnorm_normalize(conv_out.data(), bn_gamma.data(),
                                             bn_beta.data(), bn_mean.data(), bn_var.data(),
                                             1e-5, bn_out.data(), bn_xhat.data(),
                                             bn_inv_std.data(), n, oc, h, w); },
           [&] { k::batchnorm_normalize(conv_out.data(), bn_gamma.data(), bn_beta.data(),
                                        bn_mean.data(), bn_var.data(), 1e-5, bn_out.data(),
                                        bn_xhat.data(), bn_inv_std.data(), n, oc, h, w); });
    report("batchnorm_backward", reps,
           [&] { k::ref::batchnorm_backward(bn_out.data(), bn_xhat.data(),
                                            bn_inv_std.data(), bn_gamma.data(),
                                            bn_din.data(), bn_dg.data(), bn_db.data(), n,
                                            oc, h, w); },
           [&] { k::batchnorm_backward(bn_out.data(), bn_xhat.data(), bn_inv_std.data(),
                                       bn_gamma.data(), bn_din.data(), bn_dg.data(),
                                       bn_db.data(), n, oc, h, w); });
    report("relu_forward", reps,
           [&] { k::ref::relu_forward(bn_out.data(), relu_out.data(), relu_mask.data(),
                                      static_cast<std::int64_t>(bn_out.size())); },
           [&] { k::relu_forward(bn_out.data(), relu_out.data(), relu_mask.data(),
                                 static_cast<std::int64_t>(bn_out.size())); });
    report("maxpool_forward", reps,
           [&] { k::ref::maxpool_forward(relu_out.data(), pool_out.data(), pool_arg.data(),
                                         n, oc, h, w); },
           [&] { k::maxpool_forward(relu_out.data(), pool_out.data(), pool_arg.data(), n,
                                    oc, h, w); });
    report("fc_forward", reps,
           [&] { k::ref::fc_forward(fc_x.data(), fc_w.data(), fc_b.data(), fc_y.data(), n,
                                    fd, fk); },
           [&] { k::fc_forward(fc_x.data(), fc_w.data(), fc_b.data(), fc_y.data(), n, fd,
                               fk); });
    report("fc_backward_weights", reps,
           [&] { k::ref::fc_backward_weights(fc_y.data(), fc_x.data(), fc_dw.data(),
                                             fc_db.data(), n, fd, fk); },
           [&] { k::fc_backward_weights(fc_y.data(), fc_x.data(), fc_dw.data(),
                                        fc_db.data(), n, fd, fk); });
    report("adam_update", reps,
           [&] { k::ref::adam_update(adam_p.data(), adam_g.data(), adam_m.data(),
                                     adam_v.data(), pc, 1e-4, 0.9, 0.999, 1e-8, 0.1,
                                     0.001); },
           [&] { k::adam_update(adam_p.data(), adam_g.data(), adam_m.data(), adam_v.data(),
                                pc, 1e-4, 0.9, 0.999, 1e-8, 0.1, 0.001); });
    return 0;
}
