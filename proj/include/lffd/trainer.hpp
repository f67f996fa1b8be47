#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lffd/data.hpp"
#include "lffd/metrics.hpp"
#include "lffd/model.hpp"
#include "lffd/optim.hpp"

namespace lffd {

// Defaults reproduce the published configuration: v1, Adam at 1e-4,
// batch 16, validation every 3 iterations, 3 trials.
struct TrainConfig {
    std::string version = "v1"; // "v1" | "v2"
    Hyperparams hyper;
    int val_frequency = 3; // training iterations between validation passes
    std::uint64_t seed = 42;
    int trials = 3;
    bool deterministic = false; // serial kernels + zeroed wall times
    int input_size = 224;       // reduced sizes are for tests/experiments
    bool center_channels = false;
    int positive_class = 0; // fake
};

void validate(const TrainConfig& config);

struct EvalOptions {
    int batch_size = 16;
    bool center_channels = false;
    int positive_class = 0;
};

// Infer-mode pass over every record of the split; mutates nothing. The
// returned report carries confusion + scores and always zero wall time
// (so repeated evaluation is byte-identical); compute_seconds, when
// given, receives the forward-pass seconds (decode excluded).
EvalReport evaluate(const Model<float>& model, const Manifest& manifest, Split split,
                    const EvalOptions& options = {}, double* compute_seconds = nullptr);

struct TrialResult {
    Model<float> model;
    EvalReport report;          // split "val": final-model validation metrics + history
    std::vector<double> losses; // one per optimizer step, global order
};

// One training run: init from config.seed, per epoch iterate shuffled
// train batches (forward / loss / backward / adam), validate every
// val_frequency global iterations and after the final iteration. Wall
// time covers compute segments only (batch decode excluded); deterministic
// mode zeroes it. Non-finite loss or a non-finite forward raises
// DivergedError naming the iteration.
TrialResult train_model(const TrainConfig& config, const Manifest& manifest);

struct TrialsResult {
    Model<float> best_model; // highest test accuracy, ties to the earliest trial
    int best_trial = 0;
    EvalReport mean_report;                // aggregate_trials of the per-trial reports
    std::vector<EvalReport> trial_reports; // split "test", one per trial, seeds seed+k
};

TrialsResult run_trials(const TrainConfig& config, const Manifest& manifest);

struct BenchRow {
    std::string version;
    int epochs = 0;
    double val_accuracy = 0.0;  // means across trials
    double test_accuracy = 0.0;
    double wall_time_s = 0.0;
};

// run_trials for v1 and v2 at the config's epoch count -> two rows.
std::vector<BenchRow> benchmark(const TrainConfig& config, const Manifest& manifest);

std::string format_bench_table(const std::vector<BenchRow>& rows);

// One line per epoch per trial: "trial=<k> epoch=<i> mean_loss=... ".
std::string format_runlog(const std::vector<EvalReport>& trial_reports);

} // namespace lffd
