#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lffd/tensor.hpp"

namespace lffd {

// Binary confusion matrix. `positive_class` records which class index the
// tp/fp/fn/tn cells treat as positive.
struct ConfusionMatrix2 {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;
    int positive_class = 0;

    std::int64_t total() const { return tp + fp + fn + tn; }
};

// Derived scores; any 0/0 ratio is reported as 0.
struct Scores {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Row-wise argmax over a [N, K] probability (or logit) matrix. Ties resolve
// to the lower index.
std::vector<int> argmax_predict(const Tensor<float>& probs);

// Tallies predictions against labels. Both vectors must have equal length
// (ShapeError) and contain only 0/1 entries (LabelError).
ConfusionMatrix2 confusion(const std::vector<int>& predictions,
                           const std::vector<int>& labels,
                           int positive_class = 0);

Scores scores_from(const ConfusionMatrix2& cm);

// One row of training history.
struct EpochRecord {
    int epoch = 0;
    double mean_loss = 0.0;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    double wall_time_s = 0.0;
};

// Everything a report file needs: what was evaluated, how it scored, and the
// training history that produced it.
struct EvalReport {
    std::string arch;
    std::string split;
    int epochs = 0;
    std::vector<std::uint64_t> trial_seeds;
    std::vector<std::string> class_names;
    ConfusionMatrix2 confusion;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double val_accuracy = -1.0;
    double best_val_accuracy = -1.0;
    double wall_time_s = 0.0;
    std::vector<EpochRecord> history;
};

// Means of the scalar metrics across trials; the confusion matrix and history
// are copied from the best-accuracy trial (ties resolve to the earliest).
// Trials must agree on arch/split/epochs and must be non-empty (ConfigError).
EvalReport aggregate_trials(const std::vector<EvalReport>& trials);

// Serializes a report as `key = value` lines (floats with six decimals).
std::string format_report(const EvalReport& report);
void write_report(const EvalReport& report, const std::string& path);

// Compact fixed-width table for terminal output.
std::string format_report_table(const EvalReport& report);

}  // namespace lffd
