#include "lffd/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <utility>

#include "lffd/errors.hpp"
#include "lffd/exec.hpp"

namespace lffd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace

void validate(const TrainConfig& config) {
    if (config.version != "v1" && config.version != "v2")
        throw ConfigError("model version must be v1 or v2, got '" + config.version + "'");
    if (config.val_frequency < 1)
        throw ConfigError("val_frequency must be >= 1, got " +
                          std::to_string(config.val_frequency));
    if (config.trials < 1)
        throw ConfigError("trials must be >= 1, got " + std::to_string(config.trials));
    if (config.input_size < 1)
        throw ConfigError("input size must be positive, got " +
                          std::to_string(config.input_size));
    if (config.positive_class != 0 && config.positive_class != 1)
        throw ConfigError("positive class must be 0 or 1, got " +
                          std::to_string(config.positive_class));
    validate(config.hyper);
}

EvalReport evaluate(const Model<float>& model, const Manifest& manifest, Split split,
                    const EvalOptions& options, double* compute_seconds) {
    if (split_size(manifest, split) == 0)
        throw DatasetError(std::string("cannot evaluate: ") + split_name(split) +
                           " split is empty");
    const int input_hw = model.spec.input().height;
    std::vector<int> preds;
    std::vector<int> labels;
    double secs = 0.0;
    for (const std::vector<int>& indices :
         batch_plan(manifest, split, options.batch_size, 0, 0)) {
        const Batch batch = assemble_batch(manifest, indices, input_hw, options.center_channels);
        const auto t0 = Clock::now();
        const Tensor<float> probs = model_infer(model, batch.images);
        secs += seconds_since(t0);
        const std::vector<int> batch_preds = argmax_predict(probs);
        preds.insert(preds.end(), batch_preds.begin(), batch_preds.end());
        labels.insert(labels.end(), batch.labels.begin(), batch.labels.end());
    }
    EvalReport report;
    report.arch = model.spec.id;
    report.split = split_name(split);
    report.class_names = manifest.class_names;
    report.confusion = confusion(preds, labels, options.positive_class);
    const Scores s = scores_from(report.confusion);
    report.accuracy = s.accuracy;
    report.precision = s.precision;
    report.recall = s.recall;
    report.f1 = s.f1;
    report.wall_time_s = 0.0; // evaluation reports are timing-free by design
    if (compute_seconds) *compute_seconds = secs;
    return report;
}

TrialResult train_model(const TrainConfig& config, const Manifest& manifest) {
    validate(config);
    if (split_size(manifest, Split::Train) == 0) throw DatasetError("train split is empty");
    if (split_size(manifest, Split::Val) == 0) throw DatasetError("val split is empty");

    std::optional<ScopedExecMode> serial_guard;
    if (config.deterministic) serial_guard.emplace(ExecMode::Serial);

    const ArchSpec spec = build_arch(config.version, config.input_size);
    Model<float> model = init_params<float>(spec, config.seed);
    AdamState<float> adam;
    const EvalOptions val_options{config.hyper.batch_size, config.center_channels,
                                  config.positive_class};

    std::vector<double> losses;
    std::vector<EpochRecord> history;
    double compute_s = 0.0;
    double latest_val = -1.0;
    double best_val = -1.0;
    std::int64_t iteration = 0;
    std::int64_t last_eval_iteration = -1;
    EvalReport last_val_report;

    auto diverged = [&](const char* what) {
        return DivergedError("training diverged at iteration " + std::to_string(iteration) +
                             ": " + what);
    };
    auto run_val = [&]() {
        double secs = 0.0;
        try {
            last_val_report = evaluate(model, manifest, Split::Val, val_options, &secs);
        } catch (const NumericError& e) {
            throw diverged(e.what());
        }
        compute_s += secs;
        latest_val = last_val_report.accuracy;
        best_val = std::max(best_val, latest_val);
        last_eval_iteration = iteration;
    };

    const int epochs = config.hyper.epochs;
    for (int epoch = 1; epoch <= epochs; ++epoch) {
        const std::vector<std::vector<int>> plan =
            batch_plan(manifest, Split::Train, config.hyper.batch_size, config.seed, epoch);
        double epoch_loss_sum = 0.0;
        std::int64_t epoch_correct = 0;
        std::int64_t epoch_seen = 0;
        for (const std::vector<int>& indices : plan) {
            const Batch batch =
                assemble_batch(manifest, indices, config.input_size, config.center_channels);
            ++iteration;
            const auto t0 = Clock::now();
            std::vector<ModelLayerCache<float>> caches;
            Tensor<float> probs;
            try {
                probs = model_forward(model, batch.images, caches);
            } catch (const NumericError& e) {
                throw diverged(e.what());
            }
            const double loss = cross_entropy_loss(probs, batch.labels);
            const Tensor<float> d_logits = softmax_ce_grad(probs, batch.labels);
            const GradMap<float> grads = model_backward(model, caches, d_logits);
            adam_step(model, adam, grads, config.hyper);
            compute_s += seconds_since(t0);
            if (!std::isfinite(loss)) throw diverged("loss is not finite");
            losses.push_back(loss);
            epoch_loss_sum += loss;
            const std::vector<int> preds = argmax_predict(probs);
            for (std::size_t i = 0; i < preds.size(); ++i)
                if (preds[i] == batch.labels[i]) ++epoch_correct;
            epoch_seen += static_cast<std::int64_t>(preds.size());
            if (iteration % config.val_frequency == 0) run_val();
        }
        if (epoch == epochs && last_eval_iteration != iteration) run_val();
        EpochRecord rec;
        rec.epoch = epoch;
        rec.mean_loss = epoch_loss_sum / static_cast<double>(plan.size());
        rec.train_accuracy =
            static_cast<double>(epoch_correct) / static_cast<double>(epoch_seen);
        rec.val_accuracy = latest_val;
        rec.wall_time_s = config.deterministic ? 0.0 : compute_s;
        history.push_back(rec);
    }

    TrialResult result;
    result.report = last_val_report;
    result.report.epochs = epochs;
    result.report.trial_seeds = {config.seed};
    result.report.val_accuracy = latest_val;
    result.report.best_val_accuracy = best_val;
    result.report.wall_time_s = config.deterministic ? 0.0 : compute_s;
    result.report.history = std::move(history);
    result.model = std::move(model);
    result.losses = std::move(losses);
    return result;
}

TrialsResult run_trials(const TrainConfig& config, const Manifest& manifest) {
    validate(config);
    TrialsResult out;
    const EvalOptions test_options{config.hyper.batch_size, config.center_channels,
                                   config.positive_class};
    for (int k = 0; k < config.trials; ++k) {
        TrainConfig trial_config = config;
        trial_config.seed = config.seed + static_cast<std::uint64_t>(k);
        TrialResult trial = train_model(trial_config, manifest);
        EvalReport report = evaluate(trial.model, manifest, Split::Test, test_options);
        report.epochs = config.hyper.epochs;
        report.trial_seeds = {trial_config.seed};
        report.val_accuracy = trial.report.val_accuracy;
        report.best_val_accuracy = trial.report.best_val_accuracy;
        report.wall_time_s = trial.report.wall_time_s;
        report.history = trial.report.history;
        if (k == 0 || report.accuracy > out.trial_reports[static_cast<std::size_t>(
                                                              out.best_trial)]
                                            .accuracy) {
            out.best_trial = k;
            out.best_model = std::move(trial.model);
        }
        out.trial_reports.push_back(std::move(report));
    }
    out.mean_report = aggregate_trials(out.trial_reports);
    return out;
}

std::vector<BenchRow> benchmark(const TrainConfig& config, const Manifest& manifest) {
    std::vector<BenchRow> rows;
    for (const char* version : {"v1", "v2"}) {
        TrainConfig c = config;
        c.version = version;
        const TrialsResult r = run_trials(c, manifest);
        BenchRow row;
        row.version = version;
        row.epochs = config.hyper.epochs;
        row.val_accuracy = r.mean_report.val_accuracy;
        row.test_accuracy = r.mean_report.accuracy;
        row.wall_time_s = r.mean_report.wall_time_s;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_bench_table(const std::vector<BenchRow>& rows) {
    char line[160];
    std::ostringstream out;
    std::snprintf(line, sizeof(line), "  %-6s %-7s %-9s %-9s %-9s\n", "model", "epochs",
                  "val-acc", "test-acc", "time-s");
    out << line;
    for (const BenchRow& r : rows) {
        std::snprintf(line, sizeof(line), "  %-6s %-7d %-9.4f %-9.4f %-9.2f\n",
                      r.version.c_str(), r.epochs, r.val_accuracy, r.test_accuracy,
                      r.wall_time_s);
        out << line;
    }
    return out.str();
}

std::string format_runlog(const std::vector<EvalReport>& trial_reports) {
    std::string out;
    for (std::size_t k = 0; k < trial_reports.size(); ++k) {
        for (const EpochRecord& rec : trial_reports[k].history) {
            out += "trial=" + std::to_string(k + 1);
            out += " epoch=" + std::to_string(rec.epoch);
            out += " mean_loss=" + fmt6(rec.mean_loss);
            out += " train_accuracy=" + fmt6(rec.train_accuracy);
            out += " val_accuracy=" + fmt6(rec.val_accuracy);
            out += " wall_time_s=" + fmt6(rec.wall_time_s);
            out += "\n";
        }
    }
    return out;
}

} // namespace lffd
