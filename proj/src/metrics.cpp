#include "lffd/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lffd/errors.hpp"

namespace lffd {

namespace {

double ratio(std::int64_t num, std::int64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
    std::string out;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (i > 0) out += ",";
        out += std::to_string(seeds[i]);
    }
    return out;
}

}  // namespace

std::vector<int> argmax_predict(const Tensor<float>& probs) {
    if (probs.rank() != 2)
        throw ShapeError("argmax_predict expects a rank-2 tensor, got " + shape_str(probs.shape()));
    const int n = probs.dim(0);
    const int k = probs.dim(1);
    std::vector<int> preds(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int best = 0;
        float best_v = probs[static_cast<std::size_t>(i) * k];
        for (int j = 1; j < k; ++j) {
            const float v = probs[static_cast<std::size_t>(i) * k + j];
            if (v > best_v) {
                best_v = v;
                best = j;
            }
        }
        preds[static_cast<std::size_t>(i)] = best;
    }
    return preds;
}

ConfusionMatrix2 confusion(const std::vector<int>& predictions,
                           const std::vector<int>& labels,
                           int positive_class) {
    if (predictions.size() != labels.size())
        throw ShapeError("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(labels.size()) + " labels");
    if (positive_class != 0 && positive_class != 1)
        throw LabelError("confusion: positive_class must be 0 or 1, got " +
                         std::to_string(positive_class));
    ConfusionMatrix2 cm;
    cm.positive_class = positive_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int p = predictions[i];
        const int y = labels[i];
        if (p != 0 && p != 1)
            throw LabelError("confusion: prediction " + std::to_string(p) + " at index " +
                             std::to_string(i) + " is not a binary class");
        if (y != 0 && y != 1)
            throw LabelError("confusion: label " + std::to_string(y) + " at index " +
                             std::to_string(i) + " is not a binary class");
        const bool pred_pos = p == positive_class;
        const bool actual_pos = y == positive_class;
        if (pred_pos && actual_pos)
            ++cm.tp;
        else if (pred_pos && !actual_pos)
            ++cm.fp;
        else if (!pred_pos && actual_pos)
            ++cm.fn;
        else
            ++cm.tn;
    }
    return cm;
}

Scores scores_from(const ConfusionMatrix2& cm) {
    Scores s;
    s.accuracy = ratio(cm.tp + cm.tn, cm.total());
    s.precision = ratio(cm.tp, cm.tp + cm.fp);
    s.recall = ratio(cm.tp, cm.tp + cm.fn);
    const double pr = s.precision + s.recall;
    s.f1 = pr == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / pr;
    return s;
}

EvalReport aggregate_trials(const std::vector<EvalReport>& trials) {
    if (trials.empty()) throw ConfigError("aggregate_trials: no trials given");
    const EvalReport& first = trials.front();
    for (const EvalReport& t : trials) {
        if (t.arch != first.arch || t.split != first.split || t.epochs != first.epochs)
            throw ConfigError("aggregate_trials: trials disagree on arch/split/epochs");
    }
    EvalReport mean = first;
    mean.trial_seeds.clear();
    mean.accuracy = mean.precision = mean.recall = mean.f1 = 0.0;
    mean.val_accuracy = mean.best_val_accuracy = 0.0;
    mean.wall_time_s = 0.0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const EvalReport& t = trials[i];
        mean.trial_seeds.insert(mean.trial_seeds.end(), t.trial_seeds.begin(),
                                t.trial_seeds.end());
        mean.accuracy += t.accuracy;
        mean.precision += t.precision;
        mean.recall += t.recall;
        mean.f1 += t.f1;
        mean.val_accuracy += t.val_accuracy;
        mean.best_val_accuracy += t.best_val_accuracy;
        mean.wall_time_s += t.wall_time_s;
        if (t.accuracy > trials[best].accuracy) best = i;
    }
    const double n = static_cast<double>(trials.size());
    mean.accuracy /= n;
    mean.precision /= n;
    mean.recall /= n;
    mean.f1 /= n;
    mean.val_accuracy /= n;
    mean.best_val_accuracy /= n;
    mean.wall_time_s /= n;
    mean.confusion = trials[best].confusion;
    mean.history = trials[best].history;
    return mean;
}

std::string format_report(const EvalReport& report) {
    const std::string positive_name =
        report.confusion.positive_class < static_cast<int>(report.class_names.size())
            ? report.class_names[static_cast<std::size_t>(report.confusion.positive_class)]
            : std::to_string(report.confusion.positive_class);
    std::ostringstream out;
    out << "arch = " << report.arch << "\n";
    out << "split = " << report.split << "\n";
    out << "epochs = " << report.epochs << "\n";
    out << "trial_seeds = " << join_seeds(report.trial_seeds) << "\n";
    out << "positive_class = " << positive_name << "\n";
    out << "tp = " << report.confusion.tp << "\n";
    out << "fp = " << report.confusion.fp << "\n";
    out << "fn = " << report.confusion.fn << "\n";
    out << "tn = " << report.confusion.tn << "\n";
    out << "accuracy = " << fmt6(report.accuracy) << "\n";
    out << "precision = " << fmt6(report.precision) << "\n";
    out << "recall = " << fmt6(report.recall) << "\n";
    out << "f1 = " << fmt6(report.f1) << "\n";
    out << "val_accuracy = " << fmt6(report.val_accuracy) << "\n";
    out << "best_val_accuracy = " << fmt6(report.best_val_accuracy) << "\n";
    out << "wall_time_s = " << fmt6(report.wall_time_s) << "\n";
    return out.str();
}

void write_report(const EvalReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open report file for writing: " + path);
    const std::string text = format_report(report);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("failed writing report file: " + path);
}

std::string format_report_table(const EvalReport& report) {
    char line[256];
    std::ostringstream out;
    out << "  " << report.arch << " on " << report.split << " split\n";
    std::snprintf(line, sizeof(line), "  %-10s %-10s %-10s %-10s %-10s\n", "accuracy",
                  "precision", "recall", "f1", "wall_s");
    out << line;
    std::snprintf(line, sizeof(line), "  %-10.4f %-10.4f %-10.4f %-10.4f %-10.2f\n",
                  report.accuracy, report.precision, report.recall, report.f1,
                  report.wall_time_s);
    out << line;
    std::snprintf(line, sizeof(line), "  confusion: tp=%lld fp=%lld fn=%lld tn=%lld\n",
                  static_cast<long long>(report.confusion.tp),
                  static_cast<long long>(report.confusion.fp),
                  static_cast<long long>(report.confusion.fn),
                  static_cast<long long>(report.confusion.tn));
    out << line;
    return out.str();
}

}  // namespace lffd
