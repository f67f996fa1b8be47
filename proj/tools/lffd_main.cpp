// Command-line front end: split / train / eval / predict / bench.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lffd/checkpoint.hpp"
#include "lffd/data.hpp"
#include "lffd/errors.hpp"
#include "lffd/image_io.hpp"
#include "lffd/metrics.hpp"
#include "lffd/model.hpp"
#include "lffd/trainer.hpp"

namespace fs = std::filesystem;
using namespace lffd;

namespace {

// Shared flag bundle; each subcommand binds the subset it uses.
struct Flags {
    std::string root;
    std::string manifest = "manifest.tsv";
    std::string out_dir = ".";
    std::string out_file;
    std::string version = "v1";
    std::string checkpoint;
    std::string image;
    std::string split = "test";
    std::uint64_t seed = 42;
    int per_class = 0;
    int epochs = 10;
    int batch = 16;
    double lr = 1e-4;
    int trials = 3;
    int val_frequency = 3;
    int input_size = 224;
    bool deterministic = false;
    bool center_channels = false;
    std::string positive = "fake";
    std::vector<int> epochs_list = {3, 5, 10};
};

TrainConfig make_config(const Flags& f) {
    TrainConfig config;
    config.version = f.version;
    config.hyper.learning_rate = f.lr;
    config.hyper.batch_size = f.batch;
    config.hyper.epochs = f.epochs;
    config.val_frequency = f.val_frequency;
    config.seed = f.seed;
    config.trials = f.trials;
    config.deterministic = f.deterministic;
    config.input_size = f.input_size;
    config.center_channels = f.center_channels;
    config.positive_class = f.positive == "fake" ? 0 : 1;
    if (f.positive != "fake" && f.positive != "real")
        throw ConfigError("positive class must be 'fake' or 'real', got '" + f.positive + "'");
    return config;
}

int positive_index(const std::vector<std::string>& class_names, const std::string& positive) {
    for (std::size_t i = 0; i < class_names.size(); ++i)
        if (class_names[i] == positive) return static_cast<int>(i);
    return positive == "real" ? 1 : 0;
}

// "lightffdnet-v2@32" -> "v2@32" (report/checkpoint file-name token).
std::string version_token(const std::string& arch_id) {
    const std::string prefix = "lightffdnet-";
    return arch_id.rfind(prefix, 0) == 0 ? arch_id.substr(prefix.size()) : arch_id;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("failed writing: " + path.string());
}

int cmd_split(const Flags& f) {
    DatasetScan scan = scan_dataset(f.root);
    if (f.per_class > 0) scan = subset_per_class(scan, f.per_class);
    const Manifest manifest = stratified_split(scan, f.seed);
    save_manifest(f.manifest, manifest);

    const int classes = static_cast<int>(manifest.class_names.size());
    std::vector<std::vector<std::int64_t>> counts(
        static_cast<std::size_t>(classes), std::vector<std::int64_t>(3, 0));
    for (const ManifestRecord& r : manifest.records)
        ++counts[static_cast<std::size_t>(r.label)][static_cast<std::size_t>(r.split)];
    std::printf("  %-12s %8s %8s %8s %8s\n", "class", "train", "val", "test", "total");
    std::vector<std::int64_t> totals(3, 0);
    for (int c = 0; c < classes; ++c) {
        const auto& row = counts[static_cast<std::size_t>(c)];
        std::printf("  %-12s %8lld %8lld %8lld %8lld\n", manifest.class_names[c].c_str(),
                    static_cast<long long>(row[0]), static_cast<long long>(row[1]),
                    static_cast<long long>(row[2]),
                    static_cast<long long>(row[0] + row[1] + row[2]));
        for (int s = 0; s < 3; ++s) totals[static_cast<std::size_t>(s)] += row[static_cast<std::size_t>(s)];
    }
    std::printf("  %-12s %8lld %8lld %8lld %8lld\n", "total",
                static_cast<long long>(totals[0]), static_cast<long long>(totals[1]),
                static_cast<long long>(totals[2]),
                static_cast<long long>(totals[0] + totals[1] + totals[2]));
    std::printf("wrote %s\n", f.manifest.c_str());
    return 0;
}

int cmd_train(const Flags& f) {
    const TrainConfig config = make_config(f);
    validate(config);
    const Manifest manifest = load_manifest(f.manifest, f.root);
    TrainConfig run = config;
    run.positive_class = positive_index(manifest.class_names, f.positive);
    const TrialsResult result = run_trials(run, manifest);

    fs::create_directories(f.out_dir);
    const fs::path out_dir = f.out_dir;
    CheckpointMeta meta;
    meta.epochs = f.epochs;
    meta.seed = f.seed + static_cast<std::uint64_t>(result.best_trial);
    meta.final_val_accuracy =
        result.trial_reports[static_cast<std::size_t>(result.best_trial)].val_accuracy;
    meta.class_names = manifest.class_names;
    save_checkpoint(out_dir / ("checkpoint-" + f.version + ".lffd"), result.best_model, meta);

    for (std::size_t k = 0; k < result.trial_reports.size(); ++k)
        write_report(result.trial_reports[k],
                     (out_dir / ("report-" + f.version + "-trial" + std::to_string(k + 1) +
                                 ".txt"))
                         .string());
    write_report(result.mean_report,
                 (out_dir / ("report-" + f.version + "-mean.txt")).string());
    write_text(out_dir / ("runlog-" + f.version + ".txt"),
               format_runlog(result.trial_reports));

    for (std::size_t k = 0; k < result.trial_reports.size(); ++k) {
        const EvalReport& r = result.trial_reports[k];
        std::printf("trial %zu: test accuracy %.4f, final val accuracy %.4f, %.2f s\n", k + 1,
                    r.accuracy, r.val_accuracy, r.wall_time_s);
    }
    std::printf("best trial: %d\nmean over %d trials:\n%s", result.best_trial + 1, f.trials,
                format_report_table(result.mean_report).c_str());
    return 0;
}

int cmd_eval(const Flags& f, bool version_given) {
    const LoadedCheckpoint loaded = load_checkpoint(f.checkpoint);
    if (version_given) {
        const std::string want =
            build_arch(f.version, loaded.model.spec.input().height).id;
        if (loaded.model.spec.id != want)
            throw ConfigError("checkpoint architecture " + loaded.model.spec.id +
                              " does not match --version " + f.version);
    }
    const Manifest manifest = load_manifest(f.manifest, f.root);
    if (!loaded.meta.class_names.empty() && loaded.meta.class_names != manifest.class_names)
        throw ConfigError("checkpoint class names do not match the manifest's");

    EvalOptions options;
    options.batch_size = f.batch;
    options.center_channels = f.center_channels;
    options.positive_class = positive_index(manifest.class_names, f.positive);
    EvalReport report = evaluate(loaded.model, manifest, split_from_name(f.split), options);
    report.epochs = loaded.meta.epochs;
    report.trial_seeds = {loaded.meta.seed};
    report.val_accuracy = loaded.meta.final_val_accuracy;

    fs::create_directories(f.out_dir);
    const std::string token = version_token(loaded.model.spec.id);
    write_report(report, (fs::path(f.out_dir) /
                          ("report-" + token + "-eval-" + f.split + ".txt"))
                             .string());
    std::printf("%s", format_report_table(report).c_str());
    return 0;
}

int cmd_predict(const Flags& f) {
    const LoadedCheckpoint loaded = load_checkpoint(f.checkpoint);
    const int input_hw = loaded.model.spec.input().height;
    Tensor<float> image = decode_and_resize(f.image, input_hw);
    normalize_pixels(image);
    if (f.center_channels) {
        for (int c = 0; c < 3; ++c) {
            double sum = 0.0;
            const std::int64_t plane = static_cast<std::int64_t>(input_hw) * input_hw;
            float* p = image.data() + c * plane;
            for (std::int64_t i = 0; i < plane; ++i) sum += p[i];
            const float mean = static_cast<float>(sum / static_cast<double>(plane));
            for (std::int64_t i = 0; i < plane; ++i) p[i] -= mean;
        }
    }
    const Tensor<float> batch = image.reshaped({1, 3, input_hw, input_hw});
    const Tensor<float> probs = model_infer(loaded.model, batch);

    std::vector<std::string> names = loaded.meta.class_names;
    if (names.size() != 2) names = {"fake", "real"};
    const int pred = argmax_predict(probs)[0];
    int real_idx = 1;
    for (int i = 0; i < 2; ++i)
        if (names[static_cast<std::size_t>(i)] == "real") real_idx = i;
    const int fake_idx = 1 - real_idx;
    std::printf("%s real=%.6f fake=%.6f\n", names[static_cast<std::size_t>(pred)].c_str(),
                probs[static_cast<std::size_t>(real_idx)],
                probs[static_cast<std::size_t>(fake_idx)]);
    return 0;
}

int cmd_bench(const Flags& f) {
    const Manifest manifest = load_manifest(f.manifest, f.root);
    TrainConfig config = make_config(f);
    config.positive_class = positive_index(manifest.class_names, f.positive);
    std::vector<BenchRow> rows;
    for (int epochs : f.epochs_list) {
        config.hyper.epochs = epochs;
        validate(config);
        const std::vector<BenchRow> batch = benchmark(config, manifest);
        rows.insert(rows.end(), batch.begin(), batch.end());
    }
    const std::string table = format_bench_table(rows);
    std::printf("%s", table.c_str());
    if (!f.out_file.empty()) {
        write_text(f.out_file, table);
        std::printf("wrote %s\n", f.out_file.c_str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LightFFDNet v1/v2 training and inference"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read defaults from a `key = value` file (flags override)");
    Flags f;

    CLI::App* split = app.add_subcommand("split", "scan a class-per-folder tree and write a stratified 70/10/20 manifest");
    split->add_option("--root", f.root, "dataset root with one folder per class")->required();
    split->add_option("--seed", f.seed, "shuffle seed")->capture_default_str();
    split->add_option("--out", f.manifest, "manifest file to write")->capture_default_str();
    split->add_option("--per-class", f.per_class,
                      "keep only the first N files of each class (0 = all)")->capture_default_str();

    CLI::App* train = app.add_subcommand("train", "train a model over a manifest");
    train->add_option("--manifest", f.manifest, "manifest file")->capture_default_str()->required();
    train->add_option("--root", f.root, "dataset root the manifest's paths are relative to")
        ->required();
    train->add_option("--version", f.version, "model version: v1 | v2")->capture_default_str();
    train->add_option("--epochs", f.epochs, "training epochs")->capture_default_str();
    train->add_option("--batch", f.batch, "mini-batch size")->capture_default_str();
    train->add_option("--lr", f.lr, "Adam learning rate")->capture_default_str();
    train->add_option("--seed", f.seed, "base RNG seed; trial k uses seed+k")->capture_default_str();
    train->add_option("--trials", f.trials, "independent trials to run and average")->capture_default_str();
    train->add_option("--val-frequency", f.val_frequency,
                      "iterations between validation passes")->capture_default_str();
    train->add_option("--input-size", f.input_size, "square input edge in pixels")->capture_default_str();
    train->add_option("--positive", f.positive, "positive class for metrics: fake | real")->capture_default_str();
    train->add_flag("--deterministic", f.deterministic,
                    "serial kernels, zeroed wall times, byte-reproducible artifacts");
    train->add_flag("--center-channels", f.center_channels,
                    "subtract each image's per-channel mean");
    train->add_option("--out", f.out_dir, "output directory")->capture_default_str();

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a manifest split");
    eval->add_option("--checkpoint", f.checkpoint, "checkpoint file")->required();
    eval->add_option("--manifest", f.manifest, "manifest file")->capture_default_str()->required();
    eval->add_option("--root", f.root, "dataset root")->required();
    CLI::Option* eval_version =
        eval->add_option("--version", f.version, "expected model version (mismatch is an error)");
    eval->add_option("--split", f.split, "split to evaluate: train | val | test")->capture_default_str();
    eval->add_option("--batch", f.batch, "mini-batch size")->capture_default_str();
    eval->add_option("--positive", f.positive, "positive class for metrics")->capture_default_str();
    eval->add_flag("--center-channels", f.center_channels,
                   "subtract each image's per-channel mean");
    eval->add_option("--out", f.out_dir, "output directory")->capture_default_str();

    CLI::App* predict = app.add_subcommand("predict", "classify one image");
    predict->add_option("--checkpoint", f.checkpoint, "checkpoint file")->required();
    predict->add_option("--image", f.image, "image to classify")->required();
    predict->add_flag("--center-channels", f.center_channels,
                      "subtract the image's per-channel mean");

    CLI::App* bench = app.add_subcommand("bench", "train v1 and v2 at several epoch counts and tabulate");
    bench->add_option("--manifest", f.manifest, "manifest file")->capture_default_str()->required();
    bench->add_option("--root", f.root, "dataset root")->required();
    bench->add_option("--epochs-list", f.epochs_list, "comma-separated epoch counts")->capture_default_str()
        ->delimiter(',');
    bench->add_option("--batch", f.batch, "mini-batch size")->capture_default_str();
    bench->add_option("--lr", f.lr, "Adam learning rate")->capture_default_str();
    bench->add_option("--seed", f.seed, "base RNG seed")->capture_default_str();
    bench->add_option("--trials", f.trials, "trials per row")->capture_default_str();
    bench->add_option("--val-frequency", f.val_frequency,
                      "iterations between validation passes")->capture_default_str();
    bench->add_option("--input-size", f.input_size, "square input edge in pixels")->capture_default_str();
    bench->add_flag("--deterministic", f.deterministic, "byte-reproducible runs");
    bench->add_flag("--center-channels", f.center_channels,
                    "subtract each image's per-channel mean");
    bench->add_option("--out", f.out_file, "also write the table to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (split->parsed()) return cmd_split(f);
        if (train->parsed()) return cmd_train(f);
        if (eval->parsed()) return cmd_eval(f, eval_version->count() > 0);
        if (predict->parsed()) return cmd_predict(f);
        if (bench->parsed()) return cmd_bench(f);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DatasetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const LabelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DivergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        // DecodeError, IoError, CheckpointError, and anything unexpected.
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
