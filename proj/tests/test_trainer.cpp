#include "doctest.h"

#include <string>

#include "image_fixtures.hpp"
#include "lffd/trainer.hpp"

using namespace lffd;
using namespace lffd::testing;

namespace {

TrainConfig tiny_config() {
    TrainConfig c;
    c.version = "v1";
    c.input_size = 8;
    c.hyper.batch_size = 4;
    c.hyper.epochs = 2;
    c.seed = 1;
    c.trials = 1;
    return c;
}

bool models_equal(const Model<float>& a, const Model<float>& b) {
    bool equal = a.spec.id == b.spec.id;
    for_each_tensor<float>(a, [&](const std::string& name, const Tensor<float>& t) {
        for_each_tensor<float>(b, [&](const std::string& n2, const Tensor<float>& t2) {
            if (n2 == name && !(t == t2)) equal = false;
        });
    });
    return equal;
}

} // namespace

TEST_CASE("train config validation") {
    TrainConfig c;
    CHECK_NOTHROW(validate(c));
    c.version = "v3";
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = {};
    c.val_frequency = 0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = {};
    c.trials = 0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = {};
    c.input_size = 0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = {};
    c.positive_class = 2;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = {};
    c.hyper.learning_rate = -1;
    CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("train_model: history, losses, cumulative timing, final validation") {
    ScratchDir dir("train");
    auto root = make_dataset_tree(dir.path(), 8, 8, 8);
    auto manifest = stratified_split(scan_dataset(root), 3);
    // 8 per class: 6 train, 1 val, 1 test each -> 12 train, batch 4 -> 3 steps/epoch

    auto trial = train_model(tiny_config(), manifest);
    REQUIRE(trial.report.split == "val");
    CHECK(trial.report.epochs == 2);
    CHECK(trial.report.trial_seeds == std::vector<std::uint64_t>{1});
    CHECK(trial.report.class_names == std::vector<std::string>{"fake", "real"});
    REQUIRE(trial.losses.size() == 6);
    for (double l : trial.losses) CHECK(std::isfinite(l));

    REQUIRE(trial.report.history.size() == 2);
    CHECK(trial.report.history[0].epoch == 1);
    CHECK(trial.report.history[1].epoch == 2);
    CHECK(trial.report.history[0].wall_time_s <= trial.report.history[1].wall_time_s);
    CHECK(trial.report.history[1].wall_time_s > 0.0);
    CHECK(trial.report.history[1].wall_time_s == doctest::Approx(trial.report.wall_time_s));
    for (const auto& rec : trial.report.history) {
        CHECK(rec.mean_loss > 0.0);
        CHECK(rec.train_accuracy >= 0.0);
        CHECK(rec.train_accuracy <= 1.0);
        CHECK(rec.val_accuracy >= 0.0);
        CHECK(rec.val_accuracy <= 1.0);
    }
    CHECK(trial.report.val_accuracy >= 0.0);
    CHECK(trial.report.best_val_accuracy >= trial.report.val_accuracy - 1e-12);
    CHECK(trial.model.spec.id == "lightffdnet-v1@8");

    SUBCASE("missing val or train split is rejected up front") {
        Manifest no_val = manifest;
        for (auto& r : no_val.records)
            if (r.split == Split::Val) r.split = Split::Train;
        CHECK_THROWS_AS(train_model(tiny_config(), no_val), DatasetError);

        Manifest no_train = manifest;
        for (auto& r : no_train.records)
            if (r.split == Split::Train) r.split = Split::Test;
        CHECK_THROWS_AS(train_model(tiny_config(), no_train), DatasetError);
    }

    SUBCASE("single step per epoch still validates at the end") {
        auto c = tiny_config();
        c.hyper.batch_size = 16;
        c.hyper.epochs = 1; // one iteration total; val_frequency 3 never fires mid-run
        auto t = train_model(c, manifest);
        REQUIRE(t.losses.size() == 1);
        REQUIRE(t.report.history.size() == 1);
        CHECK(t.report.history[0].val_accuracy >= 0.0);
        CHECK(t.report.val_accuracy == doctest::Approx(t.report.history[0].val_accuracy));
    }
}

TEST_CASE("deterministic mode: bitwise repeatable, zeroed wall times") {
    ScratchDir dir("det");
    auto root = make_dataset_tree(dir.path(), 6, 6, 8);
    auto manifest = stratified_split(scan_dataset(root), 11);

    auto c = tiny_config();
    c.deterministic = true;
    auto a = train_model(c, manifest);
    auto b = train_model(c, manifest);

    CHECK(a.losses == b.losses);
    CHECK(models_equal(a.model, b.model));
    CHECK(format_report(a.report) == format_report(b.report));
    CHECK(a.report.wall_time_s == 0.0);
    for (const auto& rec : a.report.history) CHECK(rec.wall_time_s == 0.0);
}

TEST_CASE("evaluate: pure, repeatable, positive class configurable") {
    ScratchDir dir("eval");
    auto root = make_dataset_tree(dir.path(), 6, 6, 8);
    auto manifest = stratified_split(scan_dataset(root), 2);
    auto model = init_params<float>(build_arch("v1", 8), 5);
    auto snapshot = model;

    double secs = -1.0;
    auto r1 = evaluate(model, manifest, Split::Train, {}, &secs);
    auto r2 = evaluate(model, manifest, Split::Train);
    CHECK(format_report(r1) == format_report(r2));
    CHECK(r1.wall_time_s == 0.0);
    CHECK(secs > 0.0);
    CHECK(models_equal(model, snapshot));
    CHECK(r1.split == "train");
    CHECK(r1.confusion.total() == split_size(manifest, Split::Train));
    CHECK(r1.confusion.positive_class == 0);

    EvalOptions opt;
    opt.positive_class = 1;
    auto r3 = evaluate(model, manifest, Split::Val, opt);
    CHECK(r3.confusion.positive_class == 1);
    CHECK(r3.split == "val");

    Manifest no_test = manifest;
    for (auto& r : no_test.records)
        if (r.split == Split::Test) r.split = Split::Val;
    CHECK_THROWS_AS(evaluate(model, no_test, Split::Test), DatasetError);
}

TEST_CASE("divergence raises DivergedError naming the iteration") {
    ScratchDir dir("diverge");
    auto root = make_dataset_tree(dir.path(), 5, 5, 8);
    auto manifest = stratified_split(scan_dataset(root), 1);

    auto c = tiny_config();
    c.hyper.learning_rate = 1e39;
    c.hyper.epochs = 4;
    try {
        train_model(c, manifest);
        FAIL("expected DivergedError");
    } catch (const DivergedError& e) {
        CHECK(std::string(e.what()).find("iteration") != std::string::npos);
    }
}

TEST_CASE("run_trials: per-trial seeds, best selection, aggregated mean") {
    ScratchDir dir("trials");
    auto root = make_dataset_tree(dir.path(), 6, 6, 8);
    auto manifest = stratified_split(scan_dataset(root), 4);

    auto c = tiny_config();
    c.trials = 2;
    c.hyper.epochs = 1;
    auto result = run_trials(c, manifest);

    REQUIRE(result.trial_reports.size() == 2);
    CHECK(result.trial_reports[0].trial_seeds == std::vector<std::uint64_t>{1});
    CHECK(result.trial_reports[1].trial_seeds == std::vector<std::uint64_t>{2});
    for (const auto& r : result.trial_reports) {
        CHECK(r.split == "test");
        CHECK(r.confusion.total() == split_size(manifest, Split::Test));
    }

    REQUIRE(result.best_trial >= 0);
    REQUIRE(result.best_trial < 2);
    double best_acc = result.trial_reports[static_cast<std::size_t>(result.best_trial)].accuracy;
    for (const auto& r : result.trial_reports) CHECK(best_acc >= r.accuracy);

    CHECK(result.mean_report.split == "test");
    CHECK(result.mean_report.trial_seeds == std::vector<std::uint64_t>{1, 2});
    const double want_mean =
        (result.trial_reports[0].accuracy + result.trial_reports[1].accuracy) / 2;
    CHECK(result.mean_report.accuracy == doctest::Approx(want_mean).epsilon(1e-12));

    // the returned model is the best trial's network, ready for inference
    auto probe = evaluate(result.best_model, manifest, Split::Test);
    CHECK(probe.accuracy ==
          doctest::Approx(result.trial_reports[static_cast<std::size_t>(result.best_trial)]
                              .accuracy));
}

TEST_CASE("benchmark: one row per architecture") {
    ScratchDir dir("bench");
    auto root = make_dataset_tree(dir.path(), 6, 6, 16);
    auto manifest = stratified_split(scan_dataset(root), 6);

    TrainConfig c;
    c.input_size = 16; // v2 pools four times; 16 px is the smallest legal input
    c.hyper.batch_size = 4;
    c.hyper.epochs = 1;
    c.trials = 1;
    c.seed = 2;
    auto rows = benchmark(c, manifest);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].version == "v1");
    CHECK(rows[1].version == "v2");
    for (const auto& row : rows) {
        CHECK(row.epochs == 1);
        CHECK(row.val_accuracy >= 0.0);
        CHECK(row.test_accuracy >= 0.0);
        CHECK(row.wall_time_s >= 0.0);
    }
    const std::string table = format_bench_table(rows);
    CHECK(table.find("v1") != std::string::npos);
    CHECK(table.find("v2") != std::string::npos);
}

TEST_CASE("format_runlog lists every epoch of every trial") {
    EvalReport r1;
    r1.history = {{1, 0.9, 0.5, 0.5, 1.0}, {2, 0.7, 0.75, 0.5, 2.0}};
    EvalReport r2;
    r2.history = {{1, 0.8, 0.5, 1.0, 1.5}};
    const std::string log = format_runlog({r1, r2});
    CHECK(log.find("trial=1 epoch=1 ") != std::string::npos);
    CHECK(log.find("trial=1 epoch=2 ") != std::string::npos);
    CHECK(log.find("trial=2 epoch=1 ") != std::string::npos);
    CHECK(log.find("mean_loss=0.900000") != std::string::npos);
    CHECK(log.find("val_accuracy=1.000000") != std::string::npos);
    CHECK(log.find("wall_time_s=") != std::string::npos);
}
