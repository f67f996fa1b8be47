#include "doctest.h"

#include <sstream>

#include "lffd/metrics.hpp"

using namespace lffd;

TEST_CASE("argmax_predict: row-wise argmax, ties to the lower index") {
    auto probs = Tensor<float>::from_data({4, 2}, {0.9f, 0.1f, //
                                                   0.2f, 0.8f, //
                                                   0.5f, 0.5f, //
                                                   0.0f, 1.0f});
    CHECK(argmax_predict(probs) == std::vector<int>{0, 1, 0, 1});

    auto three = Tensor<float>::from_data({1, 3}, {0.3f, 0.4f, 0.3f});
    CHECK(argmax_predict(three) == std::vector<int>{1});
}

TEST_CASE("confusion: tallies and validation") {
    auto cm = confusion({1, 0, 1, 1}, {1, 1, 0, 1}, 1);
    CHECK(cm.tp == 2);
    CHECK(cm.fn == 1);
    CHECK(cm.fp == 1);
    CHECK(cm.tn == 0);
    CHECK(cm.positive_class == 1);
    CHECK(cm.total() == 4);

    // flipping the positive class swaps tp<->tn and fp<->fn
    auto swapped = confusion({1, 0, 1, 1}, {1, 1, 0, 1}, 0);
    CHECK(swapped.tp == cm.tn);
    CHECK(swapped.tn == cm.tp);
    CHECK(swapped.fp == cm.fn);
    CHECK(swapped.fn == cm.fp);

    CHECK_THROWS_AS(confusion({1, 0}, {1}), ShapeError);
    CHECK_THROWS_AS(confusion({2, 0}, {1, 0}), LabelError);
    CHECK_THROWS_AS(confusion({1, 0}, {1, -1}), LabelError);
}

TEST_CASE("scores_from: exact formulas, 0/0 ratios become 0") {
    ConfusionMatrix2 cm;
    cm.tp = 85;
    cm.fn = 15;
    cm.fp = 52;
    cm.tn = 106;
    auto s = scores_from(cm);
    CHECK(s.accuracy == doctest::Approx((85.0 + 106.0) / 258.0).epsilon(1e-12));
    CHECK(s.precision == doctest::Approx(85.0 / 137.0).epsilon(1e-12));
    CHECK(s.recall == doctest::Approx(0.85).epsilon(1e-12));
    CHECK(s.f1 == doctest::Approx(170.0 / 237.0).epsilon(1e-12));

    ConfusionMatrix2 perfect;
    perfect.tp = 10;
    perfect.tn = 12;
    auto p = scores_from(perfect);
    CHECK(p.accuracy == 1.0);
    CHECK(p.precision == 1.0);
    CHECK(p.recall == 1.0);
    CHECK(p.f1 == 1.0);

    ConfusionMatrix2 empty_pos; // nothing predicted or labeled positive
    empty_pos.tn = 5;
    auto z = scores_from(empty_pos);
    CHECK(z.accuracy == 1.0);
    CHECK(z.precision == 0.0);
    CHECK(z.recall == 0.0);
    CHECK(z.f1 == 0.0);

    ConfusionMatrix2 zero;
    auto zz = scores_from(zero);
    CHECK(zz.accuracy == 0.0);
}

namespace {

EvalReport stub_report(double accuracy, std::uint64_t seed) {
    EvalReport r;
    r.arch = "lightffdnet-v1";
    r.split = "test";
    r.epochs = 5;
    r.trial_seeds = {seed};
    r.class_names = {"fake", "real"};
    r.confusion.tp = static_cast<std::int64_t>(accuracy * 100);
    r.confusion.tn = 100 - r.confusion.tp;
    r.accuracy = accuracy;
    r.precision = accuracy / 2;
    r.recall = accuracy / 4;
    r.f1 = accuracy / 8;
    r.val_accuracy = accuracy - 0.01;
    r.best_val_accuracy = accuracy;
    r.wall_time_s = 10 * accuracy;
    r.history = {{1, 0.5, accuracy, accuracy, 1.0}};
    return r;
}

} // namespace

TEST_CASE("aggregate_trials: scalar means, best trial's confusion and history") {
    auto a = stub_report(0.6, 1);
    auto b = stub_report(0.9, 2);
    auto c = stub_report(0.9, 3); // tie with b -> earliest wins
    auto mean = aggregate_trials({a, b, c});

    CHECK(mean.arch == "lightffdnet-v1");
    CHECK(mean.split == "test");
    CHECK(mean.epochs == 5);
    CHECK(mean.trial_seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(mean.accuracy == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(mean.precision == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(mean.recall == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(mean.f1 == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(mean.val_accuracy == doctest::Approx(0.79).epsilon(1e-9));
    CHECK(mean.best_val_accuracy == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(mean.wall_time_s == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(mean.confusion.tp == b.confusion.tp); // best trial is b, not c
    REQUIRE(mean.history.size() == 1);
    CHECK(mean.history[0].train_accuracy == doctest::Approx(0.9));

    CHECK_THROWS_AS(aggregate_trials({}), ConfigError);
    auto other = stub_report(0.5, 4);
    other.arch = "lightffdnet-v2";
    CHECK_THROWS_AS(aggregate_trials({a, other}), ConfigError);
    auto other_split = stub_report(0.5, 5);
    other_split.split = "val";
    CHECK_THROWS_AS(aggregate_trials({a, other_split}), ConfigError);
}

TEST_CASE("format_report: stable key order, names the positive class") {
    auto r = stub_report(0.75, 9);
    r.confusion = confusion({0, 0, 1, 1}, {0, 1, 0, 1}, 0);
    const std::string text = format_report(r);

    std::istringstream in(text);
    std::vector<std::string> keys;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        REQUIRE(eq != std::string::npos);
        keys.push_back(line.substr(0, eq));
    }
    const std::vector<std::string> want = {
        "arch",   "split",     "epochs",    "trial_seeds", "positive_class",
        "tp",     "fp",        "fn",        "tn",          "accuracy",
        "precision", "recall", "f1",        "val_accuracy", "best_val_accuracy",
        "wall_time_s"};
    CHECK(keys == want);

    CHECK(text.find("arch = lightffdnet-v1\n") != std::string::npos);
    CHECK(text.find("positive_class = fake\n") != std::string::npos);
    CHECK(text.find("accuracy = 0.750000\n") != std::string::npos);
    CHECK(text.find("tp = 1\n") != std::string::npos);
    CHECK(text.find("trial_seeds = 9\n") != std::string::npos);

    r.trial_seeds = {1, 2, 3};
    CHECK(format_report(r).find("trial_seeds = 1,2,3\n") != std::string::npos);

    // the table view mentions the headline numbers
    const std::string table = format_report_table(r);
    CHECK(table.find("0.7500") != std::string::npos);
}
