#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "image_fixtures.hpp"
#include "lffd/data.hpp"

// Drives the installed binary end to end through std::system. LFFD_CLI_PATH
// is injected by the build.

using namespace lffd;
using namespace lffd::testing;

namespace {

int run(const std::string& args, const std::string& stdout_file = "/dev/null") {
    const std::string cmd =
        std::string(LFFD_CLI_PATH) + " " + args + " >" + stdout_file + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

} // namespace

TEST_CASE("cli: split / train / eval / predict round trip") {
    ScratchDir dir("cli");
    const auto root = make_dataset_tree(dir.path(), 8, 8, 8);
    const auto manifest = dir.path() / "manifest.tsv";
    const auto out = dir.path() / "out";
    const auto log = dir.path() / "stdout.txt";

    // split: writes the manifest and prints the per-class table
    REQUIRE(run("split --root " + q(root) + " --out " + q(manifest) + " --seed 3",
                log.string()) == 0);
    const std::string split_out = slurp(log);
    CHECK(split_out.find("fake") != std::string::npos);
    CHECK(split_out.find("real") != std::string::npos);
    CHECK(split_out.find("wrote") != std::string::npos);

    auto loaded = load_manifest(manifest, root);
    CHECK(split_size(loaded, Split::Train) == 12);
    CHECK(split_size(loaded, Split::Val) == 2);
    CHECK(split_size(loaded, Split::Test) == 2);

    // train: one fast trial at reduced input size
    REQUIRE(run("train --root " + q(root) + " --manifest " + q(manifest) + " --out " + q(out) +
                    " --version v1 --input-size 8 --epochs 1 --batch 4 --trials 2 --seed 1",
                log.string()) == 0);
    CHECK(fs::exists(out / "checkpoint-v1.lffd"));
    CHECK(fs::exists(out / "report-v1-trial1.txt"));
    CHECK(fs::exists(out / "report-v1-trial2.txt"));
    CHECK(fs::exists(out / "report-v1-mean.txt"));
    CHECK(fs::exists(out / "runlog-v1.txt"));
    const std::string mean_report = slurp(out / "report-v1-mean.txt");
    CHECK(mean_report.find("arch = lightffdnet-v1@8\n") != std::string::npos);
    CHECK(mean_report.find("split = test\n") != std::string::npos);
    CHECK(mean_report.find("trial_seeds = 1,2\n") != std::string::npos);
    CHECK(slurp(out / "runlog-v1.txt").find("trial=2 epoch=1 ") != std::string::npos);

    // eval: repeatable byte for byte
    const std::string eval_args = "eval --checkpoint " + q(out / "checkpoint-v1.lffd") +
                                  " --root " + q(root) + " --manifest " + q(manifest) +
                                  " --split test --out " + q(out);
    REQUIRE(run(eval_args, log.string()) == 0);
    const auto eval_report = out / "report-v1@8-eval-test.txt";
    REQUIRE(fs::exists(eval_report));
    const std::string first = slurp(eval_report);
    CHECK(first.find("split = test\n") != std::string::npos);
    REQUIRE(run(eval_args) == 0);
    CHECK(slurp(eval_report) == first);

    // eval on another split writes a separate report
    REQUIRE(run("eval --checkpoint " + q(out / "checkpoint-v1.lffd") + " --root " + q(root) +
                " --manifest " + q(manifest) + " --split val --out " + q(out)) == 0);
    CHECK(fs::exists(out / "report-v1@8-eval-val.txt"));

    // version guard: the checkpoint is v1, demanding v2 is a config error
    CHECK(run(eval_args + " --version v2") == 1);
    CHECK(run(eval_args + " --version v1") == 0);

    // predict: "<class> real=<p> fake=<p>" on stdout
    REQUIRE(run("predict --checkpoint " + q(out / "checkpoint-v1.lffd") + " --image " +
                    q(root / "fake" / "img000.raw"),
                log.string()) == 0);
    const std::string line = slurp(log);
    CHECK((line.rfind("fake real=", 0) == 0 || line.rfind("real real=", 0) == 0));
    CHECK(line.find(" fake=") != std::string::npos);
    {
        double p_real = -1, p_fake = -1;
        const auto r = line.find("real=");
        const auto f = line.find("fake=", r);
        REQUIRE(r != std::string::npos);
        REQUIRE(f != std::string::npos);
        p_real = std::stod(line.substr(r + 5));
        p_fake = std::stod(line.substr(f + 5));
        CHECK(p_real + p_fake == doctest::Approx(1.0).epsilon(1e-4));
    }

    // predict on a missing image is an I/O failure
    CHECK(run("predict --checkpoint " + q(out / "checkpoint-v1.lffd") + " --image " +
              q(root / "fake" / "absent.raw")) == 3);
}

TEST_CASE("cli: exit codes for config, dataset, and divergence failures") {
    ScratchDir dir("cli-err");
    const auto root = make_dataset_tree(dir.path(), 6, 6, 8);
    const auto manifest = dir.path() / "manifest.tsv";

    CHECK(run("split --root " + q(dir.path() / "nope") + " --out " + q(manifest)) == 2);
    CHECK(run("split") == 1);                          // --root is required
    CHECK(run("train --root x --manifest y --epochs") == 1); // dangling value
    CHECK(run("eval --checkpoint " + q(dir.path() / "none.lffd") + " --root " + q(root) +
              " --manifest " + q(manifest)) == 3); // missing checkpoint
    CHECK(run("train --root " + q(root) + " --manifest " + q(dir.path() / "none.tsv") +
              " --out " + q(dir.path() / "o")) == 3); // missing manifest file

    REQUIRE(run("split --root " + q(root) + " --out " + q(manifest)) == 0);
    CHECK(run("train --root " + q(root) + " --manifest " + q(manifest) + " --out " +
              q(dir.path() / "o") + " --version v9 --input-size 8") == 1);
    CHECK(run("train --root " + q(root) + " --manifest " + q(manifest) + " --out " +
              q(dir.path() / "o") +
              " --version v1 --input-size 8 --epochs 2 --batch 4 --trials 1 --lr 1e39") == 4);
}

TEST_CASE("cli: config file supplies defaults, flags override") {
    ScratchDir dir("cli-cfg");
    const auto root = make_dataset_tree(dir.path(), 6, 6, 8);
    const auto cfg = dir.path() / "lffd.cfg";
    {
        std::ofstream out(cfg);
        out << "[split]\nseed = 7\n";
    }
    const auto m_cfg = dir.path() / "a.tsv";
    const auto m_flag = dir.path() / "b.tsv";
    const auto m_override = dir.path() / "c.tsv";

    REQUIRE(run("--config " + q(cfg) + " split --root " + q(root) + " --out " + q(m_cfg)) == 0);
    REQUIRE(run("split --root " + q(root) + " --seed 7 --out " + q(m_flag)) == 0);
    REQUIRE(run("--config " + q(cfg) + " split --root " + q(root) + " --seed 8 --out " +
                q(m_override)) == 0);

    CHECK(slurp(m_cfg) == slurp(m_flag));      // config seed took effect
    CHECK(slurp(m_override) != slurp(m_cfg));  // explicit flag wins
}

TEST_CASE("cli: bench prints a row per architecture and epoch count") {
    ScratchDir dir("cli-bench");
    const auto root = make_dataset_tree(dir.path(), 6, 6, 16);
    const auto manifest = dir.path() / "manifest.tsv";
    const auto table_file = dir.path() / "table.txt";
    const auto log = dir.path() / "stdout.txt";

    REQUIRE(run("split --root " + q(root) + " --out " + q(manifest)) == 0);
    REQUIRE(run("bench --root " + q(root) + " --manifest " + q(manifest) +
                    " --epochs-list 1 --trials 1 --batch 4 --input-size 16 --out " +
                    q(table_file),
                log.string()) == 0);
    const std::string table = slurp(table_file);
    CHECK(table.find("v1") != std::string::npos);
    CHECK(table.find("v2") != std::string::npos);
    CHECK(slurp(log).find("wrote") != std::string::npos);
}
