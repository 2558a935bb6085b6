#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pointpolicy/dataio/demonstration.hpp"
#include "pointpolicy/util/hash.hpp"

#ifndef POINTPOLICY_CLI_PATH
#error "POINTPOLICY_CLI_PATH must point at the built command-line tool"
#endif

namespace fs = std::filesystem;
using namespace pointpolicy;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("pointpolicy_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    CliResult run(const std::string& args) const {
        const fs::path log = dir_ / "stdout.txt";
        const std::string cmd = "cd '" + dir_.string() + "' && '" + POINTPOLICY_CLI_PATH + "' " + args + " > '" +
                                log.string() + "' 2>&1";
        const int status = std::system(cmd.c_str());
        CliResult r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(log);
        return r;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

    static int count(const std::string& haystack, const std::string& needle) {
        int n = 0;
        for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
        return n;
    }

    fs::path dir_;
};

const char* kSmallTraining = R"({"policy": {"hidden": 32, "layers": 1, "heads": 4, "mlp_ratio": 2},
  "train": {"steps": 300, "learning_rate": 0.001, "log_every": 50},
  "dataset": {"val_fraction": 0.0}})";

}  // namespace

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("frobnicate").code, 1);
    EXPECT_EQ(run("eval --expert --task reach --lifting lidar").code, 1);
    EXPECT_EQ(run("gen-demos --task reach").code, 1);  // -n is required
    EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, GenDemosWritesValidFiles) {
    const CliResult r = run("gen-demos --task reach -n 3 --seed 4 --out demos");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("seed=4"), std::string::npos);
    for (int i = 0; i < 3; ++i) {
        const auto d = dataio::read_demo((dir_ / "demos" / ("demo_00" + std::to_string(i) + ".jsonl")).string());
        EXPECT_NO_THROW(d.validate());
        EXPECT_EQ(d.header.task, "reach");
        EXPECT_DOUBLE_EQ(d.header.rate_hz, 20.0);
    }
    EXPECT_TRUE(fs::exists(dir_ / "demos" / "cameras.json"));
}

TEST_F(Cli, GenDemosZeroAndInvalid) {
    EXPECT_EQ(run("gen-demos --task push-block -n 0 --out none").code, 0);
    int files = 0;
    for (const auto& e : fs::directory_iterator(dir_ / "none")) files += e.path().extension() == ".jsonl";
    EXPECT_EQ(files, 0);
    EXPECT_EQ(run("gen-demos --task juggle -n 1").code, 2);
    write("bad_task.json", R"({"task": "reach", "object_spawn": {"lower": [0.7, 0, 0.1], "upper": [0.6, 0, 0.1]}})");
    const CliResult r = run("gen-demos --config bad_task.json -n 1");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("InvalidSpec"), std::string::npos);
}

TEST_F(Cli, TrainIsReproducibleAndLossDecreases) {
    write("train.json", kSmallTraining);
    ASSERT_EQ(run("gen-demos --task reach -n 4 --out demos").code, 0);
    ASSERT_EQ(run("train --config train.json --data demos --out a").code, 0);
    ASSERT_EQ(run("train --config train.json --data demos --out b").code, 0);
    EXPECT_EQ(util::sha256_file((dir_ / "a/policy.ckpt").string()), util::sha256_file((dir_ / "b/policy.ckpt").string()));
    EXPECT_EQ(slurp(dir_ / "a/loss.csv"), slurp(dir_ / "b/loss.csv"));

    std::ifstream in(dir_ / "a/loss.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "step,loss,track,gripper,val_loss");
    std::vector<double> loss;
    while (std::getline(in, line)) loss.push_back(std::stod(line.substr(line.find(',') + 1)));
    ASSERT_EQ(loss.size(), 6u);
    EXPECT_LT(loss.back(), 0.5 * loss.front());

    ASSERT_EQ(run("train --config train.json --data demos --out c --seed 1").code, 0);
    EXPECT_NE(util::sha256_file((dir_ / "a/policy.ckpt").string()), util::sha256_file((dir_ / "c/policy.ckpt").string()));
}

TEST_F(Cli, TrainDataErrors) {
    EXPECT_EQ(run("train --data missing --out x").code, 2);
    fs::create_directories(dir_ / "empty");
    EXPECT_EQ(run("train --data empty --out x").code, 2);
    write("broken.json", "{ not json");
    ASSERT_EQ(run("gen-demos --task reach -n 1 --out demos").code, 0);
    EXPECT_EQ(run("train --config broken.json --data demos --out x").code, 2);
}

TEST_F(Cli, ExpertEvalSolvesReachWithOneRowPerTrial) {
    const CliResult r = run("eval --expert --task reach --trials 10 --out ev");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("reach: 10/10"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("seed=0"), std::string::npos);
    const std::string csv = slurp(dir_ / "ev/results.csv");
    EXPECT_EQ(count(csv, "\n"), 11);
    EXPECT_EQ(count(csv, "\nreach,triangulated,0,"), 10);
}

TEST_F(Cli, EvalIsIdempotent) {
    ASSERT_EQ(run("eval --expert --task push-block --trials 3 --seed 9 --out a").code, 0);
    ASSERT_EQ(run("eval --expert --task push-block --trials 3 --seed 9 --out b").code, 0);
    EXPECT_EQ(slurp(dir_ / "a/results.csv"), slurp(dir_ / "b/results.csv"));
}

TEST_F(Cli, EvalCheckpointErrors) {
    EXPECT_EQ(run("eval --task reach").code, 2);  // neither checkpoint nor expert
    write("fake.ckpt", "definitely not a checkpoint");
    EXPECT_EQ(run("eval --checkpoint fake.ckpt --task reach").code, 2);
    EXPECT_EQ(run("eval --checkpoint absent.ckpt --task reach").code, 2);
}

TEST_F(Cli, AblateDepthReportsBothModes) {
    const CliResult r = run("ablate-depth --expert --task reach --trials 4 --out ab");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("triangulated: 4/4"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("sensor: 4/4"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("verdict:"), std::string::npos);
    const std::string csv = slurp(dir_ / "ab/ablation.csv");
    EXPECT_EQ(count(csv, ",triangulated,"), 4);
    EXPECT_EQ(count(csv, ",sensor,"), 4);
}

TEST_F(Cli, RoundtripCheckPasses) {
    const CliResult r = run("roundtrip-check -n 200 --seed 3");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST_F(Cli, PlotLossCurves) {
    write("two.csv", "step,train,val\n1,1.0,1.2\n2,0.5,0.9\n3,0.25,0.7\n");
    ASSERT_EQ(run("plot two.csv --out two.svg").code, 0);
    const std::string svg = slurp(dir_ / "two.svg");
    EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_EQ(count(svg, "<polyline"), 2);
}

TEST_F(Cli, PlotResultsBars) {
    ASSERT_EQ(run("ablate-depth --expert --task reach --trials 2 --out ab").code, 0);
    ASSERT_EQ(run("plot ab/ablation.csv --out bars.svg").code, 0);
    const std::string svg = slurp(dir_ / "bars.svg");
    EXPECT_EQ(count(svg, "<rect x="), 2);
    EXPECT_NE(svg.find("2/2"), std::string::npos);
}

TEST_F(Cli, PlotRejectsBadCsv) {
    write("empty.csv", "");
    EXPECT_EQ(run("plot empty.csv").code, 2);
    write("header_only.csv", "step,loss\n");
    EXPECT_EQ(run("plot header_only.csv").code, 2);
    write("ragged.csv", "step,loss\n1,2\n3\n");
    EXPECT_EQ(run("plot ragged.csv").code, 2);
    write("words.csv", "step,loss\n1,abc\n");
    EXPECT_EQ(run("plot words.csv").code, 2);
    EXPECT_EQ(run("plot nothing_here.csv").code, 2);
}
