#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "scenarios.hpp"

namespace fs = std::filesystem;
using subterra::cli::run_cli;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        std::random_device rd;
        dir_ = fs::temp_directory_path() / ("subterra_cli_" + std::to_string(rd()) + "_" + std::to_string(rd()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(std::vector<std::string> args) {
        out_.str({});
        err_.str({});
        return run_cli(args, out_, err_);
    }

    fs::path write_scenario(const nlohmann::json& doc, const std::string& name = "scenario.json") {
        const fs::path p = dir_ / name;
        std::ofstream(p) << doc.dump();
        return p;
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

const std::string kData = SUBTERRA_DATA_DIR;

}  // namespace

TEST_F(Cli, RunWritesReportsAndExitsZero) {
    const fs::path out = dir_ / "out";
    ASSERT_EQ(run({"run", "--scenario", kData + "/corridor.json", "--out", out.string()}), 0) << err_.str();
    for (const char* f : {"report.json", "events.ndjson", "report.txt"}) EXPECT_TRUE(fs::exists(out / f)) << f;
    const auto report = nlohmann::json::parse(slurp(out / "report.json"));
    EXPECT_EQ(report.at("rows").size(), 1u);
    EXPECT_EQ(report.at("end_reason"), "completed");
    EXPECT_EQ(slurp(out / "report.txt"), out_.str());
    const std::string events = slurp(out / "events.ndjson");
    EXPECT_EQ(events.rfind("{", 0), 0u);
    EXPECT_NE(events.find("\"mission_end\""), std::string::npos);
}

TEST_F(Cli, RefusesToOverwriteWithoutForce) {
    const fs::path out = dir_ / "out";
    ASSERT_EQ(run({"run", "--scenario", kData + "/corridor.json", "--out", out.string()}), 0);
    std::ofstream(out / "report.txt") << "keep me";
    EXPECT_EQ(run({"run", "--scenario", kData + "/corridor.json", "--out", out.string()}), 1);
    EXPECT_NE(err_.str().find("--force"), std::string::npos);
    EXPECT_EQ(slurp(out / "report.txt"), "keep me");
    EXPECT_EQ(run({"run", "--scenario", kData + "/corridor.json", "--out", out.string(), "--force"}), 0);
    EXPECT_NE(slurp(out / "report.txt"), "keep me");
    for (const auto& entry : fs::directory_iterator(out)) {
        EXPECT_EQ(entry.path().filename().string().find(".tmp"), std::string::npos) << entry.path();
    }
}

TEST_F(Cli, UnserviceableTaskExitsTwo) {
    EXPECT_EQ(run({"run", "--scenario", kData + "/unreachable.json", "--out", (dir_ / "o").string()}), 2);
    EXPECT_NE(slurp(dir_ / "o" / "report.txt").find("Unserviceable"), std::string::npos);
}

TEST_F(Cli, TimeCapExitsTwo) {
    nlohmann::json doc = fixtures::small_mission_doc();
    doc["timing"]["time_cap"] = 3.0;
    const fs::path sc = write_scenario(doc);
    EXPECT_EQ(run({"run", "--scenario", sc.string(), "--out", (dir_ / "o").string()}), 2);
    EXPECT_NE(out_.str().find("time_cap"), std::string::npos);
}

TEST_F(Cli, InvalidScenarioExitsOne) {
    nlohmann::json doc = fixtures::small_mission_doc();
    doc["comms"] = {{"drop_prob", 1.0}};
    const fs::path bad = write_scenario(doc);
    EXPECT_EQ(run({"validate", "--scenario", bad.string()}), 1);
    EXPECT_NE(err_.str().find("drop_prob"), std::string::npos);
    EXPECT_EQ(run({"run", "--scenario", bad.string(), "--out", (dir_ / "o").string()}), 1);
    EXPECT_FALSE(fs::exists(dir_ / "o" / "report.json"));
    std::ofstream(dir_ / "broken.json") << "{\"format_version\": 1,";
    EXPECT_EQ(run({"validate", "--scenario", (dir_ / "broken.json").string()}), 1);
    EXPECT_EQ(run({"validate", "--scenario", (dir_ / "missing.json").string()}), 1);
}

TEST_F(Cli, ValidateAcceptsShippedScenarios) {
    for (const char* name : {"field_analog.json", "corridor.json", "unreachable.json"}) {
        EXPECT_EQ(run({"validate", "--scenario", kData + "/" + name}), 0) << name << ": " << err_.str();
        EXPECT_NE(out_.str().find("valid"), std::string::npos);
    }
}

TEST_F(Cli, SeedOverrideAndDeterminism) {
    nlohmann::json doc = fixtures::small_mission_doc();
    doc["comms"] = {{"drop_prob", 0.3}, {"latency_s", 0.1}};
    const fs::path sc = write_scenario(doc);
    ASSERT_EQ(run({"run", "--scenario", sc.string(), "--out", (dir_ / "a").string(), "--seed", "11"}), 0);
    ASSERT_EQ(run({"run", "--scenario", sc.string(), "--out", (dir_ / "b").string(), "--seed", "11"}), 0);
    ASSERT_EQ(run({"run", "--scenario", sc.string(), "--out", (dir_ / "c").string()}), 0);
    const std::string a = slurp(dir_ / "a" / "events.ndjson");
    EXPECT_EQ(a, slurp(dir_ / "b" / "events.ndjson"));
    EXPECT_NE(a, slurp(dir_ / "c" / "events.ndjson"));
    const auto start = nlohmann::json::parse(a.substr(0, a.find('\n')));
    EXPECT_EQ(start.at("payload").at("seed"), 11);
}

TEST_F(Cli, SynthBtPrintsGoldenTree) {
    ASSERT_EQ(run({"synth-bt", "--library", kData + "/action_library.json"}), 0);
    EXPECT_EQ(out_.str(), slurp(kData + "/golden/inspection_tree.txt"));
    ASSERT_EQ(run({"synth-bt", "--library", kData + "/action_library.json", "--goal", "Is armed"}), 0);
    EXPECT_EQ(out_.str(), "Fallback\n  Condition Is armed\n  Action Arm\n");
}

TEST_F(Cli, SynthBtRejectsBadLibraries) {
    EXPECT_EQ(run({"synth-bt", "--library", kData + "/action_library_cyclic.json"}), 1);
    EXPECT_NE(err_.str().find("cyclic"), std::string::npos);
    EXPECT_EQ(run({"synth-bt", "--library", kData + "/action_library_ambiguous.json"}), 1);
    EXPECT_NE(err_.str().find("more than one action"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run({}), 1);
    EXPECT_EQ(run({"launch"}), 1);
    EXPECT_EQ(run({"run"}), 1);
    EXPECT_EQ(run({"--help"}), 0);
    EXPECT_NE(out_.str().find("synth-bt"), std::string::npos);
}
