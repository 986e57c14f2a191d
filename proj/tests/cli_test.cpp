#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "nl2sql360/aas.hpp"
#include "nl2sql360/run_log.hpp"
#include "nl2sql360/util/files.hpp"
#include "nl2sql360/util/strings.hpp"
#include "support/fixture.hpp"

using namespace nl2sql360;
namespace ts = nl2sql360::test_support;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int status = -1;
    std::string out;
};

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        std::string lines;
        const auto dev = util::read_json_file(mini_.root() / "dev.json");
        for (const auto& s : dev) lines += s.at("query").get<std::string>() + "\t" + s.at("db_id").get<std::string>() + "\n";
        util::write_text_file(home_.path() / "gold.txt", lines);
    }

    Result run(const std::string& args) const {
        const std::string cmd = "NL2SQL360_HOME='" + (home_.path() / "store").string() + "' '" +
                                std::string(NL2SQL360_CLI) + "' " + args + " 2>/dev/null";
        Result r;
        FILE* pipe = ::popen(cmd.c_str(), "r");
        char buf[4096];
        std::size_t n;
        while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
        const int raw = ::pclose(pipe);
        r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
        return r;
    }

    std::string bench() const { return "--benchmark '" + mini_.root().string() + "'"; }
    std::string gold() const { return "--adapter 'pred:" + (home_.path() / "gold.txt").string() + "'"; }

    ts::MiniBenchmark mini_;
    ts::TempDir home_;
};

}  // namespace

TEST_F(Cli, StatPrintsSchemaStats) {
    const auto r = run("stat " + bench());
    ASSERT_EQ(r.status, 0);
    const auto j = json::parse(r.out);
    EXPECT_EQ(j.at("samples"), 20);
    EXPECT_EQ(j.at("schema").at("databases"), 3);
    EXPECT_EQ(j.at("qvt_eligible_groups"), 4);
}

TEST_F(Cli, LoadAndFilter) {
    auto r = run("load " + bench());
    ASSERT_EQ(r.status, 0);
    EXPECT_EQ(json::parse(r.out).at("samples"), 20);
    r = run("filter " + bench() + " --subset has_subquery");
    ASSERT_EQ(r.status, 0);
    EXPECT_EQ(json::parse(r.out).at("size"), 4);
    util::write_text_file(home_.path() / "spec.json", R"({"atom": "join_count", "cmp": ">=", "value": 1})");
    r = run("filter " + bench() + " --subset '" + (home_.path() / "spec.json").string() + "'");
    ASSERT_EQ(r.status, 0);
    EXPECT_EQ(json::parse(r.out).at("size"), 5);
}

TEST_F(Cli, RunThenReport) {
    auto r = run("run " + bench() + " " + gold() + " --repeats 1 --subset extra");
    ASSERT_EQ(r.status, 0);
    const fs::path log = util::trim(r.out);
    ASSERT_TRUE(fs::exists(log));
    EXPECT_EQ(log.parent_path(), home_.path() / "store" / "logs");
    EXPECT_EQ(read_run_log(log).subset_name, "extra");

    r = run("report " + bench() + " --render csv --log '" + log.string() + "'");
    ASSERT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("gold,"), std::string::npos);
    EXPECT_NE(r.out.find(",extra,2,1.0000,1.0000,100.00"), std::string::npos);

    r = run("qvt " + bench() + " --log '" + log.string() + "'");
    ASSERT_EQ(r.status, 0);
    EXPECT_EQ(json::parse(r.out).at("eligible_groups"), 4);
}

TEST_F(Cli, ReportOverTheStore) {
    ASSERT_EQ(run("run " + bench() + " " + gold() + " --repeats 1").status, 0);
    const auto r = run("report " + bench() + " --render json");
    ASSERT_EQ(r.status, 0);
    const auto j = json::parse(r.out);
    EXPECT_EQ(j.at("rows").size(), 13u);
    EXPECT_EQ(j.at("rows")[0].at("metrics").at("ex"), 1.0);
    EXPECT_EQ(run("report " + bench() + " --heatmap ves").status, 0);
}

TEST_F(Cli, AasPrintsBestGenome) {
    const auto space = aas::SearchSpace::default_space();
    std::string csv = "genome,score\n";
    for (const auto& g : aas::enumerate_space(space))
        csv += space.key(g) + "," + std::to_string(g.choice[0] + g.choice[6]) + "\n";
    util::write_text_file(home_.path() / "fit.csv", csv);
    const auto trace = home_.path() / "trace.json";
    const auto r = run("aas --fitness 'table:" + (home_.path() / "fit.csv").string() + "' --seed 7 --trace '" +
                       trace.string() + "'");
    ASSERT_EQ(r.status, 0);
    ASSERT_EQ(r.out.rfind("best: ", 0), 0u);
    const std::string key = util::trim(r.out.substr(6, r.out.find('\n') - 6));
    EXPECT_NO_THROW(space.parse_key(key));
    const auto j = util::read_json_file(trace);
    EXPECT_EQ(j.at("best"), key);
    EXPECT_EQ(j.at("generations").size(), 21u);
    EXPECT_EQ(j.at("params").at("seed"), 7);
}

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("").status, 2);
    EXPECT_EQ(run("frobnicate").status, 2);
    EXPECT_EQ(run("run " + bench()).status, 2);
    EXPECT_EQ(run("run " + bench() + " --adapter http://x").status, 2);
    EXPECT_EQ(run("filter " + bench() + " --subset nonsense").status, 2);
    EXPECT_EQ(run("aas --fitness magic").status, 2);
    EXPECT_EQ(run("--help").status, 0);
}

TEST_F(Cli, DomainErrorsExitOne) {
    EXPECT_EQ(run("stat --benchmark /nonexistent/bench").status, 1);
    EXPECT_EQ(run("aas --fitness table:/nonexistent.csv").status, 1);
    EXPECT_EQ(run("run " + bench() + " " + gold() + " --repeats 0").status, 1);

    ts::MiniBenchmark bird("mini_bird");
    auto r = run("run --benchmark '" + bird.root().string() + "' --format bird_json --repeats 1 --adapter 'pred:" +
                 (home_.path() / "gold.txt").string() + "'");
    EXPECT_EQ(r.status, 1);  // 20 predictions for 3 samples
    util::write_text_file(home_.path() / "bird.json", R"({"0": "SELECT 1", "1": "SELECT 1", "2": "SELECT 1"})");
    r = run("run --benchmark '" + bird.root().string() + "' --format bird_json --repeats 1 --adapter 'pred:" +
            (home_.path() / "bird.json").string() + "'");
    ASSERT_EQ(r.status, 0);
    EXPECT_EQ(run("report " + bench() + " --log '" + util::trim(r.out) + "'").status, 1);  // mixed benchmark
}
