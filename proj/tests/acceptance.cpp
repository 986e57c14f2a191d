// Acceptance run: one PASS/FAIL (or SKIP) line per criterion, exit status 1
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "nl2sql360/aas.hpp"
#include "nl2sql360/benchmark.hpp"
#include "nl2sql360/executor.hpp"
#include "nl2sql360/metrics.hpp"
#include "nl2sql360/report.hpp"
#include "nl2sql360/scenario.hpp"
#include "nl2sql360/sql/parser.hpp"
#include "nl2sql360/sql/profile.hpp"
#include "nl2sql360/util/strings.hpp"
#include "support/fixture.hpp"
#include "support/ga_oracle.hpp"
#include "support/mini_truth.hpp"
#include "support/qvt_oracle.hpp"
#include "support/sql_corpus.hpp"

using namespace nl2sql360;
namespace ts = nl2sql360::test_support;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report_line(int n, const std::string& status, const std::string& detail) {
    if (status == "FAIL") ++failures;
    std::printf("AC%-2d %s  %s\n", n, status.c_str(), detail.c_str());
    std::fflush(stdout);
}

void verdict(int n, bool ok, const std::string& detail) { report_line(n, ok ? "PASS" : "FAIL", detail); }

// --- 1: QVT against the rational transcription ------------------------------

struct QvtRun {
    int mismatches = 0;
    double seconds = 0;
    std::string transcript;  // every value, for the determinism check
};

QvtRun qvt_fixtures() {
    std::mt19937_64 rng(2024);
    QvtRun run;
    const auto start = Clock::now();
    for (int f = 0; f < 200; ++f) {
        const auto bits = ts::random_qvt_bits(rng);
        std::vector<QvtGroup> groups;
        std::map<std::string, EvalOutcome> outcomes;
        int id = 0;
        for (std::size_t g = 0; g < bits.size(); ++g) {
            QvtGroup group;
            group.group_id = "g" + std::to_string(g);
            for (bool b : bits[g]) {
                Sample s;
                s.sample_id = std::to_string(id++);
                EvalOutcome o;
                o.sample_id = s.sample_id;
                o.exec_correct = b;
                outcomes[s.sample_id] = o;
                group.variants.push_back(s);
            }
            groups.push_back(group);
        }
        const auto got = metrics::compute_qvt(groups, outcomes);
        const auto want = ts::qvt_brute_force(bits);
        if (got.has_value() != want.has_value() || (got && std::fabs(*got - want->value()) >= 1e-12))
            ++run.mismatches;
        run.transcript += got ? util::format_double(*got) : "absent";
        run.transcript += "\n";
    }
    run.seconds = seconds_since(start);
    return run;
}

// --- 3: identity system on the fixture benchmark -----------------------------

struct IdentityRun {
    std::optional<metrics::MetricReport> all;
    double seconds = 0;
    std::string report;
};

IdentityRun identity_run() {
    const auto start = Clock::now();
    ts::MiniBenchmark fixture;
    ts::TempDir scratch;
    LoadOptions lo;
    lo.name = "mini:dev";
    const Benchmark bench = load_benchmark(fixture.root(), BenchmarkFormat::SpiderJson, lo);
    const auto all = filter(bench, ScenarioSpec::all(), profile_benchmark(bench), "all");
    std::map<std::string, std::string> gold;
    for (const auto& s : bench.samples) gold[s.sample_id] = s.gold_sql;
    PredictionFileAdapter adapter(gold, {"identity", "", std::nullopt});
    const auto log = run_system(adapter, bench, all, ExecutionConfig{}, {scratch.path() / "identity.jsonl", std::nullopt});
    const auto r = report::aggregate({log}, bench, report::default_slices());
    IdentityRun out;
    if (const auto* row = r.find("identity", "All")) out.all = row->metrics;
    out.report = report::render(r, report::Format::Json);
    out.seconds = seconds_since(start);
    return out;
}

// --- 7: genetic search on an additive table ---------------------------------

struct GaRun {
    int hits = 0;
    bool monotone = true;
    double seconds = 0;
    std::string transcript;
};

GaRun ga_runs() {
    const auto space = aas::SearchSpace::default_space();
    const auto table = ts::additive_table(space, ts::additive_weights(space, 42));
    const auto optimum = ts::exhaustive_best(table).first;
    const aas::FitnessTable fitness(space, table);
    GaRun run;
    const auto start = Clock::now();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        aas::GaParams p;  // N=10, T=20, p_s=0.5, p_m=0.2
        p.seed = seed;
        const auto r = aas::evolve(space, p, std::cref(fitness));
        run.hits += r.best == optimum;
        for (std::size_t t = 1; t < r.best_trace.size(); ++t)
            if (r.best_trace[t] < r.best_trace[t - 1]) run.monotone = false;
        run.transcript += r.to_json(space).dump() + "\n";
    }
    run.seconds = seconds_since(start);
    return run;
}

std::string fmt(double v, int decimals = 3) { return util::format_fixed(v, decimals); }

void criterion1(const QvtRun& r) {
    verdict(1, r.mismatches == 0 && r.seconds < 1.0,
            "qvt oracle: " + std::to_string(200 - r.mismatches) + "/200 fixtures agree, " + fmt(r.seconds) + " s");
}

void criterion2() {
    struct Case {
        const char* label;
        double ex, cost;
        double expected;
    };
    const std::vector<Case> cases = {{"C3SQL/Spider", 82.0, 0.0103, 7961},
                                     {"DAILSQL/Spider", 83.1, 0.0288, 2885},
                                     {"DINSQL/Spider", 82.8, 0.2988, 277},
                                     {"SuperSQL/BIRD", 58.5, 0.0555, 1053}};
    bool ok = true;
    std::string detail = "ex per cost:";
    for (const auto& c : cases) {
        const auto v = metrics::ex_per_cost(c.ex, c.cost);
        const double rounded = v ? std::round(*v) : -1;
        ok = ok && v && std::fabs(rounded - c.expected) <= 1;
        detail += " " + std::string(c.label) + "=" + fmt(rounded, 0);
    }
    verdict(2, ok, detail);
}

void criterion3(const IdentityRun& r) {
    if (!r.all) return verdict(3, false, "identity run produced no All row");
    const auto& m = *r.all;
    const bool ok = m.ex == 1.0 && m.em == 1.0 && m.qvt && *m.qvt == 1.0 && std::fabs(m.ves - 100) <= 15 &&
                    r.seconds < 30;
    verdict(3, ok,
            "identity: ex=" + fmt(m.ex) + " em=" + fmt(m.em) + " qvt=" + (m.qvt ? fmt(*m.qvt) : "absent") +
                " ves=" + fmt(m.ves, 2) + ", " + fmt(r.seconds) + " s");
}

void criterion4() {
    int agree = 0;
    const auto& table = ts::hardness_oracle();
    for (const auto& row : table) {
        const auto p = sql::profile(sql::parse_sql(row.sql));
        agree += p.components == row.components && sql::classify_hardness(p) == row.tier;
    }
    verdict(4, agree == static_cast<int>(table.size()) && table.size() == 12,
            "hardness: " + std::to_string(agree) + "/" + std::to_string(table.size()) + " hand labels");
}

void criterion5() {
    ts::MiniBenchmark fixture;
    const Benchmark bench = load_benchmark(fixture.root(), BenchmarkFormat::SpiderJson);
    const auto profiles = profile_benchmark(bench);
    std::set<std::string> everything;
    for (const auto& s : bench.samples) everything.insert(s.sample_id);
    const std::vector<std::tuple<std::string, std::string, std::set<std::string>>> pairs = {
        {"has_subquery", "no_subquery", ts::mini::kWithSubquery},
        {"has_connector", "no_connector", ts::mini::kWithConnector},
        {"has_orderby", "no_orderby", ts::mini::kWithOrderBy},
        {"has_join", "no_join", ts::mini::kWithJoin},
    };
    bool ok = bench.samples.size() == static_cast<std::size_t>(ts::mini::kSamples);
    std::string detail = "slices:";
    for (const auto& [has, no, truth] : pairs) {
        const auto a = filter(bench, builtin_scenarios().at(has), profiles, has).sample_ids;
        const auto b = filter(bench, builtin_scenarios().at(no), profiles, no).sample_ids;
        const std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
        std::set<std::string> joined = sa;
        joined.insert(sb.begin(), sb.end());
        const bool pair_ok = sa == truth && sa.size() + sb.size() == everything.size() && joined == everything;
        ok = ok && pair_ok;
        detail += " " + has + "=" + std::to_string(sa.size()) + "/" + no + "=" + std::to_string(sb.size());
    }
    verdict(5, ok, detail);
}

void criterion6() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> t(1e-4, 1.0);
    std::vector<EvalOutcome> outcomes;
    for (int i = 0; i < 50; ++i) {
        EvalOutcome o;
        o.sample_id = std::to_string(i);
        o.pred_parse_ok = o.pred_exec_ok = true;
        o.exec_correct = rng() % 3 != 0;
        o.t_gold = t(rng);
        o.t_pred = o.t_gold;
        outcomes.push_back(o);
    }
    const double ves = metrics::compute_ves(outcomes);
    const double ex = metrics::compute_ex(outcomes);
    const bool equal = metrics::ves_fraction(outcomes) == ex;

    EvalOutcome fast;
    fast.sample_id = "r4";
    fast.pred_parse_ok = fast.pred_exec_ok = fast.exec_correct = true;
    fast.t_gold = 0.04;
    fast.t_pred = 0.01;
    const double sq = metrics::ves_fraction({fast}, metrics::VesAggregator::SqrtRatio);
    const double plain = metrics::ves_fraction({fast}, metrics::VesAggregator::PlainRatio);
    const bool factor = sq == 2.0 && plain == 4.0;
    verdict(6, equal && factor,
            "ves: equal timings ves/100=" + util::format_double(ves / 100) + " ex=" + util::format_double(ex) +
                "; R=4 sqrt=" + util::format_double(sq) + " plain=" + util::format_double(plain));
}

void criterion7(const GaRun& r) {
    verdict(7, r.hits >= 18 && r.monotone && r.seconds < 10,
            "ga: optimum in " + std::to_string(r.hits) + "/20 seeds, traces " +
                (r.monotone ? "non-decreasing" : "DECREASE") + ", " + fmt(r.seconds) + " s");
}

void criterion8() {
    const std::vector<double> f = {4, 3, 2, 1, 0.5};
    const std::vector<std::size_t> pool = {0, 1, 2, 3};
    aas::Rng rng(8);
    std::vector<double> counts(25, 0);
    for (int i = 0; i < 10000; ++i) {
        const auto [a, b] = aas::select_pair(f, rng);
        counts[a * 5 + b] += 1;
    }
    std::vector<double> probs(25, 0);
    for (auto a : pool)
        for (auto b : pool)
            if (a != b) probs[a * 5 + b] = ts::pair_probability(f, pool, a, b);
    const double p = ts::chi_square_p(counts, probs);
    double worst = 0;
    for (std::size_t k = 0; k < 5; ++k) worst += counts[4 * 5 + k] + (k == 4 ? 0 : counts[k * 5 + 4]);
    verdict(8, p > 0.01 && worst == 0,
            "roulette: chi-square p=" + fmt(p, 4) + ", worst drawn " + fmt(worst, 0) + " times");
}

void criterion9() {
    const char* spider = std::getenv("NL2SQL360_SPIDER_DIR");
    const char* bird = std::getenv("NL2SQL360_BIRD_DIR");
    if (!spider && !bird)
        return report_line(9, "SKIP", "real datasets: set NL2SQL360_SPIDER_DIR / NL2SQL360_BIRD_DIR to run");
    bool ok = true;
    std::string detail = "real datasets:";
    try {
        if (spider) {
            const Benchmark b = load_benchmark(spider, BenchmarkFormat::SpiderJson);
            const auto stats = schema_stats(b);
            std::size_t eligible = 0;
            for (const auto& g : group_variants(b)) eligible += g.qvt_eligible();
            ok = ok && b.samples.size() == 1034 && fmt(stats.tables_per_db.mean, 1) == "4.1" && eligible == 469;
            detail += " spider samples=" + std::to_string(b.samples.size()) +
                      " tables/db=" + fmt(stats.tables_per_db.mean, 2) + " qvt groups=" + std::to_string(eligible);
        }
        if (bird) {
            const Benchmark b = load_benchmark(bird, BenchmarkFormat::BirdJson);
            const auto stats = schema_stats(b);
            ok = ok && b.samples.size() == 1534 && fmt(stats.columns_per_db.mean, 1) == "72.5";
            detail += " bird samples=" + std::to_string(b.samples.size()) +
                      " columns/db=" + fmt(stats.columns_per_db.mean, 2);
        }
    } catch (const std::exception& e) {
        ok = false;
        detail += std::string(" error: ") + e.what();
    }
    verdict(9, ok, detail);
}

void criterion10(const QvtRun& q, const IdentityRun& id, const GaRun& ga) {
    const bool same_qvt = qvt_fixtures().transcript == q.transcript;
    const bool same_identity = identity_run().report == id.report;
    const bool same_ga = ga_runs().transcript == ga.transcript;
    verdict(10, same_qvt && same_identity && same_ga,
            std::string("determinism: qvt ") + (same_qvt ? "same" : "DIFFERS") + ", identity report " +
                (same_identity ? "same" : "DIFFERS") + ", ga " + (same_ga ? "same" : "DIFFERS"));
}

}  // namespace

int main() {
    try {
        const auto qvt = qvt_fixtures();
        criterion1(qvt);
        criterion2();
        const auto identity = identity_run();
        criterion3(identity);
        criterion4();
        criterion5();
        criterion6();
        const auto ga = ga_runs();
        criterion7(ga);
        criterion8();
        criterion9();
        criterion10(qvt, identity, ga);
    } catch (const std::exception& e) {
        std::printf("aborted: %s\n", e.what());
        return 2;
    }
    return failures == 0 ? 0 : 1;
}
