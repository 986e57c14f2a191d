// Command-line front end. Exit status: 0 success, 1 domain error, 2 usage error.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "nl2sql360/aas.hpp"
#include "nl2sql360/benchmark.hpp"
#include "nl2sql360/error.hpp"
#include "nl2sql360/executor.hpp"
#include "nl2sql360/metrics.hpp"
#include "nl2sql360/report.hpp"
#include "nl2sql360/scenario.hpp"
#include "nl2sql360/util/files.hpp"
#include "nl2sql360/util/strings.hpp"

using namespace nl2sql360;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BenchmarkArgs {
    std::string dir;
    std::string format = "spider_json";
    std::string split = "dev";
    std::string domain_map;
    double max_rejects = 0.01;

    void add_to(CLI::App* cmd, bool required = true) {
        auto* opt = cmd->add_option("--benchmark", dir, "Benchmark root directory");
        if (required) opt->required();
        cmd->add_option("--format", format, "spider_json or bird_json")->capture_default_str();
        cmd->add_option("--split", split, "train, dev or test")->capture_default_str();
        cmd->add_option("--domain-map", domain_map, "CSV of db_id,domain");
        cmd->add_option("--max-rejects", max_rejects, "Largest tolerated fraction of unparsable gold SQL")
            ->capture_default_str();
    }

    Benchmark load() const {
        LoadOptions options;
        options.split = split_from_string(split);
        options.max_reject_fraction = max_rejects;
        if (!domain_map.empty()) options.domain_map_file = domain_map;
        return load_benchmark(dir, format_from_string(format), options);
    }
};

fs::path home() {
    const char* env = std::getenv("NL2SQL360_HOME");
    return env && *env ? fs::path(env) : fs::path(".nl2sql360");
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
    } else {
        util::write_text_file(out, text);
    }
}

std::pair<std::string, ScenarioSpec> resolve_subset(const std::string& arg) {
    if (arg.empty() || util::iequals(arg, "all")) return {"all", ScenarioSpec::all()};
    const auto& builtins = builtin_scenarios();
    if (const auto it = builtins.find(util::to_lower(arg)); it != builtins.end()) return *it;
    if (fs::exists(arg)) return {fs::path(arg).stem().string(), ScenarioSpec::from_json(util::read_json_file(arg))};
    throw UsageError("--subset: '" + arg + "' is neither a builtin scenario nor a spec file");
}

Subset make_subset(const Benchmark& bench, const std::string& arg) {
    const auto [name, spec] = resolve_subset(arg);
    return filter(bench, spec, profile_benchmark(bench), name);
}

json subset_json(const Subset& s) {
    return {{"parent", s.parent}, {"name", s.name}, {"spec", s.spec.to_json()}, {"size", s.size()},
            {"sample_ids", s.sample_ids}};
}

std::unique_ptr<SystemAdapter> make_adapter(const std::string& spec, const Benchmark& bench, std::string system,
                                            const std::string& backbone, const std::string& token_log,
                                            double timeout) {
    if (spec.rfind("pred:", 0) == 0) {
        const fs::path path = spec.substr(5);
        if (system.empty()) system = path.stem().string();
        PredictionFileAdapter::Options o{system, backbone, std::nullopt};
        if (!token_log.empty()) o.token_log = fs::path(token_log);
        return std::make_unique<PredictionFileAdapter>(path, bench, o);
    }
    if (spec.rfind("cmd:", 0) == 0) {
        auto argv = split_command_line(spec.substr(4));
        if (argv.empty()) throw UsageError("--adapter cmd: needs a command");
        if (system.empty()) system = fs::path(argv[0]).filename().string();
        return std::make_unique<CommandAdapter>(std::move(argv), CommandAdapter::Options{system, backbone, timeout, true});
    }
    throw UsageError("--adapter must be pred:<file> or cmd:<command line>");
}

std::vector<RunLog> logs_from(const std::vector<std::string>& paths, const Benchmark& bench) {
    std::vector<RunLog> logs;
    if (!paths.empty()) {
        for (const auto& p : paths) logs.push_back(read_run_log(p));
        return logs;
    }
    // Whole store: runs on this benchmark, one per system (the one covering
    // the most samples, earliest file name on ties).
    const fs::path dir = home() / "logs";
    std::vector<fs::path> files;
    if (fs::is_directory(dir))
        for (const auto& e : fs::directory_iterator(dir))
            if (e.path().extension() == ".jsonl") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::map<std::string, std::size_t> by_system;
    for (const auto& f : files) {
        RunLog log = read_run_log(f);
        if (log.benchmark != bench.name) continue;
        const auto it = by_system.find(log.system_name);
        if (it == by_system.end()) {
            by_system[log.system_name] = logs.size();
            logs.push_back(std::move(log));
        } else if (log.outcomes.size() > logs[it->second].outcomes.size()) {
            std::cerr << "note: using run " << log.run_id << " for " << log.system_name << " instead of "
                      << logs[it->second].run_id << "\n";
            logs[it->second] = std::move(log);
        } else {
            std::cerr << "note: skipping run " << log.run_id << " for " << log.system_name << "\n";
        }
    }
    return logs;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Evaluation testbed for NL2SQL systems"};
    app.require_subcommand(1);
    std::string out;

    // load
    BenchmarkArgs load_args;
    auto* load_cmd = app.add_subcommand("load", "Load and validate a benchmark");
    load_args.add_to(load_cmd);
    load_cmd->add_option("--out", out, "Write the normalized benchmark as JSON");

    // stat
    BenchmarkArgs stat_args;
    auto* stat_cmd = app.add_subcommand("stat", "Schema and hardness statistics");
    stat_args.add_to(stat_cmd);

    // filter
    BenchmarkArgs filter_args;
    std::string filter_subset;
    auto* filter_cmd = app.add_subcommand("filter", "Select a scenario subset");
    filter_args.add_to(filter_cmd);
    filter_cmd->add_option("--subset", filter_subset, "Builtin scenario name or JSON spec file")->required();
    filter_cmd->add_option("--out", out, "Write the subset JSON to a file");

    // run
    BenchmarkArgs run_args;
    std::string run_subset = "all", adapter_spec, system, backbone, token_log, run_id;
    ExecutionConfig config;
    double adapter_timeout = 60;
    auto* run_cmd = app.add_subcommand("run", "Evaluate a system and write a run log");
    run_args.add_to(run_cmd);
    run_cmd->add_option("--subset", run_subset, "Builtin scenario name or JSON spec file")->capture_default_str();
    run_cmd->add_option("--adapter", adapter_spec, "pred:<file> or cmd:<command line>")->required();
    run_cmd->add_option("--system", system, "System name (defaults to the file or program name)");
    run_cmd->add_option("--backbone", backbone, "Model label used for pricing");
    run_cmd->add_option("--token-log", token_log, "JSON token counts per sample (prediction files)");
    run_cmd->add_option("--timeout", config.timeout_s, "Per-query timeout in seconds")->capture_default_str();
    run_cmd->add_option("--repeats", config.timing_repeats, "Timing repetitions")->capture_default_str();
    run_cmd->add_option("--workers", config.parallel_workers, "Concurrent samples")->capture_default_str();
    run_cmd->add_option("--adapter-timeout", adapter_timeout, "Seconds per command adapter call")
        ->capture_default_str();
    run_cmd->add_option("--run-id", run_id, "Explicit run id");
    run_cmd->add_option("--out", out, "Log path (default $NL2SQL360_HOME/logs/<run id>.jsonl)");

    // report
    BenchmarkArgs report_args;
    std::vector<std::string> log_paths;
    std::string ves = "sqrt", qvt_mode = "ex", prices_path, render_format = "markdown", heatmap;
    bool with_domains = false;
    auto* report_cmd = app.add_subcommand("report", "Aggregate run logs into a leaderboard");
    report_args.add_to(report_cmd);
    report_cmd->add_option("--log", log_paths, "Run log (repeatable; default: every log in the store)");
    report_cmd->add_option("--ves", ves, "sqrt or plain")->capture_default_str();
    report_cmd->add_option("--qvt", qvt_mode, "ex or em")->capture_default_str();
    report_cmd->add_option("--prices", prices_path, "JSON model prices");
    report_cmd->add_option("--render", render_format, "markdown, csv or json")->capture_default_str();
    report_cmd->add_option("--heatmap", heatmap, "Emit a systems x slices CSV of this metric instead");
    report_cmd->add_flag("--domains", with_domains, "Add one slice per domain (needs --domain-map)");
    report_cmd->add_option("--out", out, "Write to a file instead of stdout");

    // qvt
    BenchmarkArgs qvt_args;
    std::string qvt_log;
    auto* qvt_cmd = app.add_subcommand("qvt", "Query-variance groups, and a run's score on them");
    qvt_args.add_to(qvt_cmd);
    qvt_cmd->add_option("--log", qvt_log, "Run log to score");
    qvt_cmd->add_option("--qvt", qvt_mode, "ex or em")->capture_default_str();

    // aas
    BenchmarkArgs aas_args;
    std::string space_path, fitness_spec, metric = "ex", aas_subset = "all", log_dir;
    bool api_backbone = false;
    aas::GaParams params;
    auto* aas_cmd = app.add_subcommand("aas", "Genetic search over the pipeline design space");
    aas_args.add_to(aas_cmd, false);
    aas_cmd->add_option("--space", space_path, "Design space JSON (default: builtin space)");
    aas_cmd->add_flag("--api-backbone", api_backbone, "Builtin space for a hosted model");
    aas_cmd->add_option("--fitness", fitness_spec, "table:<csv> or preds:<dir>")->required();
    aas_cmd->add_option("--metric", metric, "ex, em or ves (preds fitness)")->capture_default_str();
    aas_cmd->add_option("--subset", aas_subset, "Scenario for preds fitness")->capture_default_str();
    aas_cmd->add_option("--log-dir", log_dir, "Where preds fitness writes run logs");
    aas_cmd->add_option("--seed", params.seed)->capture_default_str();
    aas_cmd->add_option("--population", params.population_size)->capture_default_str();
    aas_cmd->add_option("--generations", params.generations)->capture_default_str();
    aas_cmd->add_option("--swap", params.swap_probability)->capture_default_str();
    aas_cmd->add_option("--mutation", params.mutation_probability)->capture_default_str();
    aas_cmd->add_option("--elitism", params.elitism_count)->capture_default_str();
    aas_cmd->add_option("--trace", out, "Write the search trace as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*load_cmd) {
            const Benchmark b = load_args.load();
            json rejects = json::array();
            for (const auto& r : b.rejects) rejects.push_back({{"sample_id", r.sample.sample_id}, {"reason", r.reason}});
            std::cout << json{{"name", b.name},
                              {"format", to_string(b.format)},
                              {"samples", b.samples.size()},
                              {"databases", b.schemas.size()},
                              {"rejects", rejects}}
                             .dump(2)
                      << "\n";
            if (!out.empty()) util::write_text_file(out, b.to_json().dump(2) + "\n");
        } else if (*stat_cmd) {
            const Benchmark b = stat_args.load();
            json hardness = json::object();
            for (const auto& h : {"easy", "medium", "hard", "extra"}) hardness[h] = 0;
            for (const auto& [id, p] : profile_benchmark(b)) {
                const std::string tier(sql::to_string(sql::classify_hardness(p)));
                hardness[tier] = hardness[tier].get<int>() + 1;
            }
            int eligible = 0;
            for (const auto& g : group_variants(b)) eligible += g.qvt_eligible();
            std::cout << json{{"benchmark", b.name},
                              {"samples", b.samples.size()},
                              {"rejects", b.rejects.size()},
                              {"schema", schema_stats(b).to_json()},
                              {"hardness", hardness},
                              {"qvt_eligible_groups", eligible}}
                             .dump(2)
                      << "\n";
        } else if (*filter_cmd) {
            const Benchmark b = filter_args.load();
            emit(subset_json(make_subset(b, filter_subset)).dump(2) + "\n", out);
        } else if (*run_cmd) {
            const Benchmark b = run_args.load();
            const Subset subset = make_subset(b, run_subset);
            auto adapter = make_adapter(adapter_spec, b, system, backbone, token_log, adapter_timeout);
            config.validate();
            const std::string id =
                run_id.empty() ? default_run_id(adapter->system_name(), b, subset, config, adapter->metadata()) : run_id;
            const fs::path log_path = out.empty() ? home() / "logs" / (id + ".jsonl") : fs::path(out);
            const RunLog log = run_system(*adapter, b, subset, config, {log_path, id});
            std::cerr << log.outcomes.size() << " outcomes, " << log.excluded.size() << " excluded\n";
            std::cout << log_path.string() << "\n";
        } else if (*report_cmd) {
            const Benchmark b = report_args.load();
            metrics::MetricOptions options;
            options.ves = metrics::ves_aggregator_from_string(ves);
            options.qvt = metrics::qvt_indicator_from_string(qvt_mode);
            std::optional<metrics::PriceTable> prices;
            if (!prices_path.empty()) {
                prices = metrics::PriceTable::load(prices_path);
                options.prices = &*prices;
            }
            auto slices = report::default_slices();
            if (with_domains) {
                if (!b.domain_map) throw UsageError("--domains needs --domain-map");
                const auto d = report::domain_slices(b);
                slices.insert(slices.end(), d.begin(), d.end());
            }
            const auto r = report::aggregate(logs_from(log_paths, b), b, slices, options);
            emit(heatmap.empty() ? report::render(r, report::report_format_from_string(render_format))
                                 : report::render_heatmap(r, heatmap),
                 out);
        } else if (*qvt_cmd) {
            const Benchmark b = qvt_args.load();
            std::vector<QvtGroup> eligible;
            std::size_t variants = 0;
            for (auto& g : group_variants(b))
                if (g.qvt_eligible()) {
                    variants += g.m();
                    eligible.push_back(std::move(g));
                }
            json j = {{"benchmark", b.name}, {"eligible_groups", eligible.size()}, {"eligible_samples", variants}};
            if (!qvt_log.empty()) {
                const RunLog log = read_run_log(qvt_log);
                if (log.benchmark != b.name) throw MixedBenchmark("log was made on " + log.benchmark);
                std::map<std::string, EvalOutcome> by_id;
                for (const auto& o : log.outcomes) by_id.emplace(o.sample_id, o);
                std::vector<QvtGroup> covered;
                for (const auto& g : eligible)
                    if (std::all_of(g.variants.begin(), g.variants.end(),
                                    [&](const Sample& s) { return by_id.count(s.sample_id) > 0; }))
                        covered.push_back(g);
                const auto score = metrics::compute_qvt(covered, by_id, metrics::qvt_indicator_from_string(qvt_mode));
                j["system"] = log.system_name;
                j["scored_groups"] = covered.size();
                j["qvt"] = score ? json(*score) : json(nullptr);
            }
            std::cout << j.dump(2) << "\n";
        } else if (*aas_cmd) {
            const aas::SearchSpace space =
                space_path.empty() ? aas::SearchSpace::default_space(api_backbone) : aas::SearchSpace::load(space_path);
            aas::FitnessFn fitness;
            std::optional<Benchmark> bench;
            if (fitness_spec.rfind("table:", 0) == 0) {
                fitness = aas::FitnessTable::load(space, fitness_spec.substr(6));
            } else if (fitness_spec.rfind("preds:", 0) == 0) {
                if (aas_args.dir.empty()) throw UsageError("--fitness preds: needs --benchmark");
                bench = aas_args.load();
                ExecutionConfig c;
                fitness = aas::testbed_fitness(space, *bench, make_subset(*bench, aas_subset), c,
                                               fitness_spec.substr(6), log_dir.empty() ? home() / "aas" : fs::path(log_dir),
                                               aas::target_metric_from_string(metric));
            } else {
                throw UsageError("--fitness must be table:<csv> or preds:<dir>");
            }
            const auto result = aas::evolve(space, params, fitness);
            std::cout << "best: " << space.key(result.best) << "\n"
                      << "fitness: " << util::format_double(result.best_fitness) << "\n"
                      << "evaluations: " << result.evaluations << "\n";
            if (!out.empty()) {
                json trace = result.to_json(space);
                trace["params"] = params.to_json();
                trace["space"] = space.to_json();
                util::write_text_file(out, trace.dump(2) + "\n");
            }
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run_cli(argc, argv); }
