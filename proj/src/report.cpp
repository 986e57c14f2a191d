#include "nl2sql360/report.hpp"

#include <map>
#include <set>

#include "nl2sql360/error.hpp"
#include "nl2sql360/util/csv.hpp"
#include "nl2sql360/util/strings.hpp"

namespace nl2sql360::report {

using nlohmann::json;

std::vector<Slice> default_slices() {
    std::vector<Slice> out{{"All", ScenarioSpec::all()}};
    for (const auto& name : builtin_scenario_names()) out.push_back({name, builtin_scenarios().at(name)});
    return out;
}

std::vector<Slice> domain_slices(const Benchmark& benchmark) {
    std::vector<Slice> out;
    if (!benchmark.domain_map) return out;
    std::set<std::string> domains;
    for (const auto& [db, domain] : *benchmark.domain_map) domains.insert(domain);
    for (const auto& d : domains) out.push_back({"domain:" + d, ScenarioSpec::domain(d)});
    return out;
}

const Row* Report::find(const std::string& system, const std::string& slice) const {
    for (const auto& r : rows)
        if (r.system == system && r.slice == slice) return &r;
    return nullptr;
}

Report aggregate(const std::vector<RunLog>& logs, const Benchmark& benchmark, const std::vector<Slice>& slices,
                 const metrics::MetricOptions& options) {
    Report report;
    report.benchmark = benchmark.name;
    report.metric_config = options.to_json();
    report.metric_config.erase("model_label");
    for (const auto& s : slices) report.slices.push_back(s.name);

    std::set<std::string> systems;
    for (const auto& log : logs) {
        if (log.benchmark != benchmark.name)
            throw MixedBenchmark("run " + log.run_id + " was made on " + log.benchmark + ", not " + benchmark.name);
        if (!(log.config == logs.front().config))
            throw ConfigMismatch("run " + log.run_id + " used different execution settings than " +
                                 logs.front().run_id);
        if (!systems.insert(log.system_name).second)
            throw ConfigMismatch("two runs for system " + log.system_name);
    }
    if (!logs.empty()) report.config = logs.front().config;
    if (logs.empty()) return report;

    const ProfileMap profiles = profile_benchmark(benchmark);
    std::vector<std::set<std::string>> members;
    for (const auto& s : slices) {
        const Subset sub = filter(benchmark, s.spec, profiles, s.name);
        members.emplace_back(sub.sample_ids.begin(), sub.sample_ids.end());
    }
    std::vector<QvtGroup> groups;
    for (auto& g : group_variants(benchmark))
        if (g.qvt_eligible()) groups.push_back(std::move(g));

    for (const auto& log : logs) {
        metrics::MetricOptions opts = options;
        const std::string backbone = log.metadata.value("backbone", std::string{});
        opts.model_label = backbone;
        if (opts.prices && !opts.prices->contains(backbone)) opts.prices = nullptr;
        for (std::size_t i = 0; i < slices.size(); ++i) {
            std::vector<EvalOutcome> picked;
            for (const auto& o : log.outcomes)
                if (members[i].count(o.sample_id)) picked.push_back(o);
            Row row{log.system_name, log.run_id, slices[i].name, std::nullopt};
            if (!picked.empty()) row.metrics = metrics::evaluate(picked, groups, opts);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

Format report_format_from_string(const std::string& s) {
    const std::string v = util::to_lower(s);
    if (v == "markdown" || v == "md" || v == "markdown_table") return Format::Markdown;
    if (v == "csv") return Format::Csv;
    if (v == "json") return Format::Json;
    throw FormatError("unknown report format '" + s + "'");
}

namespace {

const std::vector<std::string>& metric_columns() {
    static const std::vector<std::string> cols = {"n",   "ex",          "em",         "ves",      "qvt",
                                                  "avg_latency", "avg_tokens", "avg_cost", "ex_per_cost"};
    return cols;
}

std::optional<double> metric_value(const metrics::MetricReport& m, const std::string& name) {
    if (name == "n") return static_cast<double>(m.n);
    if (name == "ex") return m.ex;
    if (name == "em") return m.em;
    if (name == "ves") return m.ves;
    if (name == "qvt") return m.qvt;
    if (name == "avg_latency") return m.avg_latency;
    if (name == "avg_tokens") return m.avg_tokens;
    if (name == "avg_cost") return m.avg_cost;
    if (name == "ex_per_cost") return m.ex_per_cost;
    throw FormatError("unknown metric '" + name + "'");
}

int decimals(const std::string& name) {
    if (name == "n") return 0;
    if (name == "ves" || name == "ex_per_cost") return 2;
    if (name == "avg_tokens") return 1;
    if (name == "avg_latency" || name == "avg_cost") return 6;
    return 4;
}

std::vector<std::string> cells(const Row& row, const std::string& absent) {
    std::vector<std::string> out;
    for (const auto& col : metric_columns()) {
        const auto v = row.metrics ? metric_value(*row.metrics, col) : std::nullopt;
        out.push_back(v ? util::format_fixed(*v, decimals(col)) : absent);
    }
    return out;
}

}  // namespace

std::string render(const Report& report, Format format) {
    switch (format) {
        case Format::Csv: {
            std::vector<std::string> header = {"system", "run_id", "slice"};
            header.insert(header.end(), metric_columns().begin(), metric_columns().end());
            std::string out = util::csv_row(header);
            for (const auto& row : report.rows) {
                std::vector<std::string> fields = {row.system, row.run_id, row.slice};
                const auto c = cells(row, "");
                fields.insert(fields.end(), c.begin(), c.end());
                out += util::csv_row(fields);
            }
            return out;
        }
        case Format::Markdown: {
            std::vector<std::string> header = {"system", "slice"};
            header.insert(header.end(), metric_columns().begin(), metric_columns().end());
            std::string out = "| " + util::join(header, " | ") + " |\n|";
            for (std::size_t i = 0; i < header.size(); ++i) out += i < 2 ? "---|" : "---:|";
            out += "\n";
            for (const auto& row : report.rows) {
                std::vector<std::string> fields = {util::replace_all(row.system, "|", "\\|"), row.slice};
                const auto c = cells(row, "-");
                fields.insert(fields.end(), c.begin(), c.end());
                out += "| " + util::join(fields, " | ") + " |\n";
            }
            return out;
        }
        case Format::Json: {
            json rows = json::array();
            for (const auto& row : report.rows)
                rows.push_back({{"system", row.system},
                                {"run_id", row.run_id},
                                {"slice", row.slice},
                                {"metrics", row.metrics ? row.metrics->to_json() : json(nullptr)}});
            const json j = {{"benchmark", report.benchmark},
                            {"execution", to_json(report.config)},
                            {"metrics", report.metric_config},
                            {"slices", report.slices},
                            {"rows", rows}};
            return j.dump(2) + "\n";
        }
    }
    return {};
}

std::string render_heatmap(const Report& report, const std::string& metric) {
    metric_value(metrics::MetricReport{}, metric);  // validates the name
    std::vector<std::string> header = {"system"};
    header.insert(header.end(), report.slices.begin(), report.slices.end());
    std::string out = util::csv_row(header);
    std::vector<std::string> systems;
    for (const auto& row : report.rows)
        if (systems.empty() || systems.back() != row.system) systems.push_back(row.system);
    for (const auto& system : systems) {
        std::vector<std::string> fields = {system};
        for (const auto& slice : report.slices) {
            const Row* row = report.find(system, slice);
            const auto v = row && row->metrics ? metric_value(*row->metrics, metric) : std::nullopt;
            fields.push_back(v ? util::format_double(*v) : "");
        }
        out += util::csv_row(fields);
    }
    return out;
}

}  // namespace nl2sql360::report
