#pragma once

/// @file report.hpp
/// @brief Leaderboards: metrics per (system, scenario slice) from run logs.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2sql360/benchmark.hpp"
#include "nl2sql360/metrics.hpp"
#include "nl2sql360/run_log.hpp"
#include "nl2sql360/scenario.hpp"

namespace nl2sql360::report {

struct Slice {
    std::string name;
    ScenarioSpec spec;
};

/// "All" followed by the twelve builtin slices.
std::vector<Slice> default_slices();

/// One "domain:<name>" slice per domain in the benchmark's domain map.
std::vector<Slice> domain_slices(const Benchmark& benchmark);

struct Row {
    std::string system;
    std::string run_id;
    std::string slice;
    /// Absent when the slice holds none of the run's samples.
    std::optional<metrics::MetricReport> metrics;
};

struct Report {
    std::string benchmark;
    ExecutionConfig config;
    nlohmann::json metric_config = nlohmann::json::object();
    std::vector<std::string> slices;
    std::vector<Row> rows;  ///< system-major, slices in order

    const Row* find(const std::string& system, const std::string& slice) const;
};

/// Per-slice metrics for every log. Throws MixedBenchmark when a log names a
/// different benchmark and ConfigMismatch when logs were produced under
/// different execution settings or two logs share a system name. Cost columns
/// use the price of each run's backbone when the table lists it.
Report aggregate(const std::vector<RunLog>& logs, const Benchmark& benchmark, const std::vector<Slice>& slices,
                 const metrics::MetricOptions& options = {});

enum class Format { Markdown, Csv, Json };

Format report_format_from_string(const std::string& s);

/// Deterministic text. Markdown and CSV show absent cells as "-" and empty
/// fields respectively; JSON uses null.
std::string render(const Report& report, Format format);

/// Systems x slices matrix of one metric (ex, em, ves, qvt, avg_latency,
/// avg_cost, ex_per_cost) as CSV.
std::string render_heatmap(const Report& report, const std::string& metric = "ex");

}  // namespace nl2sql360::report
