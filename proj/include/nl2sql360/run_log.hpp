#pragma once

/// @file run_log.hpp
/// @brief Per-sample evaluation outcomes and their JSON-lines run log.
///
/// A log file holds one header line followed by one line per outcome:
///
///     {"type":"header","run_id":...,"system_name":...,"config":{...},...}
///     {"type":"outcome","sample_id":"0","exec_correct":true,...}
///     {"type":"excluded","sample_id":"7","reason":"gold query failed: ..."}
///
/// Lines are only ever appended. A partially written final line (from an
/// interrupted run) is ignored by the reader.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace nl2sql360 {

struct EvalOutcome {
    std::string sample_id;
    std::string predicted_sql;
    bool pred_parse_ok = false;
    bool pred_exec_ok = false;
    bool exec_correct = false;
    bool exact_match = false;
    double t_gold = 0;                    ///< seconds, median over repeats
    std::optional<double> t_pred;         ///< present iff pred_exec_ok
    double wall_latency = 0;              ///< adapter time for this sample
    std::optional<std::int64_t> tokens_in;
    std::optional<std::int64_t> tokens_out;
    std::string error;                    ///< adapter or execution diagnostic

    bool operator==(const EvalOutcome&) const = default;
};

nlohmann::json to_json(const EvalOutcome& o);
EvalOutcome outcome_from_json(const nlohmann::json& j);

struct ExecutionConfig {
    double timeout_s = 30.0;
    int timing_repeats = 5;
    std::string timing_aggregator = "median";
    int parallel_workers = 1;
    std::string order_sensitive_compare = "auto";

    /// Throws FormatError on timeout <= 0, repeats < 1 or workers < 1.
    void validate() const;
    bool operator==(const ExecutionConfig&) const = default;
};

nlohmann::json to_json(const ExecutionConfig& c);
ExecutionConfig config_from_json(const nlohmann::json& j);

/// A subset sample whose gold query could not be executed.
struct ExcludedSample {
    std::string sample_id;
    std::string reason;

    bool operator==(const ExcludedSample&) const = default;
};

struct RunLog {
    std::string run_id;
    std::string system_name;
    std::string benchmark;
    std::string subset_name;
    std::string subset_spec_hash;
    ExecutionConfig config;
    std::string created_at;
    /// Adapter metadata, e.g. {"backbone": "gpt-4"}.
    nlohmann::json metadata = nlohmann::json::object();
    std::vector<EvalOutcome> outcomes;
    std::vector<ExcludedSample> excluded;

    nlohmann::json header_json() const;
    const EvalOutcome* find(const std::string& sample_id) const;
};

/// Reads a log file; throws MissingFile or FormatError.
RunLog read_run_log(const std::filesystem::path& path);

/// Serializes appends from any number of threads into one file.
class RunLogWriter {
  public:
    /// Opens `path` for appending. If the file ends in a partial line it is
    /// truncated back to the last complete line first.
    explicit RunLogWriter(const std::filesystem::path& path);

    void write_header(const RunLog& log);
    void append(const EvalOutcome& outcome);
    void append(const ExcludedSample& excluded);

  private:
    void write_line(const nlohmann::json& j);

    std::mutex mutex_;
    std::ofstream out_;
};

}  // namespace nl2sql360
