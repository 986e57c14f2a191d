#pragma once

/// @file executor.hpp
/// @brief Read-only query execution, gold/prediction timing and the run loop
/// that turns an adapter's predictions into a run log.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2sql360/benchmark.hpp"
#include "nl2sql360/error.hpp"
#include "nl2sql360/result_table.hpp"
#include "nl2sql360/run_log.hpp"
#include "nl2sql360/scenario.hpp"

namespace nl2sql360 {

enum class ExecErrorKind { Syntax, Runtime, Timeout, RejectedWrite };

std::string to_string(ExecErrorKind k);

/// Raised by the execution primitives. Recorded per sample by run_system,
/// never propagated out of it.
class ExecError : public Error {
  public:
    ExecError(ExecErrorKind kind, const std::string& message)
        : Error(to_string(kind) + ": " + message), kind_(kind) {}
    ExecErrorKind kind() const noexcept { return kind_; }

  private:
    ExecErrorKind kind_;
};

/// Runs one statement on a database opened read-only and materializes all
/// rows. Statements that would modify the database are rejected before they
/// run. Throws ExecError, or DatabaseMissing when the file cannot be opened.
ResultTable execute_query(const std::filesystem::path& db_path, std::string_view sql, double timeout_s = 30.0);

/// One warm-up execution, then the median wall time of `repeats` executions.
/// Holds the process-wide timing lane exclusively, so no other query started
/// through this module runs during measurement. Throws ExecError.
double time_query(const std::filesystem::path& db_path, std::string_view sql, int repeats, double timeout_s = 30.0);

struct AdapterRequest {
    const Sample* sample = nullptr;
    const DatabaseSchema* schema = nullptr;
    std::filesystem::path db_path;
};

struct AdapterResponse {
    std::string sql;
    /// Adapter-reported latency; when absent the executor measures the call.
    std::optional<double> wall_latency;
    std::optional<std::int64_t> tokens_in;
    std::optional<std::int64_t> tokens_out;
};

/// Something that turns a question into SQL. predict() may be called from
/// several threads at once and signals per-sample failures by throwing
/// AdapterProtocolError.
class SystemAdapter {
  public:
    virtual ~SystemAdapter() = default;
    virtual std::string system_name() const = 0;
    /// Recorded in the run header, e.g. {"kind": "prediction_file", "backbone": "gpt-4"}.
    virtual nlohmann::json metadata() const = 0;
    virtual AdapterResponse predict(const AdapterRequest& request) = 0;
};

struct TokenCounts {
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;
};

/// Reads `{"<sample_id>": {"tokens_in": n, "tokens_out": m}, ...}`.
std::map<std::string, TokenCounts> load_token_log(const std::filesystem::path& path);

/// Cached predictions: a JSON object mapping sample id to SQL, or plain text
/// with one query per line in benchmark order (a trailing tab-separated
/// db_id, as in Spider prediction files, is dropped).
class PredictionFileAdapter : public SystemAdapter {
  public:
    struct Options {
        std::string system_name;
        std::string backbone;
        std::optional<std::filesystem::path> token_log;
    };

    PredictionFileAdapter(const std::filesystem::path& path, const Benchmark& benchmark, Options options);
    PredictionFileAdapter(std::map<std::string, std::string> predictions, Options options);

    std::string system_name() const override { return options_.system_name; }
    nlohmann::json metadata() const override;
    AdapterResponse predict(const AdapterRequest& request) override;

  private:
    std::map<std::string, std::string> predictions_;
    std::map<std::string, TokenCounts> tokens_;
    Options options_;
};

/// Runs an external program per sample. The program receives one JSON object
/// on stdin ({"sample_id", "db_id", "nl_question", "evidence", "schema"}),
/// NL2SQL360_DB_PATH in its environment, and prints the SQL on stdout; it
/// may instead print {"sql": ..., "tokens_in": n, "tokens_out": m}. The argv
/// template may use {db_id}, {db_path} and {sample_id}.
class CommandAdapter : public SystemAdapter {
  public:
    struct Options {
        std::string system_name;
        std::string backbone;
        double timeout_s = 60.0;
        bool deterministic = true;
    };

    CommandAdapter(std::vector<std::string> argv, Options options);

    std::string system_name() const override { return options_.system_name; }
    nlohmann::json metadata() const override;
    AdapterResponse predict(const AdapterRequest& request) override;

  private:
    std::vector<std::string> argv_;
    Options options_;
};

/// Shell-like word splitting with single and double quotes.
std::vector<std::string> split_command_line(const std::string& line);

struct RunOptions {
    std::filesystem::path log_path;
    /// Defaults to a digest of system, benchmark, subset and configuration.
    std::optional<std::string> run_id;
};

std::string default_run_id(const std::string& system_name, const Benchmark& benchmark, const Subset& subset,
                           const ExecutionConfig& config, const nlohmann::json& metadata);

/// Evaluates the adapter on every subset sample and appends outcomes to the
/// log in subset order. If the log already holds this run, samples already
/// recorded are skipped. A gold query that fails to execute excludes its
/// sample (recorded as an "excluded" line). Throws DatabaseMissing before
/// doing anything if a database is absent, and ConfigMismatch when the log
/// belongs to a different run.
RunLog run_system(SystemAdapter& adapter, const Benchmark& benchmark, const Subset& subset,
                  const ExecutionConfig& config, const RunOptions& options);

}  // namespace nl2sql360
