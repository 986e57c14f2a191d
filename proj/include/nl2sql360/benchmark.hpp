#pragma once

/// @file benchmark.hpp
/// @brief Spider / BIRD benchmark loading, Table-4 style schema statistics and
/// grouping of samples into query-variance groups.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2sql360/sql/ast.hpp"

namespace nl2sql360 {

enum class Split { Train, Dev, Test };
enum class BenchmarkFormat { SpiderJson, BirdJson };

std::string to_string(Split s);
std::string to_string(BenchmarkFormat f);
Split split_from_string(const std::string& s);
BenchmarkFormat format_from_string(const std::string& s);

struct Sample {
    std::string sample_id;
    std::string db_id;
    std::string nl_question;
    std::string gold_sql;
    Split split = Split::Dev;
    /// BIRD external knowledge; empty for Spider.
    std::string evidence;

    bool operator==(const Sample&) const = default;
};

struct Column {
    std::string name;
    std::string type;

    bool operator==(const Column&) const = default;
};

struct Table {
    std::string name;
    std::vector<Column> columns;

    bool operator==(const Table&) const = default;
};

struct ColumnRef {
    std::string table;
    std::string column;

    bool operator==(const ColumnRef&) const = default;
};

struct ForeignKey {
    ColumnRef from;
    ColumnRef to;

    bool operator==(const ForeignKey&) const = default;
};

struct DatabaseSchema {
    std::string db_id;
    std::vector<Table> tables;
    std::vector<ColumnRef> primary_keys;
    std::vector<ForeignKey> foreign_keys;

    std::size_t column_count() const;
    bool has_column(const ColumnRef& ref) const;
    bool operator==(const DatabaseSchema&) const = default;
};

nlohmann::json to_json(const DatabaseSchema& schema);

/// Gold SQL that failed to parse, kept for the rejects report.
struct RejectedSample {
    Sample sample;
    std::string reason;

    bool operator==(const RejectedSample&) const = default;
};

struct Benchmark {
    std::string name;
    BenchmarkFormat format = BenchmarkFormat::SpiderJson;
    std::vector<Sample> samples;
    std::map<std::string, DatabaseSchema> schemas;
    std::optional<std::map<std::string, std::string>> domain_map;
    std::map<std::string, std::filesystem::path> database_files;
    std::vector<RejectedSample> rejects;

    const Sample* find(const std::string& sample_id) const;
    std::optional<std::string> domain_of(const std::string& db_id) const;
    nlohmann::json to_json() const;
};

struct LoadOptions {
    Split split = Split::Dev;
    /// Fraction of unparseable gold queries tolerated before loading fails.
    double max_reject_fraction = 0.01;
    /// Overrides for the conventional file names of the chosen format/split.
    std::optional<std::filesystem::path> questions_file;
    std::optional<std::filesystem::path> tables_file;
    std::optional<std::filesystem::path> database_dir;
    std::optional<std::filesystem::path> domain_map_file;
    std::optional<std::string> name;
};

/// Loads a benchmark directory laid out as distributed:
///
///   spider_json: dev.json | train_spider.json | test.json, tables.json
///                (test_tables.json for test), database/<db>/<db>.sqlite
///   bird_json:   dev.json | train.json, dev_tables.json | train_tables.json,
///                dev_databases/<db>/<db>.sqlite | train_databases/...
///
/// Sample ids are the `question_id` field when present, otherwise the
/// zero-based position in the question file.
Benchmark load_benchmark(const std::filesystem::path& root, BenchmarkFormat format, const LoadOptions& options = {});

/// Parses a Spider tables.json document into schemas, validating keys.
std::map<std::string, DatabaseSchema> parse_schema_catalog(const nlohmann::json& catalog);

struct MinMaxMean {
    double min = 0;
    double max = 0;
    double mean = 0;  ///< rounded half-up to one decimal

    bool operator==(const MinMaxMean&) const = default;
};

struct SchemaStats {
    MinMaxMean tables_per_db;
    MinMaxMean columns_per_db;
    MinMaxMean columns_per_table;
    MinMaxMean pks_per_db;
    MinMaxMean fks_per_db;
    std::size_t database_count = 0;

    nlohmann::json to_json() const;
};

SchemaStats schema_stats(const Benchmark& benchmark);

/// Gold queries with all of their natural-language phrasings.
struct QvtGroup {
    std::string group_id;
    std::string db_id;
    std::string canonical_gold;
    std::vector<Sample> variants;

    std::size_t m() const noexcept { return variants.size(); }
    bool qvt_eligible() const noexcept { return variants.size() >= 2; }
};

/// Groups samples by database and canonical gold SQL (case-insensitive
/// identifiers, normalized whitespace, order-insensitive condition sets).
/// Groups appear in order of their first sample.
std::vector<QvtGroup> group_variants(const Benchmark& benchmark);

/// Reads a two-column (db_id, domain) CSV with a header row.
std::map<std::string, std::string> load_domain_map(const std::filesystem::path& path);

}  // namespace nl2sql360
