#include "nl2sql360/benchmark.hpp"

#include <algorithm>
#include <climits>
#include <cstdint>
#include <set>
#include <unordered_map>

#include "nl2sql360/error.hpp"
#include "nl2sql360/metrics/exact_match.hpp"
#include "nl2sql360/sql/parser.hpp"
#include "nl2sql360/util/csv.hpp"
#include "nl2sql360/util/files.hpp"
#include "nl2sql360/util/strings.hpp"

namespace nl2sql360 {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    return "dev";
}

std::string to_string(BenchmarkFormat f) {
    return f == BenchmarkFormat::SpiderJson ? "spider_json" : "bird_json";
}

Split split_from_string(const std::string& s) {
    const std::string v = util::to_lower(s);
    if (v == "train") return Split::Train;
    if (v == "dev") return Split::Dev;
    if (v == "test") return Split::Test;
    throw FormatError("unknown split '" + s + "'");
}

BenchmarkFormat format_from_string(const std::string& s) {
    const std::string v = util::to_lower(s);
    if (v == "spider_json" || v == "spider") return BenchmarkFormat::SpiderJson;
    if (v == "bird_json" || v == "bird") return BenchmarkFormat::BirdJson;
    throw FormatError("unknown benchmark format '" + s + "'");
}

std::size_t DatabaseSchema::column_count() const {
    std::size_t n = 0;
    for (const auto& t : tables) n += t.columns.size();
    return n;
}

bool DatabaseSchema::has_column(const ColumnRef& ref) const {
    for (const auto& t : tables) {
        if (!util::iequals(t.name, ref.table)) continue;
        for (const auto& c : t.columns)
            if (util::iequals(c.name, ref.column)) return true;
    }
    return false;
}

const Sample* Benchmark::find(const std::string& sample_id) const {
    for (const auto& s : samples)
        if (s.sample_id == sample_id) return &s;
    return nullptr;
}

std::optional<std::string> Benchmark::domain_of(const std::string& db_id) const {
    if (!domain_map) return std::nullopt;
    auto it = domain_map->find(db_id);
    if (it == domain_map->end()) return std::nullopt;
    return it->second;
}

namespace {

json sample_json(const Sample& s) {
    json j = {{"sample_id", s.sample_id},
              {"db_id", s.db_id},
              {"question", s.nl_question},
              {"gold_sql", s.gold_sql},
              {"split", to_string(s.split)}};
    if (!s.evidence.empty()) j["evidence"] = s.evidence;
    return j;
}

json ref_json(const ColumnRef& r) { return json::array({r.table, r.column}); }

}  // namespace

json to_json(const DatabaseSchema& schema) {
    json tables = json::array();
    for (const auto& t : schema.tables) {
        json cols = json::array();
        for (const auto& c : t.columns) cols.push_back(json::array({c.name, c.type}));
        tables.push_back({{"name", t.name}, {"columns", cols}});
    }
    json pks = json::array();
    for (const auto& pk : schema.primary_keys) pks.push_back(ref_json(pk));
    json fks = json::array();
    for (const auto& fk : schema.foreign_keys) fks.push_back(json::array({ref_json(fk.from), ref_json(fk.to)}));
    return {{"db_id", schema.db_id}, {"tables", tables}, {"primary_keys", pks}, {"foreign_keys", fks}};
}

json Benchmark::to_json() const {
    json j;
    j["name"] = name;
    j["format"] = to_string(format);
    j["samples"] = json::array();
    for (const auto& s : samples) j["samples"].push_back(sample_json(s));
    j["schemas"] = json::object();
    for (const auto& [id, schema] : schemas) j["schemas"][id] = nl2sql360::to_json(schema);
    if (domain_map) j["domain_map"] = *domain_map;
    j["database_files"] = json::object();
    for (const auto& [id, path] : database_files) j["database_files"][id] = path.string();
    j["rejects"] = json::array();
    for (const auto& r : rejects) j["rejects"].push_back({{"sample", sample_json(r.sample)}, {"reason", r.reason}});
    return j;
}

std::map<std::string, DatabaseSchema> parse_schema_catalog(const json& catalog) {
    if (!catalog.is_array()) throw FormatError("schema catalog must be a JSON array");
    std::map<std::string, DatabaseSchema> out;
    for (const auto& entry : catalog) {
        DatabaseSchema schema;
        try {
            schema.db_id = entry.at("db_id").get<std::string>();
            const auto& table_names = entry.contains("table_names_original") ? entry.at("table_names_original")
                                                                             : entry.at("table_names");
            const auto& column_names = entry.contains("column_names_original") ? entry.at("column_names_original")
                                                                               : entry.at("column_names");
            const auto& column_types = entry.at("column_types");
            if (column_types.size() != column_names.size())
                throw SchemaInconsistency(schema.db_id + ": column_types and column_names differ in length");

            std::set<std::string> seen;
            for (const auto& t : table_names) {
                Table table{t.get<std::string>(), {}};
                if (!seen.insert(util::to_lower(table.name)).second)
                    throw SchemaInconsistency(schema.db_id + ": duplicate table name '" + table.name + "'");
                schema.tables.push_back(std::move(table));
            }

            // Flat column index -> (table, column), skipping the leading "*".
            std::vector<std::optional<ColumnRef>> by_index;
            for (std::size_t i = 0; i < column_names.size(); ++i) {
                const int table_idx = column_names[i].at(0).get<int>();
                const std::string name = column_names[i].at(1).get<std::string>();
                if (table_idx < 0) {
                    by_index.emplace_back();
                    continue;
                }
                if (static_cast<std::size_t>(table_idx) >= schema.tables.size())
                    throw SchemaInconsistency(schema.db_id + ": column '" + name + "' refers to table index " +
                                              std::to_string(table_idx) + " which does not exist");
                auto& table = schema.tables[static_cast<std::size_t>(table_idx)];
                table.columns.push_back({name, column_types[i].get<std::string>()});
                by_index.push_back(ColumnRef{table.name, name});
            }

            auto column_at = [&](const json& idx, const std::string& what) {
                const long i = idx.get<long>();
                if (i < 0 || static_cast<std::size_t>(i) >= by_index.size() || !by_index[static_cast<std::size_t>(i)])
                    throw SchemaInconsistency(schema.db_id + ": " + what + " references unknown column index " +
                                              std::to_string(i));
                return *by_index[static_cast<std::size_t>(i)];
            };

            for (const auto& pk : entry.at("primary_keys")) {
                if (pk.is_array()) {
                    for (const auto& part : pk) schema.primary_keys.push_back(column_at(part, "primary key"));
                } else {
                    schema.primary_keys.push_back(column_at(pk, "primary key"));
                }
            }
            for (const auto& fk : entry.at("foreign_keys")) {
                const std::string label = "foreign key [" + fk.at(0).dump() + ", " + fk.at(1).dump() + "]";
                schema.foreign_keys.push_back({column_at(fk.at(0), label), column_at(fk.at(1), label)});
            }
        } catch (const json::exception& e) {
            throw FormatError("schema catalog entry '" + schema.db_id + "': " + e.what());
        }
        const std::string id = schema.db_id;
        if (!out.emplace(id, std::move(schema)).second)
            throw SchemaInconsistency("schema catalog lists database '" + id + "' twice");
    }
    return out;
}

namespace {

struct Layout {
    fs::path questions;
    fs::path tables;
    fs::path databases;
};

Layout default_layout(const fs::path& root, BenchmarkFormat format, Split split) {
    if (format == BenchmarkFormat::SpiderJson) {
        switch (split) {
            case Split::Train: return {root / "train_spider.json", root / "tables.json", root / "database"};
            case Split::Dev: return {root / "dev.json", root / "tables.json", root / "database"};
            case Split::Test: return {root / "test.json", root / "test_tables.json", root / "test_database"};
        }
    }
    const std::string s = to_string(split);
    return {root / (s + ".json"), root / (s + "_tables.json"), root / (s + "_databases")};
}

std::string string_field(const json& obj, std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
        auto it = obj.find(k);
        if (it != obj.end() && it->is_string()) return it->get<std::string>();
    }
    return {};
}

}  // namespace

Benchmark load_benchmark(const fs::path& root, BenchmarkFormat format, const LoadOptions& options) {
    Layout layout = default_layout(root, format, options.split);
    if (options.questions_file) layout.questions = *options.questions_file;
    if (options.tables_file) layout.tables = *options.tables_file;
    if (options.database_dir) layout.databases = *options.database_dir;
    for (const auto& p : {layout.questions, layout.tables}) {
        if (!fs::is_regular_file(p)) throw MissingFile(p.string());
    }
    if (!fs::is_directory(layout.databases)) throw MissingFile(layout.databases.string());

    Benchmark bm;
    bm.format = format;
    bm.name = options.name ? *options.name
                           : fs::weakly_canonical(root).filename().string() + ":" + to_string(options.split);
    bm.schemas = parse_schema_catalog(util::read_json_file(layout.tables));

    const json questions = util::read_json_file(layout.questions);
    if (!questions.is_array()) throw FormatError(layout.questions.string() + ": expected a JSON array");

    std::size_t total = 0;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        const json& q = questions[i];
        Sample s;
        if (auto it = q.find("question_id"); it != q.end() && !it->is_null())
            s.sample_id = it->is_string() ? it->get<std::string>() : it->dump();
        else
            s.sample_id = std::to_string(i);
        if (!ids.insert(s.sample_id).second)
            throw FormatError(layout.questions.string() + ": duplicate sample id " + s.sample_id);
        s.db_id = string_field(q, {"db_id"});
        s.nl_question = string_field(q, {"question"});
        s.gold_sql = string_field(q, {"query", "SQL", "sql"});
        s.evidence = string_field(q, {"evidence"});
        s.split = options.split;
        if (!bm.schemas.count(s.db_id))
            throw SchemaInconsistency("sample " + s.sample_id + " refers to database '" + s.db_id +
                                      "' missing from the schema catalog");
        ++total;
        try {
            sql::parse_sql(s.gold_sql);
        } catch (const ParseError& e) {
            bm.rejects.push_back({std::move(s), e.what()});
            continue;
        }
        bm.samples.push_back(std::move(s));
    }
    if (total > 0 && static_cast<double>(bm.rejects.size()) > options.max_reject_fraction * static_cast<double>(total)) {
        throw RejectsExceedThreshold(std::to_string(bm.rejects.size()) + " of " + std::to_string(total) +
                                     " gold queries failed to parse (first: sample " +
                                     bm.rejects.front().sample.sample_id + ": " + bm.rejects.front().reason + ")");
    }

    for (const auto& [id, schema] : bm.schemas) bm.database_files[id] = layout.databases / id / (id + ".sqlite");
    if (options.domain_map_file) bm.domain_map = load_domain_map(*options.domain_map_file);
    return bm;
}

namespace {

// Half-up rounding of sum/count to one decimal, in integer arithmetic so
// that e.g. 4.05 is not lost to binary representation.
double mean_1dp(std::int64_t sum, std::int64_t count) {
    if (count == 0) return 0;
    const std::int64_t tenths = (20 * sum + count) / (2 * count);
    return static_cast<double>(tenths) / 10.0;
}

struct Accumulator {
    std::int64_t min = INT64_MAX;
    std::int64_t max = INT64_MIN;
    std::int64_t sum = 0;
    std::int64_t count = 0;

    void add(std::int64_t v) {
        min = std::min(min, v);
        max = std::max(max, v);
        sum += v;
        ++count;
    }

    MinMaxMean result() const {
        if (count == 0) return {};
        return {static_cast<double>(min), static_cast<double>(max), mean_1dp(sum, count)};
    }
};

}  // namespace

SchemaStats schema_stats(const Benchmark& benchmark) {
    Accumulator tables, columns, per_table, pks, fks;
    for (const auto& [id, schema] : benchmark.schemas) {
        tables.add(static_cast<std::int64_t>(schema.tables.size()));
        columns.add(static_cast<std::int64_t>(schema.column_count()));
        for (const auto& t : schema.tables) per_table.add(static_cast<std::int64_t>(t.columns.size()));
        pks.add(static_cast<std::int64_t>(schema.primary_keys.size()));
        fks.add(static_cast<std::int64_t>(schema.foreign_keys.size()));
    }
    SchemaStats s;
    s.tables_per_db = tables.result();
    s.columns_per_db = columns.result();
    s.columns_per_table = per_table.result();
    s.pks_per_db = pks.result();
    s.fks_per_db = fks.result();
    s.database_count = benchmark.schemas.size();
    return s;
}

json SchemaStats::to_json() const {
    auto triple = [](const MinMaxMean& m) { return json{{"min", m.min}, {"max", m.max}, {"avg", m.mean}}; };
    return {{"databases", database_count},
            {"tables_per_db", triple(tables_per_db)},
            {"columns_per_db", triple(columns_per_db)},
            {"columns_per_table", triple(columns_per_table)},
            {"pks_per_db", triple(pks_per_db)},
            {"fks_per_db", triple(fks_per_db)}};
}

std::vector<QvtGroup> group_variants(const Benchmark& benchmark) {
    std::vector<QvtGroup> groups;
    std::unordered_map<std::string, std::size_t> index;
    metrics::CanonicalOptions keep{true};
    for (const auto& s : benchmark.samples) {
        const sql::SqlAst ast = sql::parse_sql(s.gold_sql);
        const std::string key = s.db_id + '\n' + metrics::canonical_form(ast, keep);
        auto [it, inserted] = index.emplace(key, groups.size());
        if (inserted) {
            QvtGroup g;
            const std::string n = std::to_string(groups.size());
            g.group_id = "g" + std::string(n.size() < 4 ? 4 - n.size() : 0, '0') + n;
            g.db_id = s.db_id;
            g.canonical_gold = sql::render_sql(ast);
            groups.push_back(std::move(g));
        }
        groups[it->second].variants.push_back(s);
    }
    return groups;
}

std::map<std::string, std::string> load_domain_map(const fs::path& path) {
    const auto rows = util::parse_csv(util::read_text_file(path));
    if (rows.empty() || util::to_lower(util::trim(rows[0][0])) != "db_id")
        throw FormatError(path.string() + ": domain map needs a header row starting with db_id");
    std::map<std::string, std::string> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 2)
            throw FormatError(path.string() + ": line " + std::to_string(i + 1) + " must have 2 fields");
        const std::string db = util::trim(rows[i][0]);
        if (!out.emplace(db, util::trim(rows[i][1])).second)
            throw DuplicateDbId(path.string() + ": db_id '" + db + "' listed more than once");
    }
    return out;
}

}  // namespace nl2sql360
