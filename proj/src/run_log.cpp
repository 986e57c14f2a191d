#include "nl2sql360/run_log.hpp"

#include "nl2sql360/error.hpp"
#include "nl2sql360/util/files.hpp"

namespace nl2sql360 {

using nlohmann::json;

namespace {

template <typename T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

}  // namespace

json to_json(const EvalOutcome& o) {
    return {{"type", "outcome"},
            {"sample_id", o.sample_id},
            {"predicted_sql", o.predicted_sql},
            {"pred_parse_ok", o.pred_parse_ok},
            {"pred_exec_ok", o.pred_exec_ok},
            {"exec_correct", o.exec_correct},
            {"exact_match", o.exact_match},
            {"t_gold", o.t_gold},
            {"t_pred", optional_json(o.t_pred)},
            {"wall_latency", o.wall_latency},
            {"tokens_in", optional_json(o.tokens_in)},
            {"tokens_out", optional_json(o.tokens_out)},
            {"error", o.error}};
}

EvalOutcome outcome_from_json(const json& j) {
    EvalOutcome o;
    try {
        o.sample_id = j.at("sample_id").get<std::string>();
        o.predicted_sql = j.value("predicted_sql", "");
        o.pred_parse_ok = j.at("pred_parse_ok").get<bool>();
        o.pred_exec_ok = j.at("pred_exec_ok").get<bool>();
        o.exec_correct = j.at("exec_correct").get<bool>();
        o.exact_match = j.at("exact_match").get<bool>();
        o.t_gold = j.value("t_gold", 0.0);
        o.t_pred = optional_from<double>(j, "t_pred");
        o.wall_latency = j.value("wall_latency", 0.0);
        o.tokens_in = optional_from<std::int64_t>(j, "tokens_in");
        o.tokens_out = optional_from<std::int64_t>(j, "tokens_out");
        o.error = j.value("error", "");
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed outcome record: ") + e.what());
    }
    return o;
}

void ExecutionConfig::validate() const {
    if (!(timeout_s > 0)) throw FormatError("timeout must be positive");
    if (timing_repeats < 1) throw FormatError("timing repeats must be at least 1");
    if (parallel_workers < 1) throw FormatError("worker count must be at least 1");
    if (timing_aggregator != "median") throw FormatError("unsupported timing aggregator '" + timing_aggregator + "'");
    if (order_sensitive_compare != "auto")
        throw FormatError("unsupported compare mode '" + order_sensitive_compare + "'");
}

json to_json(const ExecutionConfig& c) {
    return {{"timeout_s", c.timeout_s},
            {"timing_repeats", c.timing_repeats},
            {"timing_aggregator", c.timing_aggregator},
            {"parallel_workers", c.parallel_workers},
            {"order_sensitive_compare", c.order_sensitive_compare}};
}

ExecutionConfig config_from_json(const json& j) {
    ExecutionConfig c;
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.timing_repeats = j.value("timing_repeats", c.timing_repeats);
    c.timing_aggregator = j.value("timing_aggregator", c.timing_aggregator);
    c.parallel_workers = j.value("parallel_workers", c.parallel_workers);
    c.order_sensitive_compare = j.value("order_sensitive_compare", c.order_sensitive_compare);
    return c;
}

json RunLog::header_json() const {
    return {{"type", "header"},
            {"run_id", run_id},
            {"system_name", system_name},
            {"benchmark", benchmark},
            {"subset_name", subset_name},
            {"subset_spec_hash", subset_spec_hash},
            {"config", to_json(config)},
            {"created_at", created_at},
            {"metadata", metadata},
            {"gold_failure_policy", "exclude"}};
}

const EvalOutcome* RunLog::find(const std::string& sample_id) const {
    for (const auto& o : outcomes)
        if (o.sample_id == sample_id) return &o;
    return nullptr;
}

RunLog read_run_log(const std::filesystem::path& path) {
    const std::string text = util::read_text_file(path);
    RunLog log;
    bool have_header = false;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) break;  // interrupted write
        const std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        const std::string type = j.value("type", "");
        if (type == "header") {
            log.run_id = j.value("run_id", "");
            log.system_name = j.value("system_name", "");
            log.benchmark = j.value("benchmark", "");
            log.subset_name = j.value("subset_name", "");
            log.subset_spec_hash = j.value("subset_spec_hash", "");
            log.config = config_from_json(j.value("config", json::object()));
            log.created_at = j.value("created_at", "");
            log.metadata = j.value("metadata", json::object());
            have_header = true;
        } else if (type == "outcome") {
            log.outcomes.push_back(outcome_from_json(j));
        } else if (type == "excluded") {
            log.excluded.push_back({j.value("sample_id", ""), j.value("reason", "")});
        } else {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": unknown record type '" + type + "'");
        }
    }
    if (!have_header) throw FormatError(path.string() + ": run log has no header line");
    return log;
}

RunLogWriter::RunLogWriter(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (std::filesystem::exists(path)) {
        const std::string text = util::read_text_file(path);
        const std::size_t last = text.rfind('\n');
        const std::size_t keep = last == std::string::npos ? 0 : last + 1;
        if (keep != text.size()) std::filesystem::resize_file(path, keep);
    }
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw Error("cannot open run log " + path.string());
}

void RunLogWriter::write_header(const RunLog& log) { write_line(log.header_json()); }

void RunLogWriter::append(const EvalOutcome& outcome) { write_line(to_json(outcome)); }

void RunLogWriter::append(const ExcludedSample& excluded) {
    write_line({{"type", "excluded"}, {"sample_id", excluded.sample_id}, {"reason", excluded.reason}});
}

void RunLogWriter::write_line(const json& j) {
    std::lock_guard lock(mutex_);
    out_ << j.dump() << '\n';
    out_.flush();
}

}  // namespace nl2sql360
