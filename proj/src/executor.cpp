#include "nl2sql360/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <exception>
#include <mutex>
#include <shared_mutex>
#include <thread>
#include <set>
#include <variant>

#include <sqlite3.h>

#include "nl2sql360/metrics.hpp"
#include "nl2sql360/sql/parser.hpp"
#include "nl2sql360/util/files.hpp"
#include "nl2sql360/util/strings.hpp"

namespace nl2sql360 {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string to_string(ExecErrorKind k) {
    switch (k) {
        case ExecErrorKind::Syntax: return "syntax error";
        case ExecErrorKind::Runtime: return "runtime error";
        case ExecErrorKind::Timeout: return "timeout";
        case ExecErrorKind::RejectedWrite: return "rejected write";
    }
    return "error";
}

namespace {

// Correctness runs share the lane; timing runs take it alone.
std::shared_mutex& timing_lane() {
    static std::shared_mutex m;
    return m;
}

struct Connection {
    sqlite3* db = nullptr;
    ~Connection() { sqlite3_close_v2(db); }
};

struct Statement {
    sqlite3_stmt* stmt = nullptr;
    ~Statement() { sqlite3_finalize(stmt); }
};

int progress_check(void* arg) {
    const auto* deadline = static_cast<const Clock::time_point*>(arg);
    return Clock::now() >= *deadline ? 1 : 0;
}

bool only_whitespace_or_semicolons(const char* p) {
    for (; p && *p; ++p)
        if (!std::isspace(static_cast<unsigned char>(*p)) && *p != ';') return false;
    return true;
}

ResultTable execute_unlocked(const fs::path& db_path, std::string_view sql, double timeout_s) {
    std::error_code ec;
    if (!fs::is_regular_file(db_path, ec)) throw DatabaseMissing("database file not found: " + db_path.string());

    Connection conn;
    if (sqlite3_open_v2(db_path.c_str(), &conn.db, SQLITE_OPEN_READONLY | SQLITE_OPEN_NOMUTEX, nullptr) != SQLITE_OK)
        throw DatabaseMissing("cannot open database " + db_path.string() + ": " +
                              (conn.db ? sqlite3_errmsg(conn.db) : "out of memory"));
    sqlite3_exec(conn.db, "PRAGMA query_only = 1", nullptr, nullptr, nullptr);

    const std::string text(sql);
    Statement st;
    const char* tail = nullptr;
    if (sqlite3_prepare_v2(conn.db, text.c_str(), static_cast<int>(text.size()), &st.stmt, &tail) != SQLITE_OK)
        throw ExecError(ExecErrorKind::Syntax, sqlite3_errmsg(conn.db));
    if (!st.stmt) throw ExecError(ExecErrorKind::Syntax, "empty statement");
    if (!only_whitespace_or_semicolons(tail)) throw ExecError(ExecErrorKind::Syntax, "more than one statement");
    if (!sqlite3_stmt_readonly(st.stmt)) throw ExecError(ExecErrorKind::RejectedWrite, "statement modifies the database");

    const auto deadline =
        Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(timeout_s));
    sqlite3_progress_handler(conn.db, 1000, progress_check, const_cast<Clock::time_point*>(&deadline));

    ResultTable out;
    out.column_count = static_cast<std::size_t>(sqlite3_column_count(st.stmt));
    for (;;) {
        const int rc = sqlite3_step(st.stmt);
        if (rc == SQLITE_DONE) break;
        if (rc == SQLITE_INTERRUPT)
            throw ExecError(ExecErrorKind::Timeout, "exceeded " + util::format_double(timeout_s, 6) + " s");
        if (rc != SQLITE_ROW) throw ExecError(ExecErrorKind::Runtime, sqlite3_errmsg(conn.db));
        std::vector<Value> row;
        row.reserve(out.column_count);
        for (int c = 0; c < static_cast<int>(out.column_count); ++c) {
            switch (sqlite3_column_type(st.stmt, c)) {
                case SQLITE_NULL: row.emplace_back(std::monostate{}); break;
                case SQLITE_INTEGER: row.emplace_back(static_cast<std::int64_t>(sqlite3_column_int64(st.stmt, c))); break;
                case SQLITE_FLOAT: row.emplace_back(sqlite3_column_double(st.stmt, c)); break;
                case SQLITE_TEXT: {
                    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(st.stmt, c));
                    row.emplace_back(std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(st.stmt, c))));
                    break;
                }
                default: {
                    const auto* p = static_cast<const char*>(sqlite3_column_blob(st.stmt, c));
                    const auto n = static_cast<std::size_t>(sqlite3_column_bytes(st.stmt, c));
                    row.emplace_back(BlobHash{util::hex64(util::fnv1a64(std::string_view(p ? p : "", n)))});
                }
            }
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace

ResultTable execute_query(const fs::path& db_path, std::string_view sql, double timeout_s) {
    std::shared_lock lock(timing_lane());
    return execute_unlocked(db_path, sql, timeout_s);
}

double time_query(const fs::path& db_path, std::string_view sql, int repeats, double timeout_s) {
    if (repeats < 1) throw FormatError("timing repeats must be >= 1");
    std::unique_lock lock(timing_lane());
    execute_unlocked(db_path, sql, timeout_s);
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(repeats));
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = Clock::now();
        execute_unlocked(db_path, sql, timeout_s);
        samples.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
    }
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    const double median = n % 2 ? samples[n / 2] : (samples[n / 2 - 1] + samples[n / 2]) / 2;
    return std::max(median, 1e-9);
}

std::map<std::string, TokenCounts> load_token_log(const fs::path& path) {
    const json j = util::read_json_file(path);
    if (!j.is_object()) throw FormatError(path.string() + ": token log must be a JSON object");
    std::map<std::string, TokenCounts> out;
    try {
        for (const auto& [id, v] : j.items())
            out[id] = {v.at("tokens_in").get<std::int64_t>(), v.at("tokens_out").get<std::int64_t>()};
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return out;
}

// --- prediction files --------------------------------------------------------

PredictionFileAdapter::PredictionFileAdapter(const fs::path& path, const Benchmark& benchmark, Options options)
    : options_(std::move(options)) {
    const std::string text = util::read_text_file(path);
    if (util::trim(text).rfind('{', 0) == 0) {
        json j;
        try {
            j = json::parse(text);
            for (const auto& [id, v] : j.items())
                predictions_[id] = v.is_string() ? v.get<std::string>() : v.at("sql").get<std::string>();
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ": " + e.what());
        }
    } else {
        auto lines = util::split(text, '\n');
        if (!lines.empty() && lines.back().empty()) lines.pop_back();
        if (lines.size() != benchmark.samples.size())
            throw FormatError(path.string() + ": " + std::to_string(lines.size()) + " predictions for " +
                              std::to_string(benchmark.samples.size()) + " samples");
        for (std::size_t i = 0; i < lines.size(); ++i) {
            std::string line = lines[i];
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (const auto tab = line.rfind('\t'); tab != std::string::npos) line.erase(tab);
            predictions_[benchmark.samples[i].sample_id] = line;
        }
    }
    if (options_.token_log) tokens_ = load_token_log(*options_.token_log);
}

PredictionFileAdapter::PredictionFileAdapter(std::map<std::string, std::string> predictions, Options options)
    : predictions_(std::move(predictions)), options_(std::move(options)) {
    if (options_.token_log) tokens_ = load_token_log(*options_.token_log);
}

json PredictionFileAdapter::metadata() const {
    return {{"kind", "prediction_file"}, {"backbone", options_.backbone}};
}

AdapterResponse PredictionFileAdapter::predict(const AdapterRequest& request) {
    const auto it = predictions_.find(request.sample->sample_id);
    if (it == predictions_.end())
        throw AdapterProtocolError("no prediction for sample " + request.sample->sample_id);
    AdapterResponse r;
    r.sql = it->second;
    r.wall_latency = 0.0;
    if (const auto t = tokens_.find(request.sample->sample_id); t != tokens_.end()) {
        r.tokens_in = t->second.tokens_in;
        r.tokens_out = t->second.tokens_out;
    }
    return r;
}

// --- external commands -------------------------------------------------------

std::vector<std::string> split_command_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool have = false;
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quote) {
            if (c == quote) {
                quote = 0;
            } else if (c == '\\' && quote == '"' && i + 1 < line.size()) {
                cur += line[++i];
            } else {
                cur += c;
            }
        } else if (c == '\'' || c == '"') {
            quote = c;
            have = true;
        } else if (c == '\\' && i + 1 < line.size()) {
            cur += line[++i];
            have = true;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            if (have) out.push_back(std::move(cur));
            cur.clear();
            have = false;
        } else {
            cur += c;
            have = true;
        }
    }
    if (quote) throw FormatError("unterminated quote in command line");
    if (have) out.push_back(std::move(cur));
    return out;
}

CommandAdapter::CommandAdapter(std::vector<std::string> argv, Options options)
    : argv_(std::move(argv)), options_(std::move(options)) {
    if (argv_.empty()) throw FormatError("command adapter needs a program");
    // A child that exits without reading its input must not kill us.
    ::signal(SIGPIPE, SIG_IGN);
}

json CommandAdapter::metadata() const {
    return {{"kind", "command"},
            {"backbone", options_.backbone},
            {"command", argv_},
            {"deterministic", options_.deterministic}};
}

namespace {

struct ChildResult {
    int status = 0;
    bool timed_out = false;
    std::string out;
    std::string err;
};

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

ChildResult run_child(const std::vector<std::string>& argv, const std::vector<std::string>& env,
                      const std::string& input, double timeout_s) {
    int in_pipe[2], out_pipe[2], err_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) || ::pipe2(out_pipe, O_CLOEXEC) || ::pipe2(err_pipe, O_CLOEXEC))
        throw AdapterProtocolError(std::string("pipe: ") + std::strerror(errno));

    std::vector<char*> cargv, cenv;
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    for (const auto& e : env) cenv.push_back(const_cast<char*>(e.c_str()));
    cenv.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) throw AdapterProtocolError(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        ::dup2(in_pipe[0], 0);
        ::dup2(out_pipe[1], 1);
        ::dup2(err_pipe[1], 2);
        ::execvpe(cargv[0], cargv.data(), cenv.data());
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    int in_fd = in_pipe[1];
    set_nonblocking(in_fd);
    set_nonblocking(out_pipe[0]);
    set_nonblocking(err_pipe[0]);

    ChildResult r;
    std::size_t written = 0;
    if (input.empty()) {
        ::close(in_fd);
        in_fd = -1;
    }
    const auto deadline =
        Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(timeout_s));
    bool out_open = true, err_open = true;
    char buf[4096];
    while (out_open || err_open) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
        if (left <= 0) {
            r.timed_out = true;
            break;
        }
        pollfd fds[3];
        int n = 0;
        int out_i = -1, err_i = -1, in_i = -1;
        if (out_open) fds[out_i = n++] = {out_pipe[0], POLLIN, 0};
        if (err_open) fds[err_i = n++] = {err_pipe[0], POLLIN, 0};
        if (in_fd >= 0) fds[in_i = n++] = {in_fd, POLLOUT, 0};
        if (::poll(fds, static_cast<nfds_t>(n), static_cast<int>(std::min<long long>(left, 100))) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        auto drain = [&](int idx, int fd, std::string& dst, bool& open) {
            if (idx < 0 || !(fds[idx].revents & (POLLIN | POLLHUP | POLLERR))) return;
            const ssize_t k = ::read(fd, buf, sizeof buf);
            if (k > 0) {
                dst.append(buf, static_cast<std::size_t>(k));
            } else if (k == 0 || (errno != EAGAIN && errno != EINTR)) {
                open = false;
            }
        };
        drain(out_i, out_pipe[0], r.out, out_open);
        drain(err_i, err_pipe[0], r.err, err_open);
        if (in_i >= 0 && (fds[in_i].revents & (POLLOUT | POLLERR | POLLHUP))) {
            const ssize_t k = ::write(in_fd, input.data() + written, input.size() - written);
            if (k > 0) written += static_cast<std::size_t>(k);
            if (k < 0 && errno != EAGAIN && errno != EINTR) written = input.size();
            if (written >= input.size()) {
                ::close(in_fd);
                in_fd = -1;
            }
        }
    }
    if (in_fd >= 0) ::close(in_fd);
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);
    if (r.timed_out) ::kill(pid, SIGKILL);
    while (::waitpid(pid, &r.status, 0) < 0 && errno == EINTR) {
    }
    return r;
}

std::string substitute(std::string arg, const AdapterRequest& req) {
    arg = util::replace_all(std::move(arg), "{db_id}", req.sample->db_id);
    arg = util::replace_all(std::move(arg), "{db_path}", req.db_path.string());
    return util::replace_all(std::move(arg), "{sample_id}", req.sample->sample_id);
}

}  // namespace

AdapterResponse CommandAdapter::predict(const AdapterRequest& request) {
    std::vector<std::string> argv;
    for (const auto& a : argv_) argv.push_back(substitute(a, request));

    std::vector<std::string> env;
    for (char** e = environ; e && *e; ++e)
        if (std::strncmp(*e, "NL2SQL360_DB_PATH=", 18) != 0) env.emplace_back(*e);
    env.push_back("NL2SQL360_DB_PATH=" + request.db_path.string());

    json input = {{"sample_id", request.sample->sample_id},
                  {"db_id", request.sample->db_id},
                  {"nl_question", request.sample->nl_question},
                  {"evidence", request.sample->evidence}};
    input["schema"] = request.schema ? to_json(*request.schema) : json(nullptr);

    const auto t0 = Clock::now();
    const ChildResult r = run_child(argv, env, input.dump() + "\n", options_.timeout_s);
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();

    if (r.timed_out)
        throw AdapterProtocolError("command timed out after " + util::format_double(options_.timeout_s, 6) + " s");
    if (!WIFEXITED(r.status) || WEXITSTATUS(r.status) != 0) {
        const std::string why = WIFEXITED(r.status) ? "exit status " + std::to_string(WEXITSTATUS(r.status))
                                                    : "signal " + std::to_string(WTERMSIG(r.status));
        throw AdapterProtocolError("command failed (" + why + "): " + util::trim(r.err));
    }

    AdapterResponse resp;
    resp.wall_latency = elapsed;
    const std::string out = util::trim(r.out);
    if (!out.empty() && out.front() == '{') {
        try {
            const json j = json::parse(out);
            resp.sql = j.at("sql").get<std::string>();
            if (j.contains("tokens_in")) resp.tokens_in = j.at("tokens_in").get<std::int64_t>();
            if (j.contains("tokens_out")) resp.tokens_out = j.at("tokens_out").get<std::int64_t>();
        } catch (const json::exception& e) {
            throw AdapterProtocolError(std::string("malformed JSON reply: ") + e.what());
        }
    } else {
        resp.sql = out;
    }
    return resp;
}

// --- run loop ----------------------------------------------------------------

std::string default_run_id(const std::string& system_name, const Benchmark& benchmark, const Subset& subset,
                           const ExecutionConfig& config, const json& metadata) {
    const json key = {{"system", system_name},  {"benchmark", benchmark.name}, {"subset", subset.name},
                      {"spec", subset.spec.hash()}, {"samples", subset.sample_ids}, {"config", to_json(config)},
                      {"metadata", metadata}};
    return util::to_lower(system_name.empty() ? "run" : util::replace_all(system_name, " ", "_")) + "-" +
           util::hex64(util::fnv1a64(key.dump()));
}

namespace {

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    ::gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

using SampleResult = std::variant<EvalOutcome, ExcludedSample>;

SampleResult evaluate_sample(SystemAdapter& adapter, const Sample& sample, const Benchmark& benchmark,
                             const ExecutionConfig& config) {
    const fs::path& db = benchmark.database_files.at(sample.db_id);

    ResultTable gold;
    double t_gold = 0;
    try {
        gold = execute_query(db, sample.gold_sql, config.timeout_s);
        t_gold = time_query(db, sample.gold_sql, config.timing_repeats, config.timeout_s);
    } catch (const Error& e) {
        return ExcludedSample{sample.sample_id, std::string("gold query failed: ") + e.what()};
    }

    EvalOutcome o;
    o.sample_id = sample.sample_id;
    o.t_gold = t_gold;

    AdapterRequest req;
    req.sample = &sample;
    const auto schema = benchmark.schemas.find(sample.db_id);
    req.schema = schema == benchmark.schemas.end() ? nullptr : &schema->second;
    req.db_path = db;

    AdapterResponse resp;
    const auto t0 = Clock::now();
    try {
        resp = adapter.predict(req);
    } catch (const std::exception& e) {
        o.wall_latency = std::chrono::duration<double>(Clock::now() - t0).count();
        o.error = std::string("adapter: ") + e.what();
        return o;
    }
    o.wall_latency = resp.wall_latency.value_or(std::chrono::duration<double>(Clock::now() - t0).count());
    o.predicted_sql = resp.sql;
    o.tokens_in = resp.tokens_in;
    o.tokens_out = resp.tokens_out;

    try {
        sql::parse_sql(o.predicted_sql);
        o.pred_parse_ok = true;
    } catch (const Error&) {
        o.pred_parse_ok = false;
    }
    o.exact_match = metrics::exact_match(sample.gold_sql, o.predicted_sql);

    bool ordered = false;
    try {
        ordered = metrics::order_sensitive_for(sql::parse_sql(sample.gold_sql));
    } catch (const Error&) {
    }

    try {
        const ResultTable pred = execute_query(db, o.predicted_sql, config.timeout_s);
        o.pred_exec_ok = true;
        o.exec_correct = metrics::compare_results(gold, pred, ordered);
        // Identical text runs the identical plan; reuse the gold measurement.
        o.t_pred = o.predicted_sql == sample.gold_sql
                       ? t_gold
                       : time_query(db, o.predicted_sql, config.timing_repeats, config.timeout_s);
    } catch (const Error& e) {
        o.pred_exec_ok = false;
        o.exec_correct = false;
        o.t_pred.reset();
        o.error = e.what();
    }
    return o;
}

}  // namespace

RunLog run_system(SystemAdapter& adapter, const Benchmark& benchmark, const Subset& subset,
                  const ExecutionConfig& config, const RunOptions& options) {
    config.validate();

    std::vector<const Sample*> samples;
    for (const auto& id : subset.sample_ids) {
        const Sample* s = benchmark.find(id);
        if (!s) throw Error("subset sample " + id + " is not in benchmark " + benchmark.name);
        const auto db = benchmark.database_files.find(s->db_id);
        std::error_code ec;
        if (db == benchmark.database_files.end() || !fs::is_regular_file(db->second, ec))
            throw DatabaseMissing("no database file for " + s->db_id +
                                  (db == benchmark.database_files.end() ? "" : " at " + db->second.string()));
        samples.push_back(s);
    }

    RunLog header;
    header.system_name = adapter.system_name();
    header.metadata = adapter.metadata();
    header.benchmark = benchmark.name;
    header.subset_name = subset.name;
    header.subset_spec_hash = subset.spec.hash();
    header.config = config;
    header.run_id = options.run_id.value_or(
        default_run_id(header.system_name, benchmark, subset, config, header.metadata));

    std::set<std::string> done;
    bool have_header = false;
    std::error_code ec;
    if (fs::exists(options.log_path, ec) && fs::file_size(options.log_path, ec) > 0) {
        const RunLog existing = read_run_log(options.log_path);
        if (existing.run_id != header.run_id)
            throw ConfigMismatch(options.log_path.string() + " holds run " + existing.run_id + ", not " +
                                 header.run_id);
        for (const auto& o : existing.outcomes) done.insert(o.sample_id);
        for (const auto& x : existing.excluded) done.insert(x.sample_id);
        have_header = true;
    }

    RunLogWriter writer(options.log_path);
    if (!have_header) {
        header.created_at = utc_now();
        writer.write_header(header);
    }

    std::vector<const Sample*> todo;
    for (const Sample* s : samples)
        if (!done.count(s->sample_id)) todo.push_back(s);

    // Workers finish out of order; results are committed in subset order.
    std::vector<std::optional<SampleResult>> results(todo.size());
    std::size_t commit_cursor = 0;
    std::mutex commit_mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr failure;

    auto worker = [&] {
        while (!stop) {
            const std::size_t i = next++;
            if (i >= todo.size()) return;
            try {
                SampleResult r = evaluate_sample(adapter, *todo[i], benchmark, config);
                std::lock_guard lock(commit_mutex);
                results[i] = std::move(r);
                while (commit_cursor < results.size() && results[commit_cursor]) {
                    std::visit([&](const auto& v) { writer.append(v); }, *results[commit_cursor]);
                    results[commit_cursor].reset();
                    ++commit_cursor;
                }
            } catch (...) {
                std::lock_guard lock(commit_mutex);
                if (!failure) failure = std::current_exception();
                stop = true;
            }
        }
    };

    const int n_workers = std::max(1, std::min<int>(config.parallel_workers, static_cast<int>(todo.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    return read_run_log(options.log_path);
}

}  // namespace nl2sql360
