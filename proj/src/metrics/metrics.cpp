#include "nl2sql360/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nl2sql360/error.hpp"
#include "nl2sql360/util/files.hpp"
#include "nl2sql360/util/strings.hpp"

namespace nl2sql360 {

std::string to_display(const Value& v) {
    struct Visitor {
        std::string operator()(std::monostate) const { return "NULL"; }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(double d) const { return util::format_double(d, 15); }
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(const BlobHash& b) const { return "blob:" + b.hex; }
    };
    return std::visit(Visitor{}, v);
}

namespace metrics {

namespace {

// Reals holding an exact integer compare as that integer.
Value normalize(const Value& v) {
    if (const double* d = std::get_if<double>(&v)) {
        if (std::isfinite(*d) && std::trunc(*d) == *d && std::fabs(*d) < 9.2e18)
            return static_cast<std::int64_t>(*d);
    }
    return v;
}

std::vector<std::vector<Value>> normalized_rows(const ResultTable& t) {
    std::vector<std::vector<Value>> rows;
    rows.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        std::vector<Value> r;
        r.reserve(row.size());
        for (const auto& v : row) r.push_back(normalize(v));
        rows.push_back(std::move(r));
    }
    return rows;
}

struct ValueLess {
    bool operator()(const Value& a, const Value& b) const {
        if (a.index() != b.index()) return a.index() < b.index();
        switch (a.index()) {
            case 0: return false;
            case 1: return std::get<1>(a) < std::get<1>(b);
            case 2: return std::get<2>(a) < std::get<2>(b);
            case 3: return std::get<3>(a) < std::get<3>(b);
            default: return std::get<4>(a).hex < std::get<4>(b).hex;
        }
    }
};

struct RowLess {
    bool operator()(const std::vector<Value>& a, const std::vector<Value>& b) const {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), ValueLess{});
    }
};

}  // namespace

bool compare_results(const ResultTable& gold, const ResultTable& pred, bool order_sensitive) {
    if (gold.column_count != pred.column_count) return false;
    if (gold.rows.size() != pred.rows.size()) return false;
    auto g = normalized_rows(gold);
    auto p = normalized_rows(pred);
    if (!order_sensitive) {
        std::sort(g.begin(), g.end(), RowLess{});
        std::sort(p.begin(), p.end(), RowLess{});
    }
    return g == p;
}

bool order_sensitive_for(const sql::SqlAst& gold) {
    // ORDER BY of a compound query is attached to its last operand.
    const sql::Query* q = &gold;
    while (q->rhs) q = q->rhs.get();
    return !q->order_by.empty() || !gold.order_by.empty();
}

std::string to_string(VesAggregator a) { return a == VesAggregator::SqrtRatio ? "sqrt" : "plain"; }

std::string to_string(QvtIndicator q) { return q == QvtIndicator::Execution ? "execution" : "exact_match"; }

VesAggregator ves_aggregator_from_string(const std::string& s) {
    const std::string v = util::to_lower(s);
    if (v == "sqrt" || v == "sqrt_ratio") return VesAggregator::SqrtRatio;
    if (v == "plain" || v == "plain_ratio") return VesAggregator::PlainRatio;
    throw FormatError("unknown VES aggregator '" + s + "'");
}

QvtIndicator qvt_indicator_from_string(const std::string& s) {
    const std::string v = util::to_lower(s);
    if (v == "execution" || v == "exec" || v == "ex") return QvtIndicator::Execution;
    if (v == "exact_match" || v == "em") return QvtIndicator::ExactMatch;
    throw FormatError("unknown QVT indicator '" + s + "'");
}

double compute_ex(const std::vector<EvalOutcome>& outcomes) {
    if (outcomes.empty()) throw EmptySubset();
    std::size_t hits = 0;
    for (const auto& o : outcomes) hits += o.exec_correct ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

double compute_em(const std::vector<EvalOutcome>& outcomes) {
    if (outcomes.empty()) throw EmptySubset();
    std::size_t hits = 0;
    for (const auto& o : outcomes) hits += o.exact_match ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

double ves_reward(double t_gold, double t_pred, VesAggregator aggregator) {
    const double r = t_gold / t_pred;
    return aggregator == VesAggregator::SqrtRatio ? std::sqrt(r) : r;
}

double ves_fraction(const std::vector<EvalOutcome>& outcomes, VesAggregator aggregator) {
    if (outcomes.empty()) throw EmptySubset();
    double total = 0;
    for (const auto& o : outcomes) {
        if (!o.exec_correct) continue;
        if (!o.t_pred || !(*o.t_pred > 0) || !(o.t_gold > 0))
            throw MissingTiming("sample " + o.sample_id + " is correct but has no usable timings");
        total += ves_reward(o.t_gold, *o.t_pred, aggregator);
    }
    return total / static_cast<double>(outcomes.size());
}

double compute_ves(const std::vector<EvalOutcome>& outcomes, VesAggregator aggregator) {
    return 100.0 * ves_fraction(outcomes, aggregator);
}

std::optional<double> compute_qvt(const std::vector<QvtGroup>& groups,
                                  const std::map<std::string, EvalOutcome>& outcomes, QvtIndicator indicator) {
    double sum = 0;
    std::size_t included = 0;
    for (const auto& g : groups) {
        std::size_t correct = 0;
        for (const auto& v : g.variants) {
            auto it = outcomes.find(v.sample_id);
            if (it == outcomes.end())
                throw MissingOutcome("no outcome for sample " + v.sample_id + " in group " + g.group_id);
            const bool hit = indicator == QvtIndicator::Execution ? it->second.exec_correct : it->second.exact_match;
            correct += hit ? 1 : 0;
        }
        if (correct == 0 || g.variants.empty()) continue;
        sum += static_cast<double>(correct) / static_cast<double>(g.variants.size());
        ++included;
    }
    if (included == 0) return std::nullopt;
    return sum / static_cast<double>(included);
}

double average_latency(const std::vector<EvalOutcome>& outcomes) {
    if (outcomes.empty()) throw EmptySubset();
    double total = 0;
    for (const auto& o : outcomes) total += o.wall_latency;
    return total / static_cast<double>(outcomes.size());
}

PriceTable::PriceTable(std::map<std::string, ModelPrice> prices) : prices_(std::move(prices)) {
    for (const auto& [label, p] : prices_) {
        if (!(p.input_per_token >= 0) || !(p.output_per_token >= 0))
            throw FormatError("negative price for model '" + label + "'");
    }
}

PriceTable PriceTable::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("price table must be a JSON object");
    std::map<std::string, ModelPrice> prices;
    for (const auto& [label, entry] : j.items()) {
        try {
            prices[label] = {entry.at("input").get<double>(), entry.at("output").get<double>()};
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("price table entry '" + label + "': " + e.what());
        }
    }
    return PriceTable(std::move(prices));
}

PriceTable PriceTable::load(const std::filesystem::path& path) { return from_json(util::read_json_file(path)); }

const ModelPrice& PriceTable::at(const std::string& label) const {
    auto it = prices_.find(label);
    if (it == prices_.end()) throw UnknownModelLabel("no prices for model '" + label + "'");
    return it->second;
}

CostSummary compute_cost(const std::vector<EvalOutcome>& outcomes, const PriceTable& prices,
                         const std::string& model_label) {
    const ModelPrice& price = prices.at(model_label);
    if (outcomes.empty()) throw EmptySubset();
    double tokens = 0;
    double cost = 0;
    for (const auto& o : outcomes) {
        if (!o.tokens_in || !o.tokens_out)
            throw MissingOutcome("no token counts for sample " + o.sample_id);
        const auto in = static_cast<double>(*o.tokens_in);
        const auto out = static_cast<double>(*o.tokens_out);
        tokens += in + out;
        cost += in * price.input_per_token + out * price.output_per_token;
    }
    const auto n = static_cast<double>(outcomes.size());
    return {tokens / n, cost / n};
}

std::optional<double> ex_per_cost(double ex_percent, double avg_cost) {
    if (!(avg_cost > 0)) return std::nullopt;
    return ex_percent / avg_cost;
}

nlohmann::json MetricOptions::to_json() const {
    return {{"ves_aggregator", metrics::to_string(ves)},
            {"qvt_indicator", metrics::to_string(qvt)},
            {"em_ignores_values", true},
            {"model_label", model_label}};
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json MetricReport::to_json() const {
    return {{"n", n},
            {"ex", ex},
            {"em", em},
            {"ves", ves},
            {"qvt", opt(qvt)},
            {"avg_latency", avg_latency},
            {"avg_tokens", opt(avg_tokens)},
            {"avg_cost", opt(avg_cost)},
            {"ex_per_cost", opt(ex_per_cost)}};
}

MetricReport evaluate(const std::vector<EvalOutcome>& outcomes, const std::vector<QvtGroup>& groups,
                      const MetricOptions& options) {
    MetricReport r;
    r.n = outcomes.size();
    r.ex = compute_ex(outcomes);
    r.em = compute_em(outcomes);
    r.ves = compute_ves(outcomes, options.ves);
    r.avg_latency = average_latency(outcomes);

    std::map<std::string, EvalOutcome> by_id;
    for (const auto& o : outcomes) by_id.emplace(o.sample_id, o);
    std::vector<QvtGroup> present;
    for (const auto& g : groups) {
        QvtGroup kept = g;
        kept.variants.clear();
        for (const auto& v : g.variants)
            if (by_id.count(v.sample_id)) kept.variants.push_back(v);
        if (kept.qvt_eligible()) present.push_back(std::move(kept));
    }
    r.qvt = compute_qvt(present, by_id, options.qvt);

    const bool have_tokens = std::all_of(outcomes.begin(), outcomes.end(),
                                         [](const EvalOutcome& o) { return o.tokens_in && o.tokens_out; });
    if (options.prices && have_tokens) {
        const CostSummary c = compute_cost(outcomes, *options.prices, options.model_label);
        r.avg_tokens = c.avg_tokens;
        r.avg_cost = c.avg_cost;
        r.ex_per_cost = metrics::ex_per_cost(100.0 * r.ex, c.avg_cost);
    }
    return r;
}

}  // namespace metrics
}  // namespace nl2sql360
