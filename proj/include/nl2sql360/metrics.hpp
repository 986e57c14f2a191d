#pragma once

/// @file metrics.hpp
/// @brief EX, EM, VES, QVT, latency and cost over evaluation outcomes.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2sql360/benchmark.hpp"
#include "nl2sql360/metrics/exact_match.hpp"
#include "nl2sql360/result_table.hpp"
#include "nl2sql360/run_log.hpp"
#include "nl2sql360/sql/ast.hpp"

namespace nl2sql360::metrics {

/// Column order always matters. Ordered mode compares row sequences,
/// unordered mode row multisets. NULL equals NULL, and an integer equals a
/// real with the same value.
bool compare_results(const ResultTable& gold, const ResultTable& pred, bool order_sensitive);

/// The `auto` compare mode: ordered iff the gold query has a top-level ORDER BY.
bool order_sensitive_for(const sql::SqlAst& gold);

enum class VesAggregator { SqrtRatio, PlainRatio };
enum class QvtIndicator { Execution, ExactMatch };

std::string to_string(VesAggregator a);
std::string to_string(QvtIndicator q);
VesAggregator ves_aggregator_from_string(const std::string& s);
QvtIndicator qvt_indicator_from_string(const std::string& s);

/// Fractions in [0,1]. Throw EmptySubset on an empty input.
double compute_ex(const std::vector<EvalOutcome>& outcomes);
double compute_em(const std::vector<EvalOutcome>& outcomes);

/// Reward of one correct prediction, g(t_gold / t_pred).
double ves_reward(double t_gold, double t_pred, VesAggregator aggregator);

/// Mean reward over all outcomes, incorrect ones contributing 0. Throws
/// MissingTiming when a correct outcome lacks positive timings.
double ves_fraction(const std::vector<EvalOutcome>& outcomes, VesAggregator aggregator = VesAggregator::SqrtRatio);

/// ves_fraction() times 100, the reporting scale.
double compute_ves(const std::vector<EvalOutcome>& outcomes, VesAggregator aggregator = VesAggregator::SqrtRatio);

/// Query-variance accuracy over `groups`. A group counts only if at least one
/// of its variants is correct; the result is the mean, over counted groups,
/// of the fraction of correct variants. Absent when no group counts. Throws
/// MissingOutcome when a variant has no outcome.
std::optional<double> compute_qvt(const std::vector<QvtGroup>& groups,
                                  const std::map<std::string, EvalOutcome>& outcomes,
                                  QvtIndicator indicator = QvtIndicator::Execution);

/// Mean wall latency per sample in seconds.
double average_latency(const std::vector<EvalOutcome>& outcomes);

struct ModelPrice {
    double input_per_token = 0;
    double output_per_token = 0;
};

/// Model label -> token prices, loaded from
/// `{"gpt-4": {"input": 3e-5, "output": 6e-5}, ...}`.
class PriceTable {
  public:
    PriceTable() = default;
    explicit PriceTable(std::map<std::string, ModelPrice> prices);

    static PriceTable from_json(const nlohmann::json& j);
    static PriceTable load(const std::filesystem::path& path);

    /// Throws UnknownModelLabel.
    const ModelPrice& at(const std::string& label) const;
    bool contains(const std::string& label) const { return prices_.count(label) > 0; }

  private:
    std::map<std::string, ModelPrice> prices_;
};

struct CostSummary {
    double avg_tokens = 0;
    double avg_cost = 0;
};

/// Per-query token and cost averages. Every outcome needs token counts
/// (MissingOutcome otherwise); EmptySubset on empty input.
CostSummary compute_cost(const std::vector<EvalOutcome>& outcomes, const PriceTable& prices,
                         const std::string& model_label);

/// EX in percent divided by average cost; absent when the cost is zero.
std::optional<double> ex_per_cost(double ex_percent, double avg_cost);

struct MetricOptions {
    VesAggregator ves = VesAggregator::SqrtRatio;
    QvtIndicator qvt = QvtIndicator::Execution;
    const PriceTable* prices = nullptr;
    std::string model_label;

    nlohmann::json to_json() const;
};

struct MetricReport {
    std::size_t n = 0;
    double ex = 0;
    double em = 0;
    double ves = 0;
    std::optional<double> qvt;
    double avg_latency = 0;
    std::optional<double> avg_tokens;
    std::optional<double> avg_cost;
    std::optional<double> ex_per_cost;

    nlohmann::json to_json() const;
};

/// All metrics for one set of outcomes. `groups` are the QVT groups to score
/// (pass only eligible ones). Variants missing from `outcomes` are dropped,
/// so a slice scores only its own variants; groups left with fewer than two
/// variants are skipped.
/// Cost columns are filled when a price table is given and every outcome has
/// token counts.
MetricReport evaluate(const std::vector<EvalOutcome>& outcomes, const std::vector<QvtGroup>& groups,
                      const MetricOptions& options = {});

}  // namespace nl2sql360::metrics
