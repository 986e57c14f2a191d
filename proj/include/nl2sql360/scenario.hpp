#pragma once

/// @file scenario.hpp
/// @brief Predicate language for slicing a benchmark into scenario subsets.
///
/// Specs serialize as small JSON trees:
///
///     {"and": [{"atom": "hardness", "value": "extra"},
///              {"atom": "has_order_by", "value": true}]}
///     {"not": {"atom": "subquery_count", "cmp": ">=", "value": 1}}
///
/// Atoms: hardness, subquery_count, join_count, logical_connector_count (all
/// with an optional `cmp` among = != < <= > >=, default =), has_order_by,
/// keyword, domain, qvt_eligible. `{"and": []}` matches every sample.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2sql360/benchmark.hpp"
#include "nl2sql360/sql/profile.hpp"

namespace nl2sql360 {

enum class Cmp { Eq, Ne, Lt, Le, Gt, Ge };

std::string to_string(Cmp c);
Cmp cmp_from_string(const std::string& s);
bool apply(Cmp c, int lhs, int rhs) noexcept;

enum class AtomField {
    Hardness,
    SubqueryCount,
    JoinCount,
    ConnectorCount,
    HasOrderBy,
    Keyword,
    Domain,
    QvtEligible,
};

struct ScenarioSpec {
    enum class Kind { Atom, And, Or, Not };

    Kind kind = Kind::And;
    AtomField field = AtomField::SubqueryCount;
    Cmp cmp = Cmp::Eq;
    int number = 0;       ///< counts, and hardness as its tier index
    bool flag = false;    ///< has_order_by, qvt_eligible
    std::string text;     ///< keyword tag or domain name
    std::vector<ScenarioSpec> children;

    static ScenarioSpec all();
    static ScenarioSpec hardness(sql::Hardness tier, Cmp cmp = Cmp::Eq);
    static ScenarioSpec count(AtomField field, Cmp cmp, int k);
    static ScenarioSpec has_order_by(bool value = true);
    static ScenarioSpec keyword(const std::string& tag);
    static ScenarioSpec domain(const std::string& name);
    static ScenarioSpec qvt_eligible(bool value = true);
    static ScenarioSpec all_of(std::vector<ScenarioSpec> parts);
    static ScenarioSpec any_of(std::vector<ScenarioSpec> parts);
    static ScenarioSpec negate(ScenarioSpec part);

    /// Throws FormatError on malformed or ill-typed trees.
    static ScenarioSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    /// Hex digest of the canonical JSON form.
    std::string hash() const;

    bool uses(AtomField f) const;
    bool operator==(const ScenarioSpec&) const = default;
};

/// What a spec can see about one sample. Always derived from the gold query.
struct SampleFacts {
    const sql::SqlProfile* profile = nullptr;
    sql::Hardness hardness = sql::Hardness::Easy;
    std::optional<std::string> domain;
    bool qvt_eligible = false;
};

bool evaluate(const ScenarioSpec& spec, const SampleFacts& facts);

struct Subset {
    std::string parent;
    std::string name;
    ScenarioSpec spec;
    std::vector<std::string> sample_ids;  ///< in benchmark order

    std::size_t size() const noexcept { return sample_ids.size(); }
};

using ProfileMap = std::map<std::string, sql::SqlProfile>;

/// Profiles of every sample's gold query.
ProfileMap profile_benchmark(const Benchmark& benchmark, const sql::ProfileOptions& options = {});

/// Samples satisfying `spec`, in benchmark order. Throws UnknownDomain when a
/// domain atom is used and the benchmark has no domain for a sample's
/// database; throws Error when `profiles` lacks a sample.
Subset filter(const Benchmark& benchmark, const ScenarioSpec& spec, const ProfileMap& profiles,
              const std::string& name = "", const sql::HardnessRules& rules = sql::HardnessRules::spider());

/// Subset restricted to a prior subset's samples.
Subset filter(const Benchmark& benchmark, const Subset& within, const ScenarioSpec& spec, const ProfileMap& profiles,
              const std::string& name = "", const sql::HardnessRules& rules = sql::HardnessRules::spider());

/// The named slices: has_/no_ subquery, connector, orderby, join, and the
/// four hardness tiers.
const std::map<std::string, ScenarioSpec>& builtin_scenarios();

/// Builtin order used by reports: the four characteristic pairs, then tiers.
const std::vector<std::string>& builtin_scenario_names();

}  // namespace nl2sql360
