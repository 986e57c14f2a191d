#pragma once

#include <climits>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2sql360/sql/ast.hpp"

namespace nl2sql360::sql {

/// Spider's component counts for the outermost query: `component1` counts
/// WHERE / GROUP BY / ORDER BY / LIMIT / extra FROM table units / OR / LIKE,
/// `component2` counts nested queries and set operations, `others` counts
/// multi-aggregate, multi-column, multi-condition and multi-group-by flags.
struct HardnessComponents {
    int component1 = 0;
    int component2 = 0;
    int others = 0;

    bool operator==(const HardnessComponents&) const = default;
};

struct SqlProfile {
    int subquery_count = 0;
    int join_count = 0;
    int logical_connector_count = 0;
    bool has_order_by = false;
    std::set<std::string> keyword_set;
    int aggregate_count = 0;
    int select_column_count = 0;
    int where_predicate_count = 0;
    HardnessComponents components;

    bool has_keyword(std::string_view tag) const { return keyword_set.count(std::string(tag)) > 0; }
    bool operator==(const SqlProfile&) const = default;
};

struct ProfileOptions {
    /// Also count `FROM a, b` as a join when the WHERE clause links the
    /// comma-joined table through a column equality.
    bool count_comma_joins = false;
};

/// Counts structural features over the whole tree, subqueries included.
SqlProfile profile(const SqlAst& ast, const ProfileOptions& options = {});

enum class Hardness { Easy = 0, Medium = 1, Hard = 2, Extra = 3 };

std::string_view to_string(Hardness h);
/// Accepts "easy", "medium"/"med", "hard", "extra" in any case.
Hardness hardness_from_string(std::string_view s);

struct CountRange {
    int min = 0;
    int max = INT_MAX;

    bool contains(int v) const noexcept { return v >= min && v <= max; }
    bool operator==(const CountRange&) const = default;
};

/// A conjunction of ranges over the three component counts.
struct TierClause {
    CountRange component1;
    CountRange component2;
    CountRange others;

    bool matches(const HardnessComponents& c) const noexcept {
        return component1.contains(c.component1) && component2.contains(c.component2) && others.contains(c.others);
    }
    bool operator==(const TierClause&) const = default;
};

/// Tier rules as data. Tiers are tried Easy, Medium, Hard; a profile matching
/// none of them is Extra, which makes classification total.
struct HardnessRules {
    std::string id;
    std::vector<TierClause> easy;
    std::vector<TierClause> medium;
    std::vector<TierClause> hard;

    /// The component-counting heuristic of the Spider evaluation script.
    static HardnessRules spider();
    static HardnessRules from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    bool operator==(const HardnessRules&) const = default;
};

Hardness classify_hardness(const SqlProfile& profile, const HardnessRules& rules = HardnessRules::spider());
Hardness classify_hardness(const HardnessComponents& components, const HardnessRules& rules);

}  // namespace nl2sql360::sql
