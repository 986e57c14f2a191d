#include "nl2sql360/sql/profile.hpp"

#include <stdexcept>

#include "nl2sql360/error.hpp"
#include "nl2sql360/util/strings.hpp"

namespace nl2sql360::sql {
namespace {

bool is_aggregate(const Expr& e) {
    if (e.kind != ExprKind::Function) return false;
    return e.text == "COUNT" || e.text == "SUM" || e.text == "AVG" || e.text == "MIN" || e.text == "MAX";
}

bool is_connector(const Expr& e) { return e.kind == ExprKind::Binary && (e.text == "AND" || e.text == "OR"); }

// Leaves of an AND/OR tree, looking through parentheses.
void predicate_leaves(const Expr& e, std::vector<const Expr*>& out) {
    if (is_connector(e)) {
        predicate_leaves(e.args[0], out);
        predicate_leaves(e.args[1], out);
    } else if (e.kind == ExprKind::Paren) {
        predicate_leaves(e.args[0], out);
    } else {
        out.push_back(&e);
    }
}

// Counts `op` connectors in an AND/OR tree, looking through parentheses but
// not into subqueries.
int count_connectors(const Expr& e, std::string_view op) {
    if (is_connector(e))
        return (e.text == op ? 1 : 0) + count_connectors(e.args[0], op) + count_connectors(e.args[1], op);
    if (e.kind == ExprKind::Paren) return count_connectors(e.args[0], op);
    return 0;
}

// Aggregate calls in an expression, not descending into subqueries.
int count_aggregates(const Expr& e) {
    int n = is_aggregate(e) ? 1 : 0;
    for (const Expr& a : e.args) n += count_aggregates(a);
    return n;
}

// Subqueries directly owned by an expression (not nested inside another query).
int count_direct_subqueries(const Expr& e) {
    int n = e.subquery ? 1 : 0;
    for (const Expr& a : e.args) n += count_direct_subqueries(a);
    return n;
}

std::string qualifier(const Expr& column) {
    return column.path.size() >= 2 ? util::to_lower(column.path[column.path.size() - 2].name) : std::string{};
}

std::string table_handle(const TableRef& ref) {
    if (ref.alias) return util::to_lower(ref.alias->name);
    if (!ref.name.empty()) return util::to_lower(ref.name.back().name);
    return {};
}

bool comma_join_linked(const SelectCore& core, const TableRef& joined) {
    if (!core.where) return false;
    const std::string handle = table_handle(joined);
    std::vector<const Expr*> leaves;
    predicate_leaves(*core.where, leaves);
    for (const Expr* leaf : leaves) {
        if (leaf->kind != ExprKind::Binary || leaf->text != "=") continue;
        const Expr& l = leaf->args[0];
        const Expr& r = leaf->args[1];
        if (l.kind != ExprKind::Column || r.kind != ExprKind::Column) continue;
        const std::string ql = qualifier(l);
        const std::string qr = qualifier(r);
        if (ql.empty() && qr.empty()) return true;
        if ((ql == handle && qr != handle) || (qr == handle && ql != handle)) return true;
    }
    return false;
}

class ProfileWalker {
  public:
    ProfileWalker(SqlProfile& p, const ProfileOptions& opt) : p_(p), opt_(opt) {}

    void query(const Query& q) {
        core(q.core);
        if (!q.order_by.empty()) {
            p_.has_order_by = true;
            p_.keyword_set.insert("ORDER BY");
        }
        for (const OrderItem& item : q.order_by) expr(item.expr);
        if (q.limit) {
            p_.keyword_set.insert("LIMIT");
            expr(*q.limit);
        }
        if (q.offset) expr(*q.offset);
        switch (q.set_op) {
            case SetOp::None:
                break;
            case SetOp::Union:
            case SetOp::UnionAll:
                p_.keyword_set.insert("UNION");
                break;
            case SetOp::Intersect:
                p_.keyword_set.insert("INTERSECT");
                break;
            case SetOp::Except:
                p_.keyword_set.insert("EXCEPT");
                break;
        }
        if (q.rhs) query(*q.rhs);
    }

  private:
    SqlProfile& p_;
    const ProfileOptions& opt_;

    void nested(const Query& q) {
        ++p_.subquery_count;
        query(q);
    }

    void predicate_tree(const Expr& e) {
        p_.logical_connector_count += count_connectors(e, "AND") + count_connectors(e, "OR");
        if (count_connectors(e, "AND")) p_.keyword_set.insert("AND");
        if (count_connectors(e, "OR")) p_.keyword_set.insert("OR");
        expr(e);
    }

    void table_ref(const TableRef& ref) {
        if (ref.subquery) nested(*ref.subquery);
    }

    void core(const SelectCore& c) {
        if (c.distinct) p_.keyword_set.insert("DISTINCT");
        for (const ResultColumn& col : c.columns)
            if (col.kind == ResultKind::Expr) expr(col.expr);
        if (c.from) {
            table_ref(c.from->first);
            for (const Join& j : c.from->joins) {
                if (!j.is_comma()) {
                    ++p_.join_count;
                    p_.keyword_set.insert("JOIN");
                } else if (opt_.count_comma_joins && comma_join_linked(c, j.table)) {
                    ++p_.join_count;
                    p_.keyword_set.insert("JOIN");
                }
                table_ref(j.table);
                if (j.on) expr(*j.on);
            }
        }
        if (c.where) {
            p_.keyword_set.insert("WHERE");
            std::vector<const Expr*> leaves;
            predicate_leaves(*c.where, leaves);
            p_.where_predicate_count += static_cast<int>(leaves.size());
            predicate_tree(*c.where);
        }
        if (!c.group_by.empty()) {
            p_.keyword_set.insert("GROUP BY");
            for (const Expr& g : c.group_by) expr(g);
        }
        if (c.having) {
            p_.keyword_set.insert("HAVING");
            predicate_tree(*c.having);
        }
    }

    void expr(const Expr& e) {
        if (is_aggregate(e)) ++p_.aggregate_count;
        switch (e.kind) {
            case ExprKind::Case:
                p_.keyword_set.insert("CASE");
                break;
            case ExprKind::Cast:
                p_.keyword_set.insert("CAST");
                break;
            case ExprKind::Function:
                if (e.text == "IIF") p_.keyword_set.insert("IIF");
                if (e.distinct) p_.keyword_set.insert("DISTINCT");
                break;
            case ExprKind::Between:
                p_.keyword_set.insert("BETWEEN");
                break;
            case ExprKind::InList:
            case ExprKind::InQuery:
                p_.keyword_set.insert("IN");
                break;
            case ExprKind::Exists:
                p_.keyword_set.insert("EXISTS");
                break;
            case ExprKind::Like:
                p_.keyword_set.insert(e.text);
                break;
            case ExprKind::Unary:
                if (e.text == "NOT") p_.keyword_set.insert("NOT");
                break;
            default:
                break;
        }
        if (e.negated) p_.keyword_set.insert("NOT");
        for (const Expr& a : e.args) expr(a);
        if (e.subquery) nested(*e.subquery);
    }
};

HardnessComponents spider_components(const Query& q) {
    HardnessComponents c;
    const SelectCore& core = q.core;

    std::vector<const Expr*> where_leaves;
    std::vector<const Expr*> cond_leaves;  // ON + WHERE + HAVING
    if (core.from)
        for (const Join& j : core.from->joins)
            if (j.on) predicate_leaves(*j.on, cond_leaves);
    if (core.where) {
        predicate_leaves(*core.where, where_leaves);
        cond_leaves.insert(cond_leaves.end(), where_leaves.begin(), where_leaves.end());
    }
    std::vector<const Expr*> having_leaves;
    if (core.having) {
        predicate_leaves(*core.having, having_leaves);
        cond_leaves.insert(cond_leaves.end(), having_leaves.begin(), having_leaves.end());
    }

    if (core.where) ++c.component1;
    if (!core.group_by.empty()) ++c.component1;
    if (!q.order_by.empty()) ++c.component1;
    if (q.limit) ++c.component1;
    if (core.from) c.component1 += static_cast<int>(core.from->joins.size());
    if (core.from)
        for (const Join& j : core.from->joins)
            if (j.on) c.component1 += count_connectors(*j.on, "OR");
    if (core.where) c.component1 += count_connectors(*core.where, "OR");
    if (core.having) c.component1 += count_connectors(*core.having, "OR");
    for (const Expr* leaf : cond_leaves)
        if (leaf->kind == ExprKind::Like && leaf->text == "LIKE") ++c.component1;

    for (const Expr* leaf : cond_leaves) c.component2 += count_direct_subqueries(*leaf);
    if (q.set_op != SetOp::None) ++c.component2;

    int agg = 0;
    for (const ResultColumn& col : core.columns)
        if (col.kind == ResultKind::Expr) agg += count_aggregates(col.expr);
    for (const Expr& g : core.group_by) agg += count_aggregates(g);
    for (const OrderItem& item : q.order_by) agg += count_aggregates(item.expr);
    // The reference script tests the negation flag of WHERE/HAVING conditions
    // where it means to test for aggregates; the tiers it produces depend on it.
    for (const Expr* leaf : where_leaves)
        if (leaf->negated || (leaf->kind == ExprKind::Unary && leaf->text == "NOT")) ++agg;
    for (const Expr* leaf : having_leaves)
        if (leaf->negated || (leaf->kind == ExprKind::Unary && leaf->text == "NOT")) ++agg;

    if (agg > 1) ++c.others;
    if (core.columns.size() > 1) ++c.others;
    if (where_leaves.size() > 1) ++c.others;
    if (core.group_by.size() > 1) ++c.others;
    return c;
}

CountRange range_from_json(const nlohmann::json& j, std::string_view key) {
    CountRange r;
    if (!j.contains(key)) return r;
    const auto& v = j.at(std::string(key));
    if (v.is_number_integer()) {
        r.min = r.max = v.get<int>();
        return r;
    }
    if (v.contains("min")) r.min = v.at("min").get<int>();
    if (v.contains("max") && !v.at("max").is_null()) r.max = v.at("max").get<int>();
    return r;
}

nlohmann::json range_to_json(const CountRange& r) {
    nlohmann::json j = {{"min", r.min}};
    j["max"] = r.max == INT_MAX ? nlohmann::json(nullptr) : nlohmann::json(r.max);
    return j;
}

std::vector<TierClause> clauses_from_json(const nlohmann::json& j, std::string_view tier) {
    std::vector<TierClause> out;
    if (!j.contains(tier)) return out;
    for (const auto& c : j.at(std::string(tier))) {
        out.push_back(TierClause{range_from_json(c, "component1"), range_from_json(c, "component2"),
                                 range_from_json(c, "others")});
    }
    return out;
}

nlohmann::json clauses_to_json(const std::vector<TierClause>& clauses) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : clauses)
        arr.push_back({{"component1", range_to_json(c.component1)},
                       {"component2", range_to_json(c.component2)},
                       {"others", range_to_json(c.others)}});
    return arr;
}

}  // namespace

SqlProfile profile(const SqlAst& ast, const ProfileOptions& options) {
    SqlProfile p;
    ProfileWalker walker(p, options);
    walker.query(ast);
    p.select_column_count = static_cast<int>(ast.core.columns.size());
    p.components = spider_components(ast);
    return p;
}

std::string_view to_string(Hardness h) {
    switch (h) {
        case Hardness::Easy:
            return "easy";
        case Hardness::Medium:
            return "medium";
        case Hardness::Hard:
            return "hard";
        case Hardness::Extra:
            return "extra";
    }
    return "extra";
}

Hardness hardness_from_string(std::string_view s) {
    const std::string l = util::to_lower(s);
    if (l == "easy") return Hardness::Easy;
    if (l == "medium" || l == "med") return Hardness::Medium;
    if (l == "hard") return Hardness::Hard;
    if (l == "extra") return Hardness::Extra;
    throw FormatError("unknown hardness tier: " + std::string(s));
}

HardnessRules HardnessRules::spider() {
    constexpr int inf = INT_MAX;
    HardnessRules r;
    r.id = "spider-v1";
    r.easy = {{{0, 1}, {0, 0}, {0, 0}}};
    r.medium = {{{0, 1}, {0, 0}, {0, 2}}, {{0, 2}, {0, 0}, {0, 1}}};
    r.hard = {{{0, 2}, {0, 0}, {3, inf}}, {{3, 3}, {0, 0}, {0, 2}}, {{0, 1}, {0, 1}, {0, 0}}};
    return r;
}

HardnessRules HardnessRules::from_json(const nlohmann::json& j) {
    HardnessRules r;
    r.id = j.value("id", std::string("custom"));
    r.easy = clauses_from_json(j, "easy");
    r.medium = clauses_from_json(j, "medium");
    r.hard = clauses_from_json(j, "hard");
    return r;
}

nlohmann::json HardnessRules::to_json() const {
    return {{"id", id}, {"easy", clauses_to_json(easy)}, {"medium", clauses_to_json(medium)},
            {"hard", clauses_to_json(hard)}};
}

Hardness classify_hardness(const HardnessComponents& c, const HardnessRules& rules) {
    auto any = [&c](const std::vector<TierClause>& clauses) {
        for (const auto& clause : clauses)
            if (clause.matches(c)) return true;
        return false;
    };
    if (any(rules.easy)) return Hardness::Easy;
    if (any(rules.medium)) return Hardness::Medium;
    if (any(rules.hard)) return Hardness::Hard;
    return Hardness::Extra;
}

Hardness classify_hardness(const SqlProfile& profile, const HardnessRules& rules) {
    return classify_hardness(profile.components, rules);
}

}  // namespace nl2sql360::sql
