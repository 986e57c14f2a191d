#include "nl2sql360/metrics/exact_match.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "nl2sql360/error.hpp"
#include "nl2sql360/sql/parser.hpp"
#include "nl2sql360/util/strings.hpp"

namespace nl2sql360::metrics {
namespace {

using sql::Expr;
using sql::ExprKind;
using sql::Query;
using util::to_lower;

struct Scope {
    const Scope* parent = nullptr;
    std::map<std::string, std::string> tables;  // lower alias or name -> canonical table
    std::optional<std::string> single_table;
    std::map<std::string, std::string> select_aliases;

    std::optional<std::string> resolve(const std::string& qualifier) const {
        for (const Scope* s = this; s; s = s->parent) {
            if (auto it = s->tables.find(qualifier); it != s->tables.end()) return it->second;
        }
        return std::nullopt;
    }
};

std::string join_sorted(std::vector<std::string> items, const char* sep) {
    std::sort(items.begin(), items.end());
    return util::join(items, sep);
}

std::string dotted(const std::vector<sql::Ident>& path) {
    std::vector<std::string> parts;
    for (const auto& id : path) parts.push_back(to_lower(id.name));
    return util::join(parts, ".");
}

class Canonicalizer {
  public:
    explicit Canonicalizer(CanonicalOptions options) : options_(options) {}

    std::string query(const Query& q, const Scope* parent) {
        Scope scope;
        scope.parent = parent;
        std::vector<std::string> from;
        if (q.core.from) {
            int derived = 0;
            auto add = [&](const sql::TableRef& ref) {
                std::string canon;
                if (ref.is_subquery()) {
                    canon = "#derived" + std::to_string(derived++);
                    from.push_back("(" + query(*ref.subquery, parent) + ")");
                } else {
                    canon = dotted(ref.name);
                    from.push_back(canon);
                    scope.tables[canon] = canon;
                    scope.tables[to_lower(ref.name.back().name)] = canon;
                }
                if (ref.alias) scope.tables[to_lower(ref.alias->name)] = canon;
                return canon;
            };
            const std::string first = add(q.core.from->first);
            for (const auto& j : q.core.from->joins) add(j.table);
            if (q.core.from->joins.empty()) scope.single_table = first;
        }

        std::vector<std::string> select;
        for (const auto& col : q.core.columns) {
            std::string item;
            switch (col.kind) {
                case sql::ResultKind::Star:
                    item = "*";
                    break;
                case sql::ResultKind::TableStar: {
                    const std::string qual = to_lower(col.table.name);
                    item = scope.resolve(qual).value_or(qual) + ".*";
                    break;
                }
                case sql::ResultKind::Expr:
                    item = expr(col.expr, scope, false);
                    break;
            }
            if (col.alias) scope.select_aliases[to_lower(col.alias->name)] = item;
            select.push_back(std::move(item));
        }

        std::string out = q.core.distinct ? "select distinct[" : "select[";
        out += join_sorted(select, ",");
        out += "] from[" + join_sorted(from, ",") + "]";
        if (q.core.where) out += " where[" + condition(*q.core.where, scope, false) + "]";
        if (!q.core.group_by.empty()) {
            std::vector<std::string> keys;
            for (const auto& g : q.core.group_by) keys.push_back(expr(g, scope, false));
            out += " group[" + join_sorted(keys, ",") + "]";
        }
        if (q.core.having) out += " having[" + condition(*q.core.having, scope, true) + "]";
        if (!q.order_by.empty()) {
            std::vector<std::string> items;
            for (const auto& o : q.order_by) {
                items.push_back(expr(o.expr, scope, true) +
                                (o.direction == sql::SortDirection::Desc ? " desc" : " asc"));
            }
            out += " order[" + util::join(items, ",") + "]";
        }
        if (q.limit) out += options_.keep_values ? " limit[" + expr(*q.limit, scope, false) + "]" : " limit";
        if (q.offset) out += options_.keep_values ? " offset[" + expr(*q.offset, scope, false) + "]" : " offset";
        if (q.set_op != sql::SetOp::None && q.rhs) {
            static const char* names[] = {"", "union", "union all", "intersect", "except"};
            out += " ";
            out += names[static_cast<int>(q.set_op)];
            out += "{" + query(*q.rhs, parent) + "}";
        }
        return out;
    }

  private:
    // Leaves of an AND/OR tree as a multiset, plus the connector multiset.
    std::string condition(const Expr& e, const Scope& scope, bool aliases) {
        std::vector<std::string> leaves;
        std::vector<std::string> connectors;
        flatten(e, scope, aliases, leaves, connectors);
        return join_sorted(leaves, ",") + "|" + join_sorted(connectors, ",");
    }

    void flatten(const Expr& e, const Scope& scope, bool aliases, std::vector<std::string>& leaves,
                 std::vector<std::string>& connectors) {
        if (e.kind == ExprKind::Paren) {
            flatten(e.args[0], scope, aliases, leaves, connectors);
        } else if (e.kind == ExprKind::Binary && (e.text == "AND" || e.text == "OR")) {
            connectors.push_back(to_lower(e.text));
            flatten(e.args[0], scope, aliases, leaves, connectors);
            flatten(e.args[1], scope, aliases, leaves, connectors);
        } else {
            leaves.push_back(expr(e, scope, aliases));
        }
    }

    std::string literal(const Expr& e) const {
        switch (e.literal_kind) {
            case sql::LiteralKind::Null:
                return "null";
            case sql::LiteralKind::Keyword:
                return to_lower(e.text);
            case sql::LiteralKind::String:
                return options_.keep_values ? "'" + util::replace_all(e.text, "'", "''") + "'" : "?";
            default:
                return options_.keep_values ? e.text : "?";
        }
    }

    std::string column(const Expr& e, const Scope& scope, bool aliases) const {
        if (e.path.size() == 1) {
            const std::string name = to_lower(e.path[0].name);
            if (aliases) {
                if (auto it = scope.select_aliases.find(name); it != scope.select_aliases.end()) return it->second;
            }
            return scope.single_table ? *scope.single_table + "." + name : name;
        }
        const std::string qual = to_lower(e.path[e.path.size() - 2].name);
        const std::string name = to_lower(e.path.back().name);
        if (auto t = scope.resolve(qual)) return *t + "." + name;
        return dotted(e.path);
    }

    std::string args(const Expr& e, std::size_t from, const Scope& scope, bool aliases) {
        std::vector<std::string> parts;
        for (std::size_t i = from; i < e.args.size(); ++i) parts.push_back(expr(e.args[i], scope, aliases));
        return util::join(parts, ",");
    }

    std::string expr(const Expr& e, const Scope& scope, bool aliases) {
        const std::string neg = e.negated ? "not " : "";
        switch (e.kind) {
            case ExprKind::Literal:
                return literal(e);
            case ExprKind::Column:
                return column(e, scope, aliases);
            case ExprKind::Star:
                return "*";
            case ExprKind::Unary:
                return to_lower(e.text) + " " + expr(e.args[0], scope, aliases);
            case ExprKind::Binary:
                return "(" + expr(e.args[0], scope, aliases) + " " + to_lower(e.text) + " " +
                       expr(e.args[1], scope, aliases) + ")";
            case ExprKind::Function:
                return to_lower(e.text) + "(" + (e.distinct ? "distinct " : "") + args(e, 0, scope, aliases) + ")";
            case ExprKind::Case:
                return std::string("case") + (e.case_has_operand ? "+op" : "") + (e.case_has_else ? "+else" : "") +
                       "(" + args(e, 0, scope, aliases) + ")";
            case ExprKind::Cast:
                return "cast(" + expr(e.args[0], scope, aliases) + " as " + to_lower(e.text) + ")";
            case ExprKind::Between:
                return expr(e.args[0], scope, aliases) + " " + neg + "between " + expr(e.args[1], scope, aliases) +
                       " and " + expr(e.args[2], scope, aliases);
            case ExprKind::InList:
                return expr(e.args[0], scope, aliases) + " " + neg + "in[" + args(e, 1, scope, aliases) + "]";
            case ExprKind::InQuery:
                return expr(e.args[0], scope, aliases) + " " + neg + "in(" + query(*e.subquery, &scope) + ")";
            case ExprKind::Exists:
                return neg + "exists(" + query(*e.subquery, &scope) + ")";
            case ExprKind::Subquery:
                return "(" + query(*e.subquery, &scope) + ")";
            case ExprKind::IsNull:
                return expr(e.args[0], scope, aliases) + " is " + neg + "null";
            case ExprKind::Like: {
                std::string out = expr(e.args[0], scope, aliases) + " " + neg + to_lower(e.text) + " " +
                                  expr(e.args[1], scope, aliases);
                if (e.args.size() > 2) out += " escape " + expr(e.args[2], scope, aliases);
                return out;
            }
            case ExprKind::Collate:
                return expr(e.args[0], scope, aliases) + " collate " + to_lower(e.text);
            case ExprKind::Paren:
                return expr(e.args[0], scope, aliases);
        }
        return {};
    }

    CanonicalOptions options_;
};

}  // namespace

std::string canonical_form(const sql::SqlAst& ast, const CanonicalOptions& options) {
    return Canonicalizer(options).query(ast, nullptr);
}

bool exact_match(std::string_view gold_sql, std::string_view pred_sql) {
    try {
        return canonical_form(sql::parse_sql(gold_sql)) == canonical_form(sql::parse_sql(pred_sql));
    } catch (const Error&) {
        return false;
    }
}

}  // namespace nl2sql360::metrics
