#pragma once

#include <string>
#include <string_view>

#include "nl2sql360/error.hpp"
#include "nl2sql360/sql/ast.hpp"

namespace nl2sql360::sql {

enum class Dialect { Sqlite };

/// Parses one SELECT statement (an optional trailing `;` is accepted).
///
/// The grammar is a permissive SQLite subset: compound selects, joins of
/// every flavour, comma joins, FROM-subqueries, scalar/IN/EXISTS subqueries,
/// CASE, CAST, COLLATE, IIF and arbitrary function calls. Throws ParseError
/// carrying the byte offset of the offending token and a hint of what was
/// expected there.
SqlAst parse_sql(std::string_view text, Dialect dialect = Dialect::Sqlite);

/// Renders an AST with upper-case keywords and single spaces. For every tree
/// produced by parse_sql, `parse_sql(render_sql(ast)) == ast`.
std::string render_sql(const SqlAst& ast);
std::string render_expr(const Expr& expr);

}  // namespace nl2sql360::sql
