#pragma once

/// @file exact_match.hpp
/// @brief Component-wise SQL canonicalization for exact-match scoring.

#include <string>
#include <string_view>

#include "nl2sql360/sql/ast.hpp"

namespace nl2sql360::metrics {

struct CanonicalOptions {
    /// Keep literal values instead of replacing them with `?`.
    bool keep_values = false;
};

/// Serializes a query into a key where two queries get the same key iff they
/// agree clause by clause:
///
///  - select items as a multiset, plus DISTINCT;
///  - FROM tables as a set (join conditions and join kinds ignored);
///  - WHERE / HAVING as a set of leaf predicates plus the multiset of AND/OR
///    connectors;
///  - GROUP BY as a set; ORDER BY as a sequence with direction (ASC and an
///    unspecified direction are the same);
///  - presence of LIMIT; set operation kind and right operand, recursively.
///
/// Identifiers are case-insensitive, quoting is dropped, table aliases are
/// resolved to table names, select-item aliases are dropped and references
/// to them in ORDER BY / HAVING are replaced by the aliased expression.
/// Unqualified columns are qualified when FROM names a single table.
std::string canonical_form(const sql::SqlAst& ast, const CanonicalOptions& options = {});

/// Spider-style exact match. False when either side does not parse.
bool exact_match(std::string_view gold_sql, std::string_view pred_sql);

}  // namespace nl2sql360::metrics
