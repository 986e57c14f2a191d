#pragma once

/// @file ast.hpp
/// @brief Value-semantic syntax tree for the SQLite SELECT subset used by
/// Spider and BIRD gold queries.
///
/// Every node is a plain aggregate with a defaulted `operator==`, so two trees
/// compare structurally. Nested queries are held through `Box`, a deep-copying
/// owning pointer, which lets `Expr` and `Query` refer to each other while
/// keeping value semantics.

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nl2sql360::sql {

/// Deep-copying, nullable owning pointer with structural equality.
template <typename T>
class Box {
  public:
    Box() = default;
    explicit Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
    Box(const Box& other) : ptr_(other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr) {}
    Box(Box&&) noexcept = default;
    Box& operator=(const Box& other) {
        if (this != &other) ptr_ = other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr;
        return *this;
    }
    Box& operator=(Box&&) noexcept = default;
    ~Box() = default;

    explicit operator bool() const noexcept { return ptr_ != nullptr; }
    T& operator*() { return *ptr_; }
    const T& operator*() const { return *ptr_; }
    T* operator->() { return ptr_.get(); }
    const T* operator->() const { return ptr_.get(); }
    T* get() noexcept { return ptr_.get(); }
    const T* get() const noexcept { return ptr_.get(); }

    friend bool operator==(const Box& a, const Box& b) {
        if (!a.ptr_ || !b.ptr_) return !a.ptr_ && !b.ptr_;
        return *a.ptr_ == *b.ptr_;
    }

  private:
    std::unique_ptr<T> ptr_;
};

/// An identifier as written. `quote` is 0 for bare names, otherwise one of
/// '"', '`' or '[' so the original spelling can be rendered back.
struct Ident {
    std::string name;
    char quote = 0;

    bool operator==(const Ident&) const = default;
};

struct Query;

enum class ExprKind {
    Literal,     ///< text = literal spelling; literal_kind says which
    Column,      ///< path = [table.]column
    Star,        ///< `*` as a function argument, e.g. COUNT(*)
    Unary,       ///< text = "-", "+", "~" or "NOT"; args[0]
    Binary,      ///< text = canonical upper-case operator; args[0], args[1]
    Function,    ///< text = function name as written; args; distinct
    Case,        ///< args: [operand?] (when, then)* [else?]; see case flags
    Cast,        ///< args[0]; text = type name
    Between,     ///< args[0] BETWEEN args[1] AND args[2]; negated
    InList,      ///< args[0] IN (args[1..]); negated
    InQuery,     ///< args[0] IN (subquery); negated
    Exists,      ///< EXISTS (subquery); negated
    Subquery,    ///< scalar (subquery)
    IsNull,      ///< args[0] IS NULL / IS NOT NULL (negated)
    Like,        ///< args[0] LIKE/GLOB/REGEXP/MATCH args[1] [ESCAPE args[2]]; text = operator
    Collate,     ///< args[0] COLLATE text
    Paren,       ///< ( args[0] )
};

enum class LiteralKind { Number, String, Null, Keyword };

struct Expr {
    ExprKind kind = ExprKind::Literal;
    std::string text;
    LiteralKind literal_kind = LiteralKind::Number;
    std::vector<Ident> path;
    std::vector<Expr> args;
    Box<Query> subquery;
    bool negated = false;
    bool distinct = false;
    bool case_has_operand = false;
    bool case_has_else = false;

    bool operator==(const Expr&) const = default;
};

struct TableRef {
    /// Table name, possibly schema-qualified; empty when `subquery` is set.
    std::vector<Ident> name;
    Box<Query> subquery;
    std::optional<Ident> alias;
    bool alias_with_as = false;

    bool is_subquery() const noexcept { return static_cast<bool>(subquery); }
    bool operator==(const TableRef&) const = default;
};

struct Join {
    /// Join operator as rendered: "," or e.g. "JOIN", "LEFT JOIN", "NATURAL INNER JOIN".
    std::string op;
    TableRef table;
    std::optional<Expr> on;
    std::vector<Ident> using_columns;

    bool is_comma() const noexcept { return op == ","; }
    bool operator==(const Join&) const = default;
};

struct FromClause {
    TableRef first;
    std::vector<Join> joins;

    bool operator==(const FromClause&) const = default;
};

enum class ResultKind { Expr, Star, TableStar };

struct ResultColumn {
    ResultKind kind = ResultKind::Expr;
    Expr expr;
    Ident table;  ///< for TableStar
    std::optional<Ident> alias;
    bool alias_with_as = false;

    bool operator==(const ResultColumn&) const = default;
};

enum class SortDirection { Unspecified, Asc, Desc };

struct OrderItem {
    Expr expr;
    SortDirection direction = SortDirection::Unspecified;

    bool operator==(const OrderItem&) const = default;
};

struct SelectCore {
    bool distinct = false;
    std::vector<ResultColumn> columns;
    std::optional<FromClause> from;
    std::optional<Expr> where;
    std::vector<Expr> group_by;
    std::optional<Expr> having;

    bool operator==(const SelectCore&) const = default;
};

enum class SetOp { None, Union, UnionAll, Intersect, Except };

/// One SELECT with its trailing ORDER BY / LIMIT and an optional compound
/// continuation. Compounds nest to the right: `A UNION B INTERSECT C` is
/// `A` with rhs `B INTERSECT C`.
struct Query {
    SelectCore core;
    std::vector<OrderItem> order_by;
    std::optional<Expr> limit;
    std::optional<Expr> offset;
    SetOp set_op = SetOp::None;
    Box<Query> rhs;

    bool operator==(const Query&) const = default;
};

using SqlAst = Query;

}  // namespace nl2sql360::sql
