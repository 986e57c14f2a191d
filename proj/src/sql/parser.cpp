#include "nl2sql360/sql/parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <unordered_set>
#include <vector>

#include "nl2sql360/util/strings.hpp"

namespace nl2sql360::sql {
namespace {

enum class Tok { Word, Quoted, String, Number, Symbol, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;  // unescaped content for strings / quoted identifiers
    char quote = 0;
    std::size_t offset = 0;
};

bool is_word_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = s.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(s[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (c == '-' && i + 1 < n && s[i + 1] == '-') {
            while (i < n && s[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && s[i + 1] == '*') {
            const auto end = s.find("*/", i + 2);
            if (end == std::string_view::npos) throw ParseError(i, "end of comment", "unterminated comment");
            i = end + 2;
            continue;
        }
        Token t;
        t.offset = i;
        if (is_word_start(c)) {
            std::size_t j = i;
            while (j < n && is_word_char(static_cast<unsigned char>(s[j]))) ++j;
            t.kind = Tok::Word;
            t.text = std::string(s.substr(i, j - i));
            i = j;
        } else if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            std::size_t j = i;
            if (c == '0' && j + 1 < n && (s[j + 1] == 'x' || s[j + 1] == 'X')) {
                j += 2;
                while (j < n && std::isxdigit(static_cast<unsigned char>(s[j]))) ++j;
            } else {
                while (j < n && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
                if (j < n && s[j] == '.') {
                    ++j;
                    while (j < n && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
                }
                if (j < n && (s[j] == 'e' || s[j] == 'E')) {
                    std::size_t k = j + 1;
                    if (k < n && (s[k] == '+' || s[k] == '-')) ++k;
                    if (k < n && std::isdigit(static_cast<unsigned char>(s[k]))) {
                        j = k;
                        while (j < n && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
                    }
                }
            }
            t.kind = Tok::Number;
            t.text = std::string(s.substr(i, j - i));
            i = j;
        } else if (c == '\'' || c == '"' || c == '`' || c == '[') {
            const char close = c == '[' ? ']' : static_cast<char>(c);
            std::string body;
            std::size_t j = i + 1;
            bool closed = false;
            while (j < n) {
                if (s[j] == close) {
                    if (close != ']' && j + 1 < n && s[j + 1] == close) {
                        body.push_back(close);
                        j += 2;
                        continue;
                    }
                    closed = true;
                    ++j;
                    break;
                }
                body.push_back(s[j]);
                ++j;
            }
            if (!closed) throw ParseError(i, std::string(1, close), "unterminated quoted token");
            t.kind = c == '\'' ? Tok::String : Tok::Quoted;
            t.quote = static_cast<char>(c);
            t.text = std::move(body);
            i = j;
        } else {
            static constexpr std::array<std::string_view, 8> two = {"||", "<=", ">=", "<>", "!=", "==", "<<", ">>"};
            t.kind = Tok::Symbol;
            const auto pair = s.substr(i, 2);
            if (std::find(two.begin(), two.end(), pair) != two.end()) {
                t.text = std::string(pair);
                i += 2;
            } else if (std::string_view("(),.;+-*/%=<>&|~").find(static_cast<char>(c)) != std::string_view::npos) {
                t.text = std::string(1, static_cast<char>(c));
                ++i;
            } else {
                throw ParseError(i, "token", std::string("unexpected character '") + static_cast<char>(c) + "'");
            }
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Tok::End;
    end.offset = n;
    out.push_back(end);
    return out;
}

const std::unordered_set<std::string>& reserved_words() {
    static const std::unordered_set<std::string> words = {
        "SELECT", "FROM",   "WHERE",  "GROUP",  "BY",      "HAVING", "ORDER",  "LIMIT",   "OFFSET",
        "UNION",  "INTERSECT", "EXCEPT", "ALL", "DISTINCT", "AS",     "ON",     "USING",   "JOIN",
        "INNER",  "LEFT",   "RIGHT",  "FULL",   "OUTER",   "CROSS",  "NATURAL", "AND",    "OR",
        "NOT",    "IN",     "IS",     "NULL",   "LIKE",    "GLOB",   "REGEXP", "MATCH",   "BETWEEN",
        "CASE",   "WHEN",   "THEN",   "ELSE",   "END",     "EXISTS", "CAST",   "COLLATE", "ASC",
        "DESC",   "ESCAPE", "ISNULL", "NOTNULL"};
    return words;
}

// Reserved words that SQLite still accepts as function names.
bool reserved_function_name(const std::string& upper) {
    return upper == "LEFT" || upper == "RIGHT" || upper == "LIKE" || upper == "GLOB" || upper == "REGEXP" ||
           upper == "MATCH";
}

class Parser {
  public:
    explicit Parser(std::string_view text) : toks_(tokenize(text)) {}

    Query parse_statement() {
        if (peek().kind == Tok::End) fail("SELECT", "empty statement");
        Query q = parse_query();
        while (accept_sym(";")) {
        }
        if (peek().kind != Tok::End) fail("end of input", "trailing tokens");
        return q;
    }

  private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;

    const Token& peek(std::size_t ahead = 0) const {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }
    const Token& advance() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

    [[noreturn]] void fail(const std::string& expected, const std::string& detail = {}) const {
        const Token& t = peek();
        std::string got = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
        throw ParseError(t.offset, expected, detail.empty() ? "found " + got : detail + ", found " + got);
    }

    static bool word_is(const Token& t, std::string_view kw) {
        return t.kind == Tok::Word && util::iequals(t.text, kw);
    }
    bool is_kw(std::string_view kw, std::size_t ahead = 0) const { return word_is(peek(ahead), kw); }
    bool accept_kw(std::string_view kw) {
        if (!is_kw(kw)) return false;
        advance();
        return true;
    }
    void expect_kw(std::string_view kw) {
        if (!accept_kw(kw)) fail(std::string(kw));
    }
    bool is_sym(std::string_view s, std::size_t ahead = 0) const {
        const Token& t = peek(ahead);
        return t.kind == Tok::Symbol && t.text == s;
    }
    bool accept_sym(std::string_view s) {
        if (!is_sym(s)) return false;
        advance();
        return true;
    }
    void expect_sym(std::string_view s) {
        if (!accept_sym(s)) fail("'" + std::string(s) + "'");
    }
    bool is_reserved(const Token& t) const {
        return t.kind == Tok::Word && reserved_words().count(util::to_upper(t.text)) > 0;
    }

    Ident parse_ident() {
        const Token& t = peek();
        if (t.kind == Tok::Quoted || (t.kind == Tok::Word && !is_reserved(t))) {
            advance();
            return Ident{t.text, t.quote};
        }
        fail("identifier");
    }

    // Alias after an expression or table: [AS] name. Strings are accepted as
    // aliases as SQLite does.
    std::optional<Ident> parse_alias(bool& with_as) {
        with_as = false;
        if (accept_kw("AS")) {
            with_as = true;
            const Token& t = peek();
            if (t.kind == Tok::Word || t.kind == Tok::Quoted || t.kind == Tok::String) {
                advance();
                return Ident{t.text, t.quote};
            }
            fail("alias");
        }
        const Token& t = peek();
        if (t.kind == Tok::Quoted || t.kind == Tok::String || (t.kind == Tok::Word && !is_reserved(t))) {
            advance();
            return Ident{t.text, t.quote};
        }
        return std::nullopt;
    }

    Query parse_query() {
        Query q;
        q.core = parse_core();
        if (accept_kw("ORDER")) {
            expect_kw("BY");
            do {
                OrderItem item;
                item.expr = parse_expr();
                if (accept_kw("ASC"))
                    item.direction = SortDirection::Asc;
                else if (accept_kw("DESC"))
                    item.direction = SortDirection::Desc;
                q.order_by.push_back(std::move(item));
            } while (accept_sym(","));
        }
        if (accept_kw("LIMIT")) {
            Expr first = parse_expr();
            if (accept_kw("OFFSET")) {
                q.limit = std::move(first);
                q.offset = parse_expr();
            } else if (accept_sym(",")) {
                q.offset = std::move(first);
                q.limit = parse_expr();
            } else {
                q.limit = std::move(first);
            }
        }
        if (accept_kw("UNION")) {
            q.set_op = accept_kw("ALL") ? SetOp::UnionAll : SetOp::Union;
        } else if (accept_kw("INTERSECT")) {
            q.set_op = SetOp::Intersect;
        } else if (accept_kw("EXCEPT")) {
            q.set_op = SetOp::Except;
        }
        if (q.set_op != SetOp::None) q.rhs = Box<Query>(parse_query());
        return q;
    }

    SelectCore parse_core() {
        SelectCore core;
        expect_kw("SELECT");
        if (accept_kw("DISTINCT"))
            core.distinct = true;
        else
            accept_kw("ALL");
        do {
            core.columns.push_back(parse_result_column());
        } while (accept_sym(","));
        if (accept_kw("FROM")) core.from = parse_from();
        if (accept_kw("WHERE")) core.where = parse_expr();
        if (accept_kw("GROUP")) {
            expect_kw("BY");
            do {
                core.group_by.push_back(parse_expr());
            } while (accept_sym(","));
        }
        if (accept_kw("HAVING")) core.having = parse_expr();
        return core;
    }

    ResultColumn parse_result_column() {
        ResultColumn col;
        if (accept_sym("*")) {
            col.kind = ResultKind::Star;
            return col;
        }
        const Token& t = peek();
        if ((t.kind == Tok::Word || t.kind == Tok::Quoted) && is_sym(".", 1) && is_sym("*", 2)) {
            col.kind = ResultKind::TableStar;
            col.table = Ident{t.text, t.quote};
            advance();
            advance();
            advance();
            return col;
        }
        col.expr = parse_expr();
        col.alias = parse_alias(col.alias_with_as);
        return col;
    }

    FromClause parse_from() {
        FromClause from;
        from.first = parse_table_ref();
        while (true) {
            Join join;
            if (accept_sym(",")) {
                join.op = ",";
            } else {
                std::vector<std::string> words;
                if (accept_kw("NATURAL")) words.emplace_back("NATURAL");
                if (accept_kw("LEFT")) {
                    words.emplace_back("LEFT");
                    if (accept_kw("OUTER")) words.emplace_back("OUTER");
                } else if (accept_kw("RIGHT")) {
                    words.emplace_back("RIGHT");
                    if (accept_kw("OUTER")) words.emplace_back("OUTER");
                } else if (accept_kw("FULL")) {
                    words.emplace_back("FULL");
                    if (accept_kw("OUTER")) words.emplace_back("OUTER");
                } else if (accept_kw("INNER")) {
                    words.emplace_back("INNER");
                } else if (accept_kw("CROSS")) {
                    words.emplace_back("CROSS");
                }
                if (!accept_kw("JOIN")) {
                    if (!words.empty()) fail("JOIN");
                    break;
                }
                words.emplace_back("JOIN");
                join.op = util::join(words, " ");
            }
            join.table = parse_table_ref();
            if (accept_kw("ON")) {
                join.on = parse_expr();
            } else if (accept_kw("USING")) {
                expect_sym("(");
                do {
                    join.using_columns.push_back(parse_ident());
                } while (accept_sym(","));
                expect_sym(")");
            }
            from.joins.push_back(std::move(join));
        }
        return from;
    }

    TableRef parse_table_ref() {
        TableRef ref;
        if (accept_sym("(")) {
            if (!is_kw("SELECT")) fail("SELECT", "only subqueries may be parenthesized in FROM");
            ref.subquery = Box<Query>(parse_query());
            expect_sym(")");
        } else {
            ref.name.push_back(parse_ident());
            while (accept_sym(".")) ref.name.push_back(parse_ident());
        }
        ref.alias = parse_alias(ref.alias_with_as);
        return ref;
    }

    // ---- expressions, lowest precedence first ----

    Expr parse_expr() { return parse_or(); }

    static Expr binary(std::string op, Expr lhs, Expr rhs) {
        Expr e;
        e.kind = ExprKind::Binary;
        e.text = std::move(op);
        e.args.push_back(std::move(lhs));
        e.args.push_back(std::move(rhs));
        return e;
    }

    Expr parse_or() {
        Expr lhs = parse_and();
        while (accept_kw("OR")) lhs = binary("OR", std::move(lhs), parse_and());
        return lhs;
    }

    Expr parse_and() {
        Expr lhs = parse_not();
        while (accept_kw("AND")) lhs = binary("AND", std::move(lhs), parse_not());
        return lhs;
    }

    Expr parse_not() {
        if (is_kw("NOT") && is_kw("EXISTS", 1)) {
            advance();
            Expr e = parse_exists();
            e.negated = true;
            return e;
        }
        if (accept_kw("NOT")) {
            Expr e;
            e.kind = ExprKind::Unary;
            e.text = "NOT";
            e.args.push_back(parse_not());
            return e;
        }
        return parse_equality();
    }

    Expr parse_equality() {
        Expr lhs = parse_comparison();
        while (true) {
            const Token& t = peek();
            if (t.kind == Tok::Symbol && (t.text == "=" || t.text == "==" || t.text == "!=" || t.text == "<>")) {
                const std::string op = (t.text == "=" || t.text == "==") ? "=" : "!=";
                advance();
                lhs = binary(op, std::move(lhs), parse_comparison());
                continue;
            }
            if (accept_kw("IS")) {
                const bool neg = accept_kw("NOT");
                lhs = binary(neg ? "IS NOT" : "IS", std::move(lhs), parse_comparison());
                continue;
            }
            if (is_kw("ISNULL") || is_kw("NOTNULL") || (is_kw("NOT") && is_kw("NULL", 1))) {
                Expr e;
                e.kind = ExprKind::IsNull;
                if (accept_kw("NOT")) {
                    advance();
                    e.text = "NOT NULL";
                } else {
                    e.text = util::to_upper(advance().text);
                }
                e.args.push_back(std::move(lhs));
                lhs = std::move(e);
                continue;
            }
            bool negated = false;
            if (is_kw("NOT") && (is_kw("IN", 1) || is_kw("LIKE", 1) || is_kw("GLOB", 1) || is_kw("REGEXP", 1) ||
                                 is_kw("MATCH", 1) || is_kw("BETWEEN", 1))) {
                advance();
                negated = true;
            }
            if (accept_kw("IN")) {
                lhs = parse_in_tail(std::move(lhs), negated);
                continue;
            }
            if (is_kw("LIKE") || is_kw("GLOB") || is_kw("REGEXP") || is_kw("MATCH")) {
                Expr e;
                e.kind = ExprKind::Like;
                e.text = util::to_upper(advance().text);
                e.negated = negated;
                e.args.push_back(std::move(lhs));
                e.args.push_back(parse_comparison());
                if (accept_kw("ESCAPE")) e.args.push_back(parse_comparison());
                lhs = std::move(e);
                continue;
            }
            if (accept_kw("BETWEEN")) {
                Expr e;
                e.kind = ExprKind::Between;
                e.negated = negated;
                e.args.push_back(std::move(lhs));
                e.args.push_back(parse_comparison());
                expect_kw("AND");
                e.args.push_back(parse_comparison());
                lhs = std::move(e);
                continue;
            }
            if (negated) fail("IN, LIKE or BETWEEN after NOT");
            return lhs;
        }
    }

    Expr parse_in_tail(Expr lhs, bool negated) {
        expect_sym("(");
        Expr e;
        e.negated = negated;
        e.args.push_back(std::move(lhs));
        if (is_kw("SELECT")) {
            e.kind = ExprKind::InQuery;
            e.subquery = Box<Query>(parse_query());
        } else {
            e.kind = ExprKind::InList;
            if (!is_sym(")")) {
                do {
                    e.args.push_back(parse_expr());
                } while (accept_sym(","));
            }
        }
        expect_sym(")");
        return e;
    }

    template <typename Next>
    Expr parse_binary_level(std::initializer_list<std::string_view> ops, Next next) {
        Expr lhs = (this->*next)();
        while (true) {
            const Token& t = peek();
            if (t.kind != Tok::Symbol || std::find(ops.begin(), ops.end(), t.text) == ops.end()) return lhs;
            std::string op = t.text;
            advance();
            lhs = binary(std::move(op), std::move(lhs), (this->*next)());
        }
    }

    Expr parse_comparison() { return parse_binary_level({"<", "<=", ">", ">="}, &Parser::parse_bitwise); }
    Expr parse_bitwise() { return parse_binary_level({"&", "|", "<<", ">>"}, &Parser::parse_additive); }
    Expr parse_additive() { return parse_binary_level({"+", "-"}, &Parser::parse_multiplicative); }
    Expr parse_multiplicative() { return parse_binary_level({"*", "/", "%"}, &Parser::parse_concat); }
    Expr parse_concat() { return parse_binary_level({"||"}, &Parser::parse_unary); }

    Expr parse_unary() {
        const Token& t = peek();
        if (t.kind == Tok::Symbol && (t.text == "-" || t.text == "+" || t.text == "~")) {
            Expr e;
            e.kind = ExprKind::Unary;
            e.text = t.text;
            advance();
            e.args.push_back(parse_unary());
            return e;
        }
        Expr e = parse_primary();
        while (accept_kw("COLLATE")) {
            Expr c;
            c.kind = ExprKind::Collate;
            c.text = parse_ident().name;
            c.args.push_back(std::move(e));
            e = std::move(c);
        }
        return e;
    }

    Expr parse_exists() {
        expect_kw("EXISTS");
        expect_sym("(");
        Expr e;
        e.kind = ExprKind::Exists;
        e.subquery = Box<Query>(parse_query());
        expect_sym(")");
        return e;
    }

    Expr parse_case() {
        Expr e;
        e.kind = ExprKind::Case;
        if (!is_kw("WHEN")) {
            e.case_has_operand = true;
            e.args.push_back(parse_expr());
        }
        if (!is_kw("WHEN")) fail("WHEN");
        while (accept_kw("WHEN")) {
            e.args.push_back(parse_expr());
            expect_kw("THEN");
            e.args.push_back(parse_expr());
        }
        if (accept_kw("ELSE")) {
            e.case_has_else = true;
            e.args.push_back(parse_expr());
        }
        expect_kw("END");
        return e;
    }

    Expr parse_cast() {
        expect_sym("(");
        Expr e;
        e.kind = ExprKind::Cast;
        e.args.push_back(parse_expr());
        expect_kw("AS");
        std::vector<std::string> words;
        while (peek().kind == Tok::Word || peek().kind == Tok::Quoted) words.push_back(util::to_upper(advance().text));
        if (words.empty()) fail("type name");
        e.text = util::join(words, " ");
        if (accept_sym("(")) {
            e.text += "(";
            do {
                if (peek().kind != Tok::Number) fail("type size");
                e.text += advance().text;
                if (is_sym(",")) e.text += ", ";
            } while (accept_sym(","));
            expect_sym(")");
            e.text += ")";
        }
        expect_sym(")");
        return e;
    }

    Expr parse_function(std::string name) {
        Expr e;
        e.kind = ExprKind::Function;
        e.text = std::move(name);
        expect_sym("(");
        if (accept_sym(")")) return e;
        if (accept_sym("*")) {
            Expr star;
            star.kind = ExprKind::Star;
            e.args.push_back(std::move(star));
            expect_sym(")");
            return e;
        }
        if (accept_kw("DISTINCT")) e.distinct = true;
        do {
            e.args.push_back(parse_expr());
        } while (accept_sym(","));
        expect_sym(")");
        return e;
    }

    Expr parse_column_path() {
        Expr e;
        e.kind = ExprKind::Column;
        e.path.push_back(parse_ident());
        while (accept_sym(".")) e.path.push_back(parse_ident());
        return e;
    }

    Expr parse_primary() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Number: {
                Expr e;
                e.kind = ExprKind::Literal;
                e.literal_kind = LiteralKind::Number;
                e.text = advance().text;
                return e;
            }
            case Tok::String: {
                Expr e;
                e.kind = ExprKind::Literal;
                e.literal_kind = LiteralKind::String;
                e.text = advance().text;
                return e;
            }
            case Tok::Quoted:
                return parse_column_path();
            case Tok::Symbol:
                if (t.text == "(") {
                    advance();
                    Expr e;
                    if (is_kw("SELECT")) {
                        e.kind = ExprKind::Subquery;
                        e.subquery = Box<Query>(parse_query());
                    } else {
                        e.kind = ExprKind::Paren;
                        e.args.push_back(parse_expr());
                    }
                    expect_sym(")");
                    return e;
                }
                fail("expression");
            case Tok::Word: {
                const std::string upper = util::to_upper(t.text);
                if (upper == "NULL") {
                    advance();
                    Expr e;
                    e.kind = ExprKind::Literal;
                    e.literal_kind = LiteralKind::Null;
                    e.text = "NULL";
                    return e;
                }
                if (upper == "CURRENT_DATE" || upper == "CURRENT_TIME" || upper == "CURRENT_TIMESTAMP" ||
                    upper == "TRUE" || upper == "FALSE") {
                    advance();
                    Expr e;
                    e.kind = ExprKind::Literal;
                    e.literal_kind = LiteralKind::Keyword;
                    e.text = upper;
                    return e;
                }
                if (upper == "CASE") {
                    advance();
                    return parse_case();
                }
                if (upper == "CAST") {
                    advance();
                    return parse_cast();
                }
                if (upper == "EXISTS") return parse_exists();
                if (is_sym("(", 1) && (!is_reserved(t) || reserved_function_name(upper))) {
                    advance();
                    return parse_function(upper);
                }
                if (is_reserved(t)) fail("expression");
                return parse_column_path();
            }
            case Tok::End:
                fail("expression");
        }
        fail("expression");
    }
};

// ---- rendering ----

std::string render_ident(const Ident& id) {
    switch (id.quote) {
        case '"':
            return "\"" + util::replace_all(id.name, "\"", "\"\"") + "\"";
        case '`':
            return "`" + util::replace_all(id.name, "`", "``") + "`";
        case '[':
            return "[" + id.name + "]";
        case '\'':
            return "'" + util::replace_all(id.name, "'", "''") + "'";
        default:
            return id.name;
    }
}

std::string render_path(const std::vector<Ident>& path) {
    std::string out;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i) out += '.';
        out += render_ident(path[i]);
    }
    return out;
}

std::string render_alias(const std::optional<Ident>& alias, bool with_as) {
    if (!alias) return {};
    return (with_as ? " AS " : " ") + render_ident(*alias);
}

std::string render_query(const Query& q);

std::string render_args(const std::vector<Expr>& args, std::size_t from = 0) {
    std::string out;
    for (std::size_t i = from; i < args.size(); ++i) {
        if (i > from) out += ", ";
        out += render_expr(args[i]);
    }
    return out;
}

std::string render_table_ref(const TableRef& ref) {
    std::string out = ref.is_subquery() ? "(" + render_query(*ref.subquery) + ")" : render_path(ref.name);
    return out + render_alias(ref.alias, ref.alias_with_as);
}

std::string render_core(const SelectCore& core) {
    std::string out = "SELECT ";
    if (core.distinct) out += "DISTINCT ";
    for (std::size_t i = 0; i < core.columns.size(); ++i) {
        if (i) out += ", ";
        const ResultColumn& col = core.columns[i];
        switch (col.kind) {
            case ResultKind::Star:
                out += "*";
                break;
            case ResultKind::TableStar:
                out += render_ident(col.table) + ".*";
                break;
            case ResultKind::Expr:
                out += render_expr(col.expr) + render_alias(col.alias, col.alias_with_as);
                break;
        }
    }
    if (core.from) {
        out += " FROM " + render_table_ref(core.from->first);
        for (const Join& j : core.from->joins) {
            out += j.is_comma() ? ", " : " " + j.op + " ";
            out += render_table_ref(j.table);
            if (j.on) out += " ON " + render_expr(*j.on);
            if (!j.using_columns.empty()) {
                out += " USING (";
                for (std::size_t i = 0; i < j.using_columns.size(); ++i) {
                    if (i) out += ", ";
                    out += render_ident(j.using_columns[i]);
                }
                out += ")";
            }
        }
    }
    if (core.where) out += " WHERE " + render_expr(*core.where);
    if (!core.group_by.empty()) out += " GROUP BY " + render_args(core.group_by);
    if (core.having) out += " HAVING " + render_expr(*core.having);
    return out;
}

std::string render_query(const Query& q) {
    std::string out = render_core(q.core);
    if (!q.order_by.empty()) {
        out += " ORDER BY ";
        for (std::size_t i = 0; i < q.order_by.size(); ++i) {
            if (i) out += ", ";
            out += render_expr(q.order_by[i].expr);
            if (q.order_by[i].direction == SortDirection::Asc) out += " ASC";
            if (q.order_by[i].direction == SortDirection::Desc) out += " DESC";
        }
    }
    if (q.limit) out += " LIMIT " + render_expr(*q.limit);
    if (q.offset) out += " OFFSET " + render_expr(*q.offset);
    switch (q.set_op) {
        case SetOp::None:
            break;
        case SetOp::Union:
            out += " UNION ";
            break;
        case SetOp::UnionAll:
            out += " UNION ALL ";
            break;
        case SetOp::Intersect:
            out += " INTERSECT ";
            break;
        case SetOp::Except:
            out += " EXCEPT ";
            break;
    }
    if (q.set_op != SetOp::None && q.rhs) out += render_query(*q.rhs);
    return out;
}

}  // namespace

std::string render_expr(const Expr& e) {
    const std::string neg = e.negated ? "NOT " : "";
    switch (e.kind) {
        case ExprKind::Literal:
            if (e.literal_kind == LiteralKind::String) return "'" + util::replace_all(e.text, "'", "''") + "'";
            return e.text;
        case ExprKind::Column:
            return render_path(e.path);
        case ExprKind::Star:
            return "*";
        case ExprKind::Unary: {
            if (e.text == "NOT") return "NOT " + render_expr(e.args[0]);
            std::string operand = render_expr(e.args[0]);
            const bool space = !operand.empty() && (operand[0] == '-' || operand[0] == '+');
            return e.text + (space ? " " : "") + operand;
        }
        case ExprKind::Binary:
            return render_expr(e.args[0]) + " " + e.text + " " + render_expr(e.args[1]);
        case ExprKind::Function: {
            std::string out = e.text + "(";
            if (e.distinct) out += "DISTINCT ";
            return out + render_args(e.args) + ")";
        }
        case ExprKind::Case: {
            std::string out = "CASE";
            std::size_t i = 0;
            if (e.case_has_operand) out += " " + render_expr(e.args[i++]);
            const std::size_t end = e.args.size() - (e.case_has_else ? 1 : 0);
            for (; i + 1 < end; i += 2)
                out += " WHEN " + render_expr(e.args[i]) + " THEN " + render_expr(e.args[i + 1]);
            if (e.case_has_else) out += " ELSE " + render_expr(e.args.back());
            return out + " END";
        }
        case ExprKind::Cast:
            return "CAST(" + render_expr(e.args[0]) + " AS " + e.text + ")";
        case ExprKind::Between:
            return render_expr(e.args[0]) + " " + neg + "BETWEEN " + render_expr(e.args[1]) + " AND " +
                   render_expr(e.args[2]);
        case ExprKind::InList:
            return render_expr(e.args[0]) + " " + neg + "IN (" + render_args(e.args, 1) + ")";
        case ExprKind::InQuery:
            return render_expr(e.args[0]) + " " + neg + "IN (" + render_query(*e.subquery) + ")";
        case ExprKind::Exists:
            return neg + "EXISTS (" + render_query(*e.subquery) + ")";
        case ExprKind::Subquery:
            return "(" + render_query(*e.subquery) + ")";
        case ExprKind::IsNull:
            return render_expr(e.args[0]) + " " + e.text;
        case ExprKind::Like: {
            std::string out = render_expr(e.args[0]) + " " + neg + e.text + " " + render_expr(e.args[1]);
            if (e.args.size() > 2) out += " ESCAPE " + render_expr(e.args[2]);
            return out;
        }
        case ExprKind::Collate:
            return render_expr(e.args[0]) + " COLLATE " + e.text;
        case ExprKind::Paren:
            return "(" + render_expr(e.args[0]) + ")";
    }
    return {};
}

SqlAst parse_sql(std::string_view text, Dialect) {
    Parser parser(text);
    return parser.parse_statement();
}

std::string render_sql(const SqlAst& ast) { return render_query(ast); }

}  // namespace nl2sql360::sql
