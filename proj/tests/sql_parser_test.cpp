#include <gtest/gtest.h>

#include "nl2sql360/sql/parser.hpp"
#include "support/sql_corpus.hpp"

using namespace nl2sql360;
using namespace nl2sql360::sql;

TEST(ParseSql, MinimalStatementHasOneItemNoTables) {
    const SqlAst ast = parse_sql("SELECT 1");
    ASSERT_EQ(ast.core.columns.size(), 1u);
    EXPECT_EQ(ast.core.columns[0].expr.kind, ExprKind::Literal);
    EXPECT_FALSE(ast.core.from.has_value());
    EXPECT_EQ(ast.set_op, SetOp::None);
}

TEST(ParseSql, ScalarSubqueryInWhere) {
    const SqlAst ast = parse_sql("SELECT a FROM t WHERE b > (SELECT MAX(b) FROM t)");
    ASSERT_TRUE(ast.core.where.has_value());
    const Expr& cmp = *ast.core.where;
    ASSERT_EQ(cmp.kind, ExprKind::Binary);
    EXPECT_EQ(cmp.text, ">");
    ASSERT_EQ(cmp.args[1].kind, ExprKind::Subquery);
    const Query& sub = *cmp.args[1].subquery;
    EXPECT_EQ(sub.core.columns[0].expr.kind, ExprKind::Function);
    EXPECT_EQ(sub.core.columns[0].expr.text, "MAX");
}

TEST(ParseSql, MissingSelectListReportsOffset) {
    try {
        parse_sql("SELECT FROM");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 7u);
        EXPECT_EQ(e.expected(), "expression");
    }
}

TEST(ParseSql, ErrorPaths) {
    EXPECT_THROW(parse_sql(""), ParseError);
    EXPECT_THROW(parse_sql("   "), ParseError);
    EXPECT_THROW(parse_sql("SELECT a FROM t WHERE"), ParseError);
    EXPECT_THROW(parse_sql("SELECT 'unterminated"), ParseError);
    EXPECT_THROW(parse_sql("SELECT a FROM t t2 t3"), ParseError);
    EXPECT_THROW(parse_sql("SELECT a FROM (t JOIN u)"), ParseError);
    EXPECT_THROW(parse_sql("SELECT a FROM t LEFT u"), ParseError);
    EXPECT_THROW(parse_sql("SELECT CASE END"), ParseError);
    EXPECT_THROW(parse_sql("DROP TABLE t"), ParseError);
    EXPECT_THROW(parse_sql("SELECT a # b"), ParseError);

    try {
        parse_sql("SELECT a FROM t WHERE b NOT 3");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 24u);
    }
}

TEST(ParseSql, OperatorPrecedence) {
    const SqlAst ast = parse_sql("SELECT x FROM t WHERE p=1 AND q=2 OR r=3");
    const Expr& w = *ast.core.where;
    ASSERT_EQ(w.text, "OR");
    EXPECT_EQ(w.args[0].text, "AND");
    EXPECT_EQ(w.args[1].text, "=");

    const SqlAst arith = parse_sql("SELECT a + b * c - d FROM t");
    const Expr& e = arith.core.columns[0].expr;
    ASSERT_EQ(e.text, "-");
    EXPECT_EQ(e.args[0].text, "+");
    EXPECT_EQ(e.args[0].args[1].text, "*");

    const SqlAst between = parse_sql("SELECT a FROM t WHERE a BETWEEN 1 AND 2 AND b = 3");
    const Expr& top = *between.core.where;
    ASSERT_EQ(top.text, "AND");
    EXPECT_EQ(top.args[0].kind, ExprKind::Between);
}

TEST(ParseSql, CompoundNestsToTheRight) {
    const SqlAst ast = parse_sql("SELECT a FROM t UNION SELECT b FROM u INTERSECT SELECT c FROM v ORDER BY c");
    EXPECT_EQ(ast.set_op, SetOp::Union);
    ASSERT_TRUE(ast.rhs);
    EXPECT_EQ(ast.rhs->set_op, SetOp::Intersect);
    ASSERT_TRUE(ast.rhs->rhs);
    EXPECT_EQ(ast.rhs->rhs->order_by.size(), 1u);
}

TEST(ParseSql, JoinsAndAliases) {
    const SqlAst ast = parse_sql(
        "SELECT T1.a FROM t AS T1 LEFT OUTER JOIN u T2 ON T1.id = T2.id, v JOIN w USING (k)");
    ASSERT_TRUE(ast.core.from);
    const FromClause& from = *ast.core.from;
    EXPECT_EQ(from.first.alias->name, "T1");
    EXPECT_TRUE(from.first.alias_with_as);
    ASSERT_EQ(from.joins.size(), 3u);
    EXPECT_EQ(from.joins[0].op, "LEFT OUTER JOIN");
    EXPECT_EQ(from.joins[0].table.alias->name, "T2");
    EXPECT_TRUE(from.joins[1].is_comma());
    EXPECT_EQ(from.joins[2].using_columns.size(), 1u);
}

TEST(ParseSql, QuotedIdentifiersKeepTheirSpelling) {
    const SqlAst ast = parse_sql("SELECT `date`, \"Player Name\", [x y] FROM `transaction`");
    EXPECT_EQ(ast.core.columns[0].expr.path[0], (Ident{"date", '`'}));
    EXPECT_EQ(ast.core.columns[1].expr.path[0], (Ident{"Player Name", '"'}));
    EXPECT_EQ(ast.core.columns[2].expr.path[0], (Ident{"x y", '['}));
    EXPECT_EQ(render_sql(ast), "SELECT `date`, \"Player Name\", [x y] FROM `transaction`");
}

TEST(ParseSql, LimitCommaFormIsOffsetFirst) {
    const SqlAst ast = parse_sql("SELECT a FROM t LIMIT 5, 10");
    EXPECT_EQ(ast.limit->text, "10");
    EXPECT_EQ(ast.offset->text, "5");
}

TEST(RenderSql, CanonicalCasingAndSpacing) {
    EXPECT_EQ(render_sql(parse_sql("select  1")), "SELECT 1");
    EXPECT_EQ(render_sql(parse_sql("select count ( * ) from   singer")), "SELECT COUNT(*) FROM singer");
    EXPECT_EQ(render_sql(parse_sql("SELECT a FROM t ORDER BY a")), "SELECT a FROM t ORDER BY a");
    EXPECT_EQ(render_sql(parse_sql("select a from t where b <> 'it''s'")), "SELECT a FROM t WHERE b != 'it''s'");
    EXPECT_EQ(render_sql(parse_sql("SELECT - -1")), "SELECT - -1");
}

TEST(RenderSql, RoundTripOverCorpus) {
    for (const std::string& sql : test_support::sql_corpus()) {
        SCOPED_TRACE(sql);
        const SqlAst ast = parse_sql(sql);
        const std::string rendered = render_sql(ast);
        const SqlAst again = parse_sql(rendered);
        EXPECT_EQ(again, ast);
        EXPECT_EQ(render_sql(again), rendered);
    }
}

TEST(SqlAst, CopiesAreDeepAndEqual) {
    const SqlAst ast = parse_sql("SELECT a FROM t WHERE b IN (SELECT c FROM u)");
    SqlAst copy = ast;
    EXPECT_EQ(copy, ast);
    copy.core.where->subquery->core.columns[0].expr.path[0].name = "z";
    EXPECT_NE(copy, ast);
    EXPECT_EQ(ast.core.where->subquery->core.columns[0].expr.path[0].name, "c");
}
