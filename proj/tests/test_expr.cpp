#include <gtest/gtest.h>

#include <optional>
#include <vector>

#include "sbst/error.hpp"
#include "sbst/expr.hpp"

using namespace sbst;

namespace {

double eval(const std::string& text, double sp = 0.0, double sim = 0.0, double step = 0.0) {
    const BoundExpr bound(Expr::parse(text), [](std::string_view name) -> std::optional<std::size_t> {
        if (name == "Hecate_sp") return 0;
        return std::nullopt;
    });
    const std::vector<double> slots{sp};
    return bound.evaluate(slots, sim, step);
}

}  // namespace

TEST(Expr, Precedence) {
    EXPECT_EQ(eval("1 + 2 * 3"), 7.0);
    EXPECT_EQ(eval("(1 + 2) * 3"), 9.0);
    EXPECT_EQ(eval("8 - 2 - 1"), 5.0);
    EXPECT_EQ(eval("8 / 4 / 2"), 1.0);
    EXPECT_EQ(eval("-2 * -3"), 6.0);
    EXPECT_EQ(eval("- (4 - 6)"), 2.0);
}

TEST(Expr, ReferencesAndTime) {
    EXPECT_EQ(eval("Hecate_sp / 5 * step_time()", 10.0, 0.0, 2.5), 5.0);
    EXPECT_EQ(eval("sim_time() - 10", 0.0, 12.0, 0.0), 2.0);
    EXPECT_EQ(eval("1.5e1"), 15.0);
}

TEST(Expr, Introspection) {
    const auto e = Expr::parse("Hecate_sp - Hecate_sp / 5 * step_time() + offset");
    EXPECT_EQ(e.references(), (std::vector<std::string>{"Hecate_sp", "offset"}));
    EXPECT_TRUE(e.uses_time());
    EXPECT_FALSE(Expr::parse("Hecate_sp + 1").uses_time());
    EXPECT_TRUE(Expr::parse("1 / (2 - 2)").has_constant_zero_divisor());
    EXPECT_FALSE(Expr::parse("1 / Hecate_sp").has_constant_zero_divisor());
}

TEST(Expr, SubstituteFoldsConstants) {
    const auto e = Expr::parse("Hecate_sp / 5 * step_time()").substitute({{"Hecate_sp", 10.0}});
    EXPECT_TRUE(e.references().empty());
    EXPECT_EQ(eval(e.to_string(), 0.0, 0.0, 3.0), 6.0);
    EXPECT_EQ(Expr::parse("2 * 3 + 1").substitute({}).kind(), Expr::Kind::Constant);
}

TEST(Expr, ToStringRoundTrips) {
    for (const char* text : {"a - (b - c)", "-(a + 1) * 2", "a / (b * c)", "sim_time() - step_time()"}) {
        const auto e = Expr::parse(text);
        EXPECT_EQ(Expr::parse(e.to_string()).to_string(), e.to_string()) << text;
    }
}

TEST(Expr, ParseErrors) {
    for (const char* text : {"", "1 +", "(1", "1)", "foo()", "2 ** 3", "1 2", "$x"}) {
        EXPECT_THROW(Expr::parse(text), Error) << text;
    }
}

TEST(Expr, DivisionByZeroAtEvaluation) {
    EXPECT_THROW(eval("1 / Hecate_sp", 0.0), EvalError);
    EXPECT_EQ(eval("1 / Hecate_sp", 4.0), 0.25);
}

TEST(Expr, UnboundReferenceRejected) {
    EXPECT_THROW(eval("speed + 1"), Error);
}
