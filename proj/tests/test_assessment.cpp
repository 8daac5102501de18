#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sbst/assessment.hpp"
#include "sbst/error.hpp"
#include "sbst/format.hpp"
#include "support.hpp"

using namespace sbst;

TEST(Assessment, Fig3bFailsOnConstantTwelve) {
    const auto v = evaluate(builtin_assessment("fig3b"), test::constant_speed(12.0, 35.0, 1e-3));
    EXPECT_FALSE(v.passed);
    EXPECT_EQ(v.fitness, -1.0);
    ASSERT_TRUE(v.first_violation.has_value());
    EXPECT_NEAR(*v.first_violation, 6.0, 1e-9);
    EXPECT_FALSE(v.vacuous);
}

TEST(Assessment, Fig3bPassesOnConstantTen) {
    const auto v = evaluate(builtin_assessment("fig3b"), test::constant_speed(10.0, 35.0, 1e-3));
    EXPECT_TRUE(v.passed);
    EXPECT_EQ(v.fitness, 1.0);
    EXPECT_FALSE(v.first_violation.has_value());
}

TEST(Assessment, Fig3bShape) {
    const auto a = builtin_assessment("fig3b");
    ASSERT_EQ(a.steps.size(), 4u);
    ASSERT_EQ(a.transitions.size(), 4u);
    const double afters[] = {6, 4, 16, 4};
    for (int i = 0; i < 4; ++i) EXPECT_EQ(a.transitions[i].after, afters[i]);
    EXPECT_THROW(builtin_assessment("r9"), Error);
}

TEST(Assessment, Fig3bOnlyChecksActiveWindows) {
    // Speed 50 everywhere except inside the two verify windows [6,10) and [26,30).
    const auto grid = TimeGrid::covering(35.0, 1e-3);
    std::vector<double> v(grid.size(), 50.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.time_at(k);
        if ((t >= 6.0 - 1e-9 && t < 10.0 - 1e-9) || (t >= 26.0 - 1e-9 && t < 30.0 - 1e-9)) v[k] = 9.0;
    }
    const auto verdict = evaluate(builtin_assessment("fig3b"), test::speed_trace(v, 1e-3));
    EXPECT_TRUE(verdict.passed);
    EXPECT_EQ(verdict.fitness, 2.0);
}

TEST(Assessment, R2OnConstantTen) {
    const auto v = evaluate(builtin_assessment("r2"), test::constant_speed(10.0));
    EXPECT_TRUE(v.passed);
    EXPECT_EQ(v.fitness, 160.0);
}

TEST(Assessment, R1SignOfMinimum) {
    auto samples = std::vector<double>(351, 3.0);
    samples[200] = -0.5;
    const auto v = evaluate(builtin_assessment("r1"), test::speed_trace(samples));
    EXPECT_FALSE(v.passed);
    EXPECT_EQ(v.fitness, -0.5);
    EXPECT_NEAR(*v.first_violation, 20.0, 1e-9);
}

TEST(Assessment, R3UsesAdditiveMargin) {
    const auto grid = TimeGrid::covering(10.0, 0.1);
    const Trace t(grid, {{"desired_speed", Unit::Rpm, std::vector<double>(grid.size(), 10.0)},
                         {"measured_speed", Unit::Rpm, std::vector<double>(grid.size(), 10.5)}});
    EXPECT_DOUBLE_EQ(evaluate(builtin_assessment("r3"), t).fitness, 0.5);
    EXPECT_DOUBLE_EQ(evaluate(builtin_assessment("r3", 2.0), t).fitness, 1.5);
}

TEST(Assessment, NonStrictBoundary) {
    EXPECT_TRUE(evaluate(builtin_assessment("r2"), test::constant_speed(170.0)).passed);
    EXPECT_TRUE(evaluate_boolean_oracle(builtin_assessment("r2"), test::constant_speed(170.0)).holds);
    EXPECT_FALSE(evaluate(builtin_assessment("r2"), test::constant_speed(170.1)).passed);
    EXPECT_FALSE(evaluate_boolean_oracle(builtin_assessment("r2"), test::constant_speed(170.1)).holds);
}

TEST(Assessment, VacuousWhenNoVerifyActive) {
    // Shorter than the first fig3b window.
    const auto v = evaluate(builtin_assessment("fig3b"), test::constant_speed(500.0, 5.0));
    EXPECT_TRUE(v.passed);
    EXPECT_TRUE(v.vacuous);
    EXPECT_TRUE(std::isinf(v.fitness));
    EXPECT_TRUE(evaluate_boolean_oracle(builtin_assessment("fig3b"), test::constant_speed(500.0, 5.0)).vacuous);
}

TEST(Assessment, ThresholdDecidesVerdict) {
    const auto t = test::constant_speed(10.0);
    EXPECT_TRUE(evaluate(builtin_assessment("r2"), t, 160.0).passed);
    EXPECT_FALSE(evaluate(builtin_assessment("r2"), t, 160.5).passed);
    EXPECT_THROW(evaluate(builtin_assessment("r2"), t, std::nan("")), Error);
}

TEST(Assessment, MissingChannelIsAnError) {
    const TimeGrid grid(0.0, 0.1, 10);
    const Trace t(grid, {{"speed", Unit::Rpm, std::vector<double>(10, 1.0)}});
    EXPECT_THROW(evaluate(builtin_assessment("r1"), t), Error);
}

TEST(Assessment, PredicateParsing) {
    const auto p = Predicate::parse("measured_speed <= desired_speed + 1");
    EXPECT_EQ(p.op, CmpOp::Le);
    EXPECT_EQ(Predicate::parse(p.to_string()).to_string(), p.to_string());
    EXPECT_EQ(Predicate::parse("a > 2").op, CmpOp::Gt);
    EXPECT_THROW(Predicate::parse("a + 1"), Error);
    EXPECT_THROW(Predicate::parse("a <= b <= c"), Error);
}

TEST(Assessment, ValidateRejectsTimeAndZeroDivisors) {
    auto a = builtin_assessment("r2");
    a.steps[0].verifies.push_back(Predicate::parse("measured_speed <= sim_time()"));
    EXPECT_FALSE(validate(a).empty());
    a = builtin_assessment("r2");
    a.steps[0].verifies.push_back(Predicate::parse("measured_speed / 0 <= 1"));
    EXPECT_FALSE(validate(a).empty());
    for (const auto& name : builtin_assessment_names()) EXPECT_TRUE(validate(builtin_assessment(name)).empty());
}

TEST(Assessment, JsonParsing) {
    const char* doc = R"({
        "name": "windowed",
        "initial": "wait",
        "steps": [
            {"name": "wait"},
            {"name": "check", "verifies": ["measured_speed <= 11"]}
        ],
        "transitions": [{"from": "wait", "after": 6, "next": "check"}]
    })";
    const auto a = parse_assessment(doc);
    EXPECT_TRUE(validate(a).empty());
    const auto v = evaluate(a, test::constant_speed(12.0, 35.0, 1e-3));
    EXPECT_EQ(v.fitness, -1.0);
    EXPECT_FALSE(validate(parse_assessment(R"({"steps": [], "initial": "x"})")).empty());
    EXPECT_THROW(parse_assessment(R"({"steps": []})"), Error);
    EXPECT_THROW(parse_assessment(R"({"steps": [{"name": "a", "verifies": ["x + 1"]}], "initial": "a"})"), Error);
}

namespace {

struct RandomCase {
    Assessment assessment;
    Trace trace;
};

RandomCase random_case(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> level(-20.0, 200.0);
    std::uniform_int_distribution<int> coin(0, 1);
    const std::size_t n = 20 + rng() % 200;
    const TimeGrid grid(0.0, 0.1, n);

    // Random walks, occasionally with plateaus that hit bounds exactly.
    std::vector<double> a(n), b(n);
    double x = level(rng), y = level(rng);
    for (std::size_t k = 0; k < n; ++k) {
        if (rng() % 10 != 0) {
            x += std::uniform_real_distribution<double>(-8.0, 8.0)(rng);
            y += std::uniform_real_distribution<double>(-8.0, 8.0)(rng);
        }
        a[k] = std::round(x);
        b[k] = std::round(y);
    }
    Trace trace(grid, {{"measured_speed", Unit::Rpm, a}, {"desired_speed", Unit::Rpm, b}});

    const char* lhs_pool[] = {"measured_speed", "desired_speed", "measured_speed - desired_speed",
                              "2 * measured_speed", "-measured_speed"};
    const char* rhs_pool[] = {"desired_speed + 1", "0", "measured_speed / 2"};
    auto predicate = [&] {
        const std::string lhs = lhs_pool[rng() % 5];
        const std::string op = coin(rng) ? " <= " : " >= ";
        const std::string rhs = coin(rng) ? std::to_string(static_cast<int>(level(rng))) : rhs_pool[rng() % 3];
        return Predicate::parse(lhs + op + rhs);
    };

    Assessment as;
    as.name = "random";
    const int steps = 1 + static_cast<int>(rng() % 4);
    for (int s = 0; s < steps; ++s) {
        AssessStep step{"s" + std::to_string(s), {}};
        const int preds = static_cast<int>(rng() % 3);
        for (int p = 0; p < preds; ++p) step.verifies.push_back(predicate());
        as.steps.push_back(step);
    }
    for (int s = 0; s + 1 < steps; ++s) {
        const double after = 0.1 * static_cast<double>(1 + rng() % 60);
        as.transitions.push_back({"s" + std::to_string(s), after, "s" + std::to_string(s + 1)});
    }
    if (steps > 1 && coin(rng)) as.transitions.push_back({"s" + std::to_string(steps - 1), 0.1 * (1 + rng() % 30), "s0"});
    as.initial = "s0";
    return {as, trace};
}

}  // namespace

TEST(AssessmentProperty, RobustVerdictAgreesWithBooleanOracle) {
    std::mt19937_64 rng(2024);
    int vacuous = 0, failing = 0;
    for (int i = 0; i < 2000; ++i) {
        const auto c = random_case(rng);
        const auto verdict = evaluate(c.assessment, c.trace);
        const auto oracle = evaluate_boolean_oracle(c.assessment, c.trace);
        ASSERT_EQ(verdict.passed, oracle.holds) << "case " << i;
        ASSERT_EQ(verdict.vacuous, oracle.vacuous) << "case " << i;
        vacuous += oracle.vacuous;
        failing += !oracle.holds;
    }
    // The generator must exercise both outcomes.
    EXPECT_GT(failing, 200);
    EXPECT_LT(failing, 1800);
    EXPECT_GT(vacuous, 0);
}

TEST(AssessmentProperty, StrictSignSoundness) {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 500; ++i) {
        auto c = random_case(rng);
        for (auto& s : c.assessment.steps) {
            for (auto& p : s.verifies) p.op = p.op == CmpOp::Le ? CmpOp::Lt : CmpOp::Gt;
        }
        const auto verdict = evaluate(c.assessment, c.trace);
        const auto oracle = evaluate_boolean_oracle(c.assessment, c.trace);
        if (verdict.fitness < 0) ASSERT_FALSE(oracle.holds) << i;
        if (verdict.fitness > 0) ASSERT_TRUE(oracle.holds) << i;
    }
}

TEST(AssessmentProperty, TranslationInvariance) {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 50 + rng() % 100;
        std::vector<double> v(n);
        for (auto& x : v) x = std::uniform_real_distribution<double>(0.0, 180.0)(rng);
        const double c = std::uniform_real_distribution<double>(-50.0, 50.0)(rng);
        std::vector<double> shifted(v);
        for (auto& x : shifted) x += c;

        Assessment base = builtin_assessment("r2");
        Assessment moved = base;
        moved.steps[0].verifies[0] = Predicate::parse("measured_speed <= " + format_double(170.0 + c));
        const double f0 = evaluate(base, test::speed_trace(v)).fitness;
        const double f1 = evaluate(moved, test::speed_trace(shifted)).fitness;
        ASSERT_NEAR(f0, f1, 1e-9);
    }
}

TEST(AssessmentProperty, FitnessDecreasesWithWindowMaximum) {
    const auto a = builtin_assessment("fig3b");
    double previous = std::numeric_limits<double>::infinity();
    for (double peak = 0.0; peak <= 30.0; peak += 0.5) {
        const auto grid = TimeGrid::covering(35.0, 1e-3);
        std::vector<double> v(grid.size(), 5.0);
        v[7000] = peak;  // t = 7, inside the first window
        const double f = evaluate(a, test::speed_trace(v, 1e-3)).fitness;
        if (peak > 5.0) {
            ASSERT_LT(f, previous);
            EXPECT_DOUBLE_EQ(f, 11.0 - peak);
        }
        previous = f;
    }
}
