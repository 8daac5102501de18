#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sbst/error.hpp"
#include "sbst/step_machine.hpp"
#include "sbst/testseq.hpp"
#include "support.hpp"

using namespace sbst;

namespace {

const std::string kSp(kSetPointParam);

// Piecewise-linear reference through the pyramid knots, written independently
// of the step machine.
double pyramid_oracle(double t, double sp) {
    const double knots_t[] = {0, 5, 10, 15, 20, 25, 30, 35};
    const double knots_v[] = {0, sp, sp, 0, 0, sp, sp, 0};
    for (int i = 0; i < 7; ++i) {
        if (t <= knots_t[i + 1]) {
            const double f = (t - knots_t[i]) / 5.0;
            return knots_v[i] + f * (knots_v[i + 1] - knots_v[i]);
        }
    }
    return 0.0;
}

double rect_oracle(double t, double sp) {
    const double phase = std::fmod(t, 5.0);
    return phase < 1.0 - 1e-9 ? 0.0 : sp;
}

}  // namespace

TEST(StepMachine, RejectsBrokenGraphs) {
    const std::vector<std::string> steps{"a", "b"};
    EXPECT_TRUE(check_step_graph(steps, std::vector<StepTransition>{{"a", 1.0, "b"}}, "a").empty());
    EXPECT_EQ(check_step_graph(steps, std::vector<StepTransition>{{"a", 1.0, "c"}}, "a").size(), 2u);
    EXPECT_FALSE(check_step_graph(steps, std::vector<StepTransition>{{"a", 0.0, "b"}}, "a").empty());
    EXPECT_FALSE(check_step_graph(steps, std::vector<StepTransition>{{"a", 1.0, "b"}}, "z").empty());
    EXPECT_FALSE(check_step_graph(steps, std::vector<StepTransition>{{"a", 1.0, "b"}, {"a", 2.0, "a"}}, "a").empty());
}

TEST(StepMachine, CyclingScheduleHasNoDrift) {
    const std::vector<std::string> steps{"low", "high"};
    const std::vector<StepTransition> tr{{"low", 1.0, "high"}, {"high", 4.0, "low"}};
    StepSchedule schedule(steps, tr, "low");
    StepSchedule::Walker walker(schedule, 0.0);
    for (int k = 0; k <= 35000; ++k) {
        const double t = k * 1e-3;
        const auto s = walker.advance_to(t);
        EXPECT_EQ(s, rect_oracle(t, 1.0) == 0.0 ? 0u : 1u) << t;
    }
}

TEST(Testseq, BuiltinsValidate) {
    for (const auto& name : builtin_pts_names()) EXPECT_TRUE(validate(builtin_pts(name)).empty()) << name;
    EXPECT_EQ(builtin_pts_names().size(), 6u);
    EXPECT_THROW(builtin_pts("pyramid"), Error);
}

TEST(Testseq, BuiltinShapes) {
    const auto pyr = builtin_pts("t-pyramid-0");
    EXPECT_EQ(pyr.offset, 0.0);
    EXPECT_EQ(pyr.steps.size(), 7u);
    ASSERT_EQ(pyr.params.size(), 1u);
    EXPECT_EQ(pyr.params[0].lower, 0.0);
    EXPECT_EQ(pyr.params[0].upper, 170.0);
    const auto rect = builtin_pts("rect-pulse-130");
    EXPECT_EQ(rect.offset, 130.0);
    EXPECT_EQ(rect.steps.size(), 2u);
    EXPECT_EQ(rect.transitions.size(), 2u);
}

TEST(Testseq, MissingTransitionTargetIsOneDiagnostic) {
    auto pts = builtin_pts("rect-pulse-0");
    pts.transitions[1].next = "step_9";
    EXPECT_EQ(validate(pts).size(), 1u);
}

TEST(Testseq, InvertedBoundsIsOneDiagnostic) {
    auto pts = builtin_pts("t-pyramid-0");
    pts.params[0].lower = 200.0;
    EXPECT_EQ(validate(pts).size(), 1u);
}

TEST(Testseq, UnknownOutputAndReferenceDiagnosed) {
    auto pts = builtin_pts("rect-pulse-0");
    pts.steps[0].assignments.emplace("torque", Expr::constant(1.0));
    EXPECT_FALSE(validate(pts).empty());
    pts = builtin_pts("rect-pulse-0");
    pts.steps[1].assignments.at("desired_speed") = Expr::parse("Hecate_sp + gain");
    EXPECT_FALSE(validate(pts).empty());
}

TEST(Testseq, ValuationChecks) {
    const auto pts = builtin_pts("t-pyramid-0");
    EXPECT_THROW(instantiate(pts, {{kSp, 200.0}}), Error);
    EXPECT_THROW(instantiate(pts, {{kSp, -1.0}}), Error);
    EXPECT_THROW(instantiate(pts, {}), Error);
    EXPECT_THROW(instantiate(pts, {{kSp, 10.0}, {"extra", 1.0}}), Error);
    EXPECT_NO_THROW(instantiate(pts, {{kSp, 170.0}}));
}

TEST(Testseq, PyramidPassesThroughKnots) {
    const auto t = test::desired("t-pyramid-0", 10.0);
    const double knots[][2] = {{0, 0}, {5, 10}, {10, 10}, {15, 0}, {20, 0}, {25, 10}, {30, 10}, {35, 0}};
    for (const auto& [time, value] : knots) EXPECT_NEAR(t.value_at("desired_speed", time), value, 1e-9) << time;
}

TEST(Testseq, PyramidMatchesPiecewiseLinearOracle) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> draw(0.0, 170.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double sp = draw(rng);
        const auto t = test::desired("t-pyramid-0", sp);
        const auto v = t.values("desired_speed");
        for (std::size_t k = 0; k < v.size(); k += 7) {
            ASSERT_NEAR(v[k], pyramid_oracle(t.grid().time_at(k), sp), 1e-9) << "sp=" << sp << " k=" << k;
        }
    }
}

TEST(Testseq, RectPulseShape) {
    const auto t = test::desired("rect-pulse-0", 10.0);
    const auto v = t.values("desired_speed");
    for (std::size_t k = 0; k < v.size(); ++k) {
        ASSERT_EQ(v[k], rect_oracle(t.grid().time_at(k), 10.0)) << k;
    }
}

TEST(Testseq, ZeroSetPointGivesOffsetOnly) {
    for (const char* name : {"t-pyramid-85", "rect-pulse-85"}) {
        const auto t = test::desired(name, 0.0);
        for (double v : t.values("desired_speed")) ASSERT_EQ(v, 85.0) << name;
    }
    const auto zero = test::desired("rect-pulse-0", 0.0);
    for (double v : zero.values("desired_speed")) ASSERT_EQ(v, 0.0);
}

TEST(Testseq, LiteralSimTimeSequenceEqualsBuiltin) {
    const auto literal = load_pts_file(SBST_TEST_DATA "/t_pyramid_literal.json");
    EXPECT_TRUE(validate(literal).empty());
    const auto grid = TimeGrid::covering(35.0, 1e-3);
    for (double sp : {10.0, 8.0, 167.0}) {
        const auto lit = generate_signal(instantiate(literal, {{kSp, sp}}), grid);
        const auto ref = test::desired("t-pyramid-0", sp);
        const auto a = lit.values("desired_speed");
        const auto b = ref.values("desired_speed");
        for (std::size_t k = 0; k < a.size(); ++k) ASSERT_NEAR(a[k], b[k], 1e-9) << k;
    }
}

TEST(Testseq, Properties) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> draw(0.0, 170.0);
    const auto grid = TimeGrid::covering(35.0, 1e-3);
    const std::size_t period = 5000;
    for (int trial = 0; trial < 25; ++trial) {
        double sp1 = draw(rng);
        double sp2 = draw(rng);
        if (sp1 > sp2) std::swap(sp1, sp2);
        for (const std::string family : {"t-pyramid", "rect-pulse"}) {
            const auto lo = test::desired(family + "-0", sp1);
            const auto hi = test::desired(family + "-0", sp2);
            const auto again = test::desired(family + "-0", sp1);
            const auto lo_v = lo.values("desired_speed");
            const auto hi_v = hi.values("desired_speed");
            const auto again_v = again.values("desired_speed");
            for (const double offset : {85.0, 130.0}) {
                const auto shifted = test::desired(family + "-" + std::to_string(static_cast<int>(offset)), sp1);
                const auto sv = shifted.values("desired_speed");
                for (std::size_t k = 0; k < grid.size(); k += 13) ASSERT_NEAR(sv[k], lo_v[k] + offset, 1e-9);
            }
            for (std::size_t k = 0; k < grid.size(); ++k) {
                ASSERT_LE(lo_v[k], hi_v[k] + 1e-12) << family << " monotonicity at " << k;
                ASSERT_EQ(lo_v[k], again_v[k]) << family << " determinism at " << k;
            }
            if (family == "rect-pulse") {
                for (std::size_t k = 0; k + period < grid.size() - 1; ++k) ASSERT_EQ(lo_v[k], lo_v[k + period]) << k;
            } else {
                for (std::size_t k = 0; k < period; ++k) {
                    ASSERT_NEAR(lo_v[k], lo_v[k + 4 * period], 1e-9);          // segment 1 vs 5
                }
                for (std::size_t k = period; k < 2 * period; ++k) {
                    ASSERT_EQ(lo_v[k], sp1);                                 // segment 2
                    ASSERT_EQ(lo_v[k + 4 * period], sp1);                    // segment 6
                }
            }
        }
    }
}

TEST(Testseq, JsonParsing) {
    const char* doc = R"({
        "name": "pulse",
        "outputs": ["desired_speed"],
        "params": [{"name": "Hecate_sp", "lower": 0, "upper": 170}],
        "steps": [
            {"name": "off", "assignments": {"desired_speed": "0"}},
            {"name": "on", "assignments": {"desired_speed": "Hecate_sp"}}
        ],
        "transitions": [{"from": "off", "after": 1, "next": "on"}, {"from": "on", "after": 4, "next": "off"}],
        "initial": "off",
        "offset": 85
    })";
    const auto pts = parse_pts(doc);
    EXPECT_TRUE(validate(pts).empty());
    const auto t = generate_signal(instantiate(pts, {{kSp, 10.0}}), TimeGrid::covering(35.0, 1e-3));
    const auto ref = test::desired("rect-pulse-85", 10.0);
    for (std::size_t k = 0; k < t.grid().size(); ++k) {
        ASSERT_EQ(t.values("desired_speed")[k], ref.values("desired_speed")[k]);
    }
}

TEST(Testseq, JsonRejectsGuardedTransitionsAndMalformedInput) {
    const char* guarded = R"({
        "outputs": ["desired_speed"], "initial": "a",
        "steps": [{"name": "a", "assignments": {"desired_speed": "0"}},
                  {"name": "b", "assignments": {"desired_speed": "1"}}],
        "transitions": [{"from": "a", "when": "desired_speed > 3", "next": "b"}]
    })";
    EXPECT_THROW(parse_pts(guarded), Error);
    EXPECT_THROW(parse_pts("{not json"), Error);
    EXPECT_THROW(parse_pts(R"({"outputs": [], "steps": []})"), Error);
    EXPECT_THROW(load_pts_file("/nonexistent/pts.json"), Error);
}

TEST(Testseq, GridMustCoverAPositiveHorizon) {
    const auto ts = instantiate(builtin_pts("rect-pulse-0"), {{kSp, 1.0}});
    EXPECT_THROW(generate_signal(ts, TimeGrid(0.0, 1e-3, 1)), Error);
}
