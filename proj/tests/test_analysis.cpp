#include <gtest/gtest.h>

#include "conex/analysis.hpp"
#include "conex/landscape.hpp"
#include "test_support.hpp"

using namespace conex;

namespace {

ExecutorSettings one_repeat() {
  ExecutorSettings s;
  s.repeats = 1;
  return s;
}

}  // namespace

TEST(Gain, Examples) {
  EXPECT_DOUBLE_EQ(gain(100, 87.5).gain_pct, 12.5);
  EXPECT_DOUBLE_EQ(gain(100, 100).gain_pct, 0.0);
  EXPECT_NEAR(gain(100, 27.9).gain_pct, 72.1, 1e-9);
  EXPECT_DOUBLE_EQ(gain(100, 112.5).gain_pct, 12.5);  // absolute value
  EXPECT_THROW(gain(0, 1), std::invalid_argument);
  EXPECT_THROW(gain(-5, 1), std::invalid_argument);
}

TEST(Gain, ScaleInvariant) {
  for (double k : {0.001, 0.5, 3.0, 1e6}) {
    EXPECT_NEAR(gain(k * 100, k * 87.5).gain_pct, 12.5, 1e-9);
    EXPECT_NEAR(gain(k * 40, k * 55).gain_pct, 37.5, 1e-9);
  }
}

TEST(BreakEven, ReferenceExample) {
  auto r = break_even(43200, 900, 756);
  EXPECT_DOUBLE_EQ(r.overhead_equiv_runs, 48.0);
  ASSERT_TRUE(r.additional_runs.has_value());
  EXPECT_EQ(*r.additional_runs, 300);
  EXPECT_EQ(*r.total_runs, 348);
}

TEST(BreakEven, EdgeCases) {
  auto never = break_even(43200, 900, 900);
  EXPECT_FALSE(never.additional_runs.has_value());
  EXPECT_FALSE(never.total_runs.has_value());
  EXPECT_FALSE(break_even(10, 900, 950).additional_runs.has_value());
  auto free = break_even(0, 900, 756);
  EXPECT_EQ(*free.additional_runs, 0);
  EXPECT_EQ(*free.total_runs, 0);
  EXPECT_EQ(*break_even(100, 10, 9.5).additional_runs, 200);
  EXPECT_EQ(*break_even(100.25, 10, 9.5).additional_runs, 201);
  EXPECT_THROW(break_even(1, 0, 1), std::invalid_argument);
  EXPECT_THROW(break_even(1, 10, 0), std::invalid_argument);
  EXPECT_THROW(break_even(-1, 10, 5), std::invalid_argument);
}

TEST(BreakEven, FasterOptimumNeedsNoMoreRuns) {
  // Non-increasing everywhere; strictly decreasing once the ceiling steps apart.
  long long prev = std::numeric_limits<long long>::max();
  for (double t_opt = 899; t_opt >= 1; t_opt -= 1) {
    long long now = *break_even(43200, 900, t_opt).additional_runs;
    EXPECT_LE(now, prev);
    prev = now;
  }
  for (double t_opt : {890.0, 800.0, 700.0, 500.0}) {
    EXPECT_LT(*break_even(43200, 900, t_opt - 50).additional_runs,
              *break_even(43200, 900, t_opt).additional_runs);
  }
}

TEST(Sensitivity, SeparableMatchesClosedForm) {
  auto space = test::grid_space(8, 5, 2);
  auto base = make_landscape("separable_quadratic:seed=5", space);
  auto& land = dynamic_cast<SeparableQuadratic&>(*base);
  Executor ex(base, one_repeat());
  auto def = default_configuration(space);
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto best = random_configuration(space, rng);
    auto report = sensitivity(best, def, ex);
    const double d = land.true_cost(def);
    auto x = land.coordinates(best);
    std::size_t differing = 0;
    for (std::size_t j = 0; j < space.dimensionality(); ++j) {
      if (!(best.at(space.relevant()[j].name) == def.at(space.relevant()[j].name))) ++differing;
    }
    ASSERT_EQ(report.entries.size(), differing);
    for (const auto& e : report.entries) {
      ASSERT_EQ(e.status, "ok");
      std::size_t j = std::stoul(e.parameter.substr(1));
      const double w = land.weights()[j], t = land.targets()[j];
      const double solo = w * ((x[j] - t) * (x[j] - t) - t * t);
      EXPECT_NEAR(e.sensitivity, -solo / d, 1e-6) << e.parameter;
      EXPECT_NEAR(e.sensitivity, e.delta_best - e.delta_i, 1e-15);
    }
    for (std::size_t i = 1; i < report.entries.size(); ++i) {
      EXPECT_GE(report.entries[i - 1].sensitivity, report.entries[i].sensitivity);
    }
  }
}

TEST(Sensitivity, IgnoredParameterHasZeroSensitivity) {
  auto space = test::grid_space(5, 4, 1);
  Executor ex(make_landscape("pairwise_interaction:ignore=x3", space), one_repeat());
  auto def = default_configuration(space);
  auto best = def;
  best.set("x3", std::int64_t{3});
  best.set("x0", std::int64_t{0});
  auto report = sensitivity(best, def, ex);
  bool found = false;
  for (const auto& e : report.entries) {
    if (e.parameter == "x3") {
      EXPECT_NEAR(e.sensitivity, 0.0, 1e-12);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(Sensitivity, InvalidResetsAreReportedNotEvaluated) {
  auto space = test::grid_space(2, 3, 0);
  auto rules = parse_rules(json::parse(R"({"rules": [
      {"id": "x0-needs-x1", "kind": "requires", "subjects": ["x1"], "when": {"x0": 2},
       "min": 1}]})"), space);
  Executor ex(make_landscape("separable_quadratic", space), one_repeat());
  auto def = default_configuration(space);
  auto best = def;
  best.set("x0", std::int64_t{2});
  best.set("x1", std::int64_t{1});
  auto report = sensitivity(best, def, ex, &rules);
  ASSERT_EQ(report.entries.size(), 2u);
  EXPECT_EQ(report.entries[0].status, "ok");
  EXPECT_EQ(report.entries[0].parameter, "x0");
  EXPECT_EQ(report.entries[1].status, "invalid");
  EXPECT_EQ(report.entries[1].parameter, "x1");
}

TEST(TopK, SingleRowEqualsGain) {
  auto space = test::grid_space(4, 4, 1);
  auto land = make_landscape("separable_quadratic", space);
  Executor ex(land, one_repeat());
  auto def = default_configuration(space);
  Rng rng(3);
  Configuration c;
  do { c = random_configuration(space, rng); } while (land->true_cost(c) >= land->true_cost(def));
  auto report = evaluate_topk({c}, ex, def);
  ASSERT_EQ(report.rows.size(), 1u);
  ASSERT_EQ(report.prefixes.size(), 1u);
  EXPECT_NEAR(*report.rows[0].improvement_pct,
              gain(land->true_cost(def), land->true_cost(c)).gain_pct, 1e-9);
  EXPECT_THROW(evaluate_topk({}, ex, def), std::invalid_argument);
}

TEST(TopK, ScaleUpPrefixCurveIsMonotone) {
  auto space = test::grid_space(6, 5, 2);
  auto small = make_landscape("pairwise_interaction:seed=8", space);
  auto large = make_landscape("pairwise_interaction:seed=8,scale=6,noise=0.03,noise_seed=2", space);
  Executor small_ex(small, one_repeat());
  SamplerSettings s;
  s.seed = 12;
  s.budget = 300;
  s.min_improvement = 0;
  s.max_generations = 1000;
  TuneContext ctx{space, nullptr, small_ex, nullptr};
  auto tuned = run_emcmc(ctx, s, default_configuration(space));
  ASSERT_EQ(tuned.top_k.size(), 50u);

  std::vector<Configuration> topk;
  for (const auto& r : tuned.top_k) topk.push_back(r.config);
  Executor large_ex(large, one_repeat());
  auto report = evaluate_topk(topk, large_ex, default_configuration(space));
  ASSERT_EQ(report.prefixes.size(), 6u);
  for (std::size_t i = 1; i < report.prefixes.size(); ++i) {
    EXPECT_GE(*report.prefixes[i].improvement_pct, *report.prefixes[i - 1].improvement_pct);
  }
  EXPECT_GE(*report.prefixes.back().improvement_pct, *report.rows.front().improvement_pct);
}

TEST(TopK, UncorrelatedLandscapeStillWellFormed) {
  auto space = test::grid_space(5, 4, 1);
  Executor ex(make_landscape("two_basin_deceptive:seed=99", space), one_repeat());
  Rng rng(1);
  std::vector<Configuration> topk;
  for (int i = 0; i < 7; ++i) topk.push_back(random_configuration(space, rng));
  auto report = evaluate_topk(topk, ex, default_configuration(space));
  EXPECT_EQ(report.rows.size(), 7u);
  ASSERT_EQ(report.prefixes.size(), 3u);  // 1, 3, 5
  EXPECT_EQ(report.prefixes[2].k, 5u);
  auto j = report.to_json();
  EXPECT_EQ(j["rows"].size(), 7u);
}
