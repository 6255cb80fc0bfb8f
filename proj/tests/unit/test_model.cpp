#include "insitu/errors.hpp"
#include "insitu/model.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace insitu;

namespace {

StageCosts sides(double sim, double ana)
{
  StageCosts s;
  s.S = sim;
  s.A = ana;
  return s;
}

ModelInputs inputs(StageCosts s, long rho)
{
  return ModelInputs{s, rho, 1};
}

void stage(std::vector<TraceEvent>& t, ActorId actor, StageLabel l, long step, double begin, double end)
{
  t.push_back({begin, actor, l, stage_detail(true, step), t.size()});
  t.push_back({end, actor, l, stage_detail(false, step), t.size()});
}

/// One rank (actor 1) and one analytics actor (actor 2) repeating the same durations every step.
std::vector<TraceEvent> pipeline(StageCosts c, long rho)
{
  std::vector<TraceEvent> t;
  const double period = std::max(c.S + c.I, c.G + c.A);
  for (long i = 1; i <= rho; ++i) {
    double t0 = (i - 1) * period;
    stage(t, 1, StageLabel::S, i, t0, t0 + c.S);
    stage(t, 1, StageLabel::I, i, t0 + c.S, t0 + c.S + c.I);
    double a0 = t0 + c.S + c.I;
    stage(t, 2, StageLabel::G, i, a0, a0 + c.G);
    stage(t, 2, StageLabel::A, i, a0 + c.G, a0 + c.G + c.A);
  }
  std::stable_sort(t.begin(), t.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  return t;
}

} // namespace

TEST(Model, Classification)
{
  EXPECT_EQ(classify_scenario(sides(10, 7)), ScenarioClass::IA);
  EXPECT_EQ(classify_scenario(sides(7, 10)), ScenarioClass::IS);
  EXPECT_EQ(classify_scenario(sides(5, 5)), ScenarioClass::idle_free);
  EXPECT_EQ(to_string(ScenarioClass::idle_free), "idle-free");
  EXPECT_EQ(parse_scenario_class("IS"), ScenarioClass::IS);
  EXPECT_THROW(parse_scenario_class("XX"), ParseError);
}

TEST(Model, IdleTime)
{
  EXPECT_DOUBLE_EQ(idle_time(sides(10, 7)), 3);
  EXPECT_DOUBLE_EQ(idle_time(sides(4, 4)), 0);
  EXPECT_DOUBLE_EQ(idle_time(sides(2, 5)), 3);
}

TEST(Model, Makespan)
{
  EXPECT_DOUBLE_EQ(makespan(inputs(sides(10, 7), 8)), 80);
  EXPECT_DOUBLE_EQ(makespan(inputs(sides(10, 7), 1)), 10);
  EXPECT_DOUBLE_EQ(makespan(inputs(sides(6, 6), 5)), 30);
  ModelInputs m{sides(3, 1), 8000, 1000};
  EXPECT_EQ(m.rho(), 8);
  EXPECT_DOUBLE_EQ(makespan(m), 24);
}

TEST(Model, Efficiency)
{
  EXPECT_DOUBLE_EQ(efficiency(inputs(sides(10, 7), 8)), 0.7);
  EXPECT_DOUBLE_EQ(efficiency(inputs(sides(10, 5), 8)), 0.5);
  EXPECT_DOUBLE_EQ(efficiency(inputs(sides(3, 3), 8)), 1.0);
  EXPECT_THROW(efficiency(inputs(StageCosts{}, 8)), DegenerateInput);
}

TEST(Model, EvaluateBundlesEverything)
{
  StageCosts s{8, 2, 1, 6, 0, 0};
  EfficiencyReport r = evaluate(ModelInputs{s, 8000, 1000});
  EXPECT_EQ(r.rho, 8);
  EXPECT_DOUBLE_EQ(r.makespan, 80);
  EXPECT_DOUBLE_EQ(r.idle_per_step, 3);
  EXPECT_DOUBLE_EQ(r.eta, 0.7);
  EXPECT_EQ(r.scenario, ScenarioClass::IA);
}

TEST(Model, StrictModeCountsSendAndCollect)
{
  StageCosts s{10, 0, 0, 7, 3, 0};
  EXPECT_DOUBLE_EQ(efficiency(inputs(s, 4)), 0.7);
  EXPECT_DOUBLE_EQ(efficiency(inputs(s, 4), ModelOptions{true}), 1.0);
  s.C = 2;
  EXPECT_DOUBLE_EQ(simulation_side(s, ModelOptions{true}), 12);
  EXPECT_DOUBLE_EQ(analytics_side(s, ModelOptions{true}), 10);
}

TEST(Model, Validation)
{
  StageCosts neg{1, -1, 0, 0, 0, 0};
  EXPECT_THROW(neg.validate(), ValidationError);
  StageCosts nan{std::nan(""), 0, 0, 0, 0, 0};
  EXPECT_THROW(nan.validate(), ValidationError);
  EXPECT_THROW((ModelInputs{sides(1, 1), 10, 0}).validate(), ValidationError);
  EXPECT_THROW((ModelInputs{sides(1, 1), 10, 3}).validate(), ValidationError);
}

TEST(Model, RandomPropertyChecks)
{
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(0, 100);
  for (int i = 0; i < 2000; ++i) {
    StageCosts s{d(rng), d(rng), d(rng), d(rng), d(rng), d(rng)};
    const long rho = 1 + static_cast<long>(rng() % 64);
    ModelInputs m  = inputs(s, rho);
    const double sim = simulation_side(s), ana = analytics_side(s);
    const double M   = makespan(m);
    EXPECT_GE(M, rho * sim * (1 - 1e-15));
    EXPECT_GE(M, rho * ana * (1 - 1e-15));
    const double eta = efficiency(m);
    EXPECT_GT(eta, 0);
    EXPECT_LE(eta, 1);
    for (double lambda : {0.1, 10.0}) {
      ModelInputs scaled = inputs(s.scaled(lambda), rho);
      EXPECT_NEAR(efficiency(scaled), eta, 1e-12);
      EXPECT_EQ(classify_scenario(scaled.stages), classify_scenario(s));
    }
    // Growing A never shortens the makespan nor raises efficiency once analytics is the bottleneck.
    StageCosts more = s;
    more.A += d(rng);
    EXPECT_GE(makespan(inputs(more, rho)), M);
    if (ana >= sim)
      EXPECT_LE(efficiency(inputs(more, rho)), eta + 1e-15);
  }
}

TEST(Extract, ConstantSyntheticTrace)
{
  StageCosts c{10, 1, 1, 6, 0, 0};
  ExtractedStages x = extract_stages(pipeline(c, 4), 4);
  EXPECT_EQ(x.steady, c);
  EXPECT_DOUBLE_EQ(x.max_deviation, 0);
  EXPECT_TRUE(x.warnings.empty());
  EXPECT_DOUBLE_EQ(x.steady_span, 33);
  EXPECT_DOUBLE_EQ(x.makespan_simulated, 3 * 11 + 11 + 7);
  EXPECT_NEAR(x.eta_simulated, efficiency(inputs(c, 4)), 1e-12);
  for (const auto& st : x.steps) {
    EXPECT_DOUBLE_EQ(st.idle_A, 4);
    EXPECT_DOUBLE_EQ(st.idle_S, 0);
  }
}

TEST(Extract, BusyTimeAccumulatesPerActor)
{
  auto t = pipeline(StageCosts{10, 1, 1, 6, 0, 0}, 3);
  // A second analytics batch by the same actor inside step 2.
  stage(t, 2, StageLabel::A, 2, 19.0, 21.0);
  std::stable_sort(t.begin(), t.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  ExtractedStages x = extract_stages(t, 3);
  EXPECT_DOUBLE_EQ(x.steps[1].durations.A, 8);
  EXPECT_DOUBLE_EQ(x.steady.A, 7);
  EXPECT_FALSE(x.warnings.empty());
}

TEST(Extract, OtherEventsAreIgnored)
{
  auto t = pipeline(StageCosts{2, 1, 1, 1, 0, 0}, 3);
  t.push_back({0.5, 9, StageLabel::other, "xfer queue=state", t.size()});
  EXPECT_NO_THROW(extract_stages(t, 3));
}

TEST(Extract, Errors)
{
  auto good = pipeline(StageCosts{2, 1, 1, 1, 0, 0}, 3);
  EXPECT_THROW(extract_stages(good, 1), MalformedTrace);

  auto unpaired = good;
  unpaired.pop_back();
  EXPECT_THROW(extract_stages(unpaired, 3), MalformedTrace);

  auto orphan_end = good;
  orphan_end.push_back({100, 1, StageLabel::C, stage_detail(false, 2), 999});
  EXPECT_THROW(extract_stages(orphan_end, 3), MalformedTrace);

  std::vector<TraceEvent> missing;
  for (const auto& e : good)
    if (!(e.label == StageLabel::G && parse_stage_detail(e.detail)->step == 2))
      missing.push_back(e);
  EXPECT_THROW(extract_stages(missing, 3), MalformedTrace);

  auto bad_step = good;
  bad_step.push_back({1, 1, StageLabel::S, stage_detail(true, 7), 998});
  EXPECT_THROW(extract_stages(bad_step, 3), MalformedTrace);

  auto garbled = good;
  garbled.push_back({1, 1, StageLabel::S, "whenever", 997});
  EXPECT_THROW(extract_stages(garbled, 3), MalformedTrace);
}

TEST(Report, TextRoundTrip)
{
  StageCosts c{10, 1, 1, 6, 0.25, 0.125};
  ModelReport r = compare_with_model(extract_stages(pipeline(c, 5), 5));
  EXPECT_EQ(r.scenario, ScenarioClass::IA);
  EXPECT_DOUBLE_EQ(r.idle_A, 4);
  EXPECT_DOUBLE_EQ(r.makespan_predicted, 5 * 11);
  std::string text = format_model_report(r);
  EXPECT_EQ(text.substr(0, 8), "rho = 5\n");
  EXPECT_EQ(parse_model_report(text), r);
  EXPECT_THROW(parse_model_report("rho = x\n"), ParseError);
}
