#include "fixtures.hpp"

#include "insitu/errors.hpp"
#include "insitu/experiments.hpp"

#include <fmt/format.h>
#include <gtest/gtest.h>

#include <set>

using namespace insitu;

namespace {

const std::string kCluster = fixtures::source_path("configs/platforms/cluster.yaml");

/// A reduced workload so that full scenario runs stay fast.
WorkflowParams light()
{
  WorkflowParams w;
  w.iterations = 400;
  w.particles  = 96000;
  return w;
}

Scenario sixteen_nodes(MappingMode mode)
{
  Scenario s;
  s.name         = "t";
  s.platform     = kCluster;
  s.n_nodes      = 16;
  s.ratio        = ratio_for(15, 32);
  s.stride       = 100;
  s.mapping_mode = mode;
  s.dtl_mode     = QueueMode::mailbox;
  s.workflow     = light();
  return s;
}

} // namespace

TEST(Scenario, RatioSplits)
{
  EXPECT_EQ(ratio_for(15, 32), (AllocationRatio{15, 30, 2}));
  EXPECT_EQ(ratio_for(1, 32), (AllocationRatio{1, 16, 16}));
  EXPECT_EQ(ratio_for(31, 32), (AllocationRatio{31, 31, 1}));
  EXPECT_THROW(ratio_for(4, 32), InfeasibleScenario);
  EXPECT_THROW(ratio_for(0, 32), InfeasibleScenario);
}

TEST(Scenario, ParsesYaml)
{
  Scenario s = parse_scenario(fmt::format(R"(
name: demo
platform: {}
nodes: 4
ratio: 7
stride: 500
cost: 25
mapping: in-transit
dedicated_nodes: 1
dtl: mailbox
seed: 3
workflow:
  iterations: 1000
  particles: 5000
)",
                                          kCluster));
  EXPECT_EQ(s.name, "demo");
  EXPECT_EQ(s.n_nodes, 4);
  EXPECT_EQ(s.ratio, (AllocationRatio{7, 28, 4}));
  EXPECT_EQ(s.stride, 500);
  EXPECT_DOUBLE_EQ(s.cost_scale, 25);
  EXPECT_EQ(s.mapping_mode, MappingMode::in_transit);
  EXPECT_EQ(s.dtl_mode, QueueMode::mailbox);
  EXPECT_EQ(s.workflow.iterations, 1000);
  EXPECT_EQ(s.workflow.particles, 5000);
  EXPECT_EQ(s.workflow.exchange_every, 20);
  EXPECT_EQ(s.n_ranks(), 112);
  EXPECT_EQ(s.n_analytics(), 16);
}

TEST(Scenario, ParseErrors)
{
  EXPECT_THROW(parse_scenario("nodes: 2"), ParseError);
  EXPECT_THROW(parse_scenario(fmt::format("platform: {}\ncolour: blue", kCluster)), ParseError);
  EXPECT_THROW(parse_scenario(fmt::format("platform: {}\nnodes: many", kCluster)), ParseError);
  EXPECT_THROW(parse_scenario(fmt::format("platform: {}\nratio: 5", kCluster)), InfeasibleScenario);
  EXPECT_THROW(parse_scenario(fmt::format("platform: {}\nworkflow: {{speed: 3}}", kCluster)), ParseError);
  EXPECT_THROW(parse_scenario(fmt::format("platform: {}\nmapping: sideways", kCluster)), ParseError);
  EXPECT_THROW(load_scenario("/nonexistent.yaml"), ParseError);
}

TEST(Scenario, Validation)
{
  Scenario s = sixteen_nodes(MappingMode::in_transit);
  EXPECT_NO_THROW(s.validate());
  s.dedicated_nodes = 16;
  EXPECT_THROW(s.validate(), ConfigError);
  s = sixteen_nodes(MappingMode::in_situ);
  s.repetitions = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = sixteen_nodes(MappingMode::in_situ);
  s.stride = 300;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Mappings, InSituSpreadsAnalyticsOnEveryNode)
{
  Platform p         = load_platform(kCluster);
  ScenarioMappings m = build_mappings(sixteen_nodes(MappingMode::in_situ), p);
  EXPECT_EQ(m.ranks.total(), 480);
  EXPECT_EQ(m.analytics.total(), 32);
  ASSERT_EQ(m.ranks.entries.size(), 16u);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_EQ(m.ranks.entries[i], (std::pair<NodeId, int>{i, 30}));
    EXPECT_EQ(m.analytics.entries[i], (std::pair<NodeId, int>{i, 2}));
  }
  EXPECT_NO_THROW(check_core_capacity(p, {&m.ranks, &m.analytics}));
}

TEST(Mappings, InTransitDedicatesANode)
{
  Platform p         = load_platform(kCluster);
  ScenarioMappings m = build_mappings(sixteen_nodes(MappingMode::in_transit), p);
  EXPECT_EQ(m.ranks.total(), 480);
  EXPECT_EQ(m.analytics.total(), 32);
  EXPECT_EQ(m.analytics.nodes(), (std::vector<NodeId>{15}));
  auto rank_nodes = m.ranks.nodes();
  EXPECT_EQ(rank_nodes.size(), 15u);
  EXPECT_EQ(std::count(rank_nodes.begin(), rank_nodes.end(), NodeId{15}), 0);
  EXPECT_NO_THROW(check_core_capacity(p, {&m.ranks, &m.analytics}));
}

TEST(Mappings, Infeasible)
{
  Platform p = load_platform(kCluster);
  Scenario s = sixteen_nodes(MappingMode::in_situ);
  s.ratio    = AllocationRatio{33, 33, 1};
  EXPECT_THROW(build_mappings(s, p), InfeasibleScenario);
  s       = sixteen_nodes(MappingMode::in_situ);
  s.n_nodes = 40;
  EXPECT_THROW(build_mappings(s, p), InfeasibleScenario);
  s       = sixteen_nodes(MappingMode::in_transit);
  s.n_nodes = 2;
  EXPECT_THROW(build_mappings(s, p), InfeasibleScenario);
}

TEST(Mappings, WorkflowConfigSplitsWork)
{
  Platform p         = load_platform(kCluster);
  Scenario s         = sixteen_nodes(MappingMode::in_situ);
  s.scatter_alpha    = 0.1;
  ScenarioMappings m = build_mappings(s, p);
  WorkflowConfig c   = build_workflow_config(s, m);
  EXPECT_EQ(c.n_ranks, 480);
  EXPECT_EQ(c.n_analytics_actors, 32);
  EXPECT_DOUBLE_EQ(c.rank_iteration_work, 1.2 / 480);
  EXPECT_DOUBLE_EQ(c.analytics_penalty, 1 + 0.1 * 15);
  s.mapping_mode = MappingMode::in_transit;
  EXPECT_DOUBLE_EQ(build_workflow_config(s, build_mappings(s, p)).analytics_penalty, 1.0);
}

TEST(Sweep, ConstantBudgetPairs)
{
  auto pairs = constant_budget_pairs(8000, 400, {20, 200, 500, 1000});
  std::vector<std::pair<long, double>> expected{{20, 1}, {200, 10}, {500, 25}, {1000, 50}};
  EXPECT_EQ(pairs, expected);
  for (auto [T, cost] : pairs)
    EXPECT_DOUBLE_EQ(8000.0 / T * cost, 400);
  EXPECT_THROW(constant_budget_pairs(8000, 400, {300}), ConfigError);
}

TEST(Sweep, StrideCostSpecCoversTheNodeRange)
{
  SweepSpec spec = load_sweep_spec(fixtures::source_path("configs/sweeps/stride-cost.yaml"));
  Platform p     = load_platform(spec.base.platform);
  auto grid      = build_scenario_grid(spec, p);
  EXPECT_EQ(grid.size(), 4u * 2u * 4u);
  std::set<int> cores;
  for (const auto& s : grid)
    cores.insert(s.n_nodes * p.node(0).cores);
  EXPECT_EQ(cores, (std::set<int>{32, 64, 128, 256}));
}

TEST(Sweep, RatioGridIsOrdered)
{
  SweepSpec spec = load_sweep_spec(fixtures::source_path("configs/sweeps/ratio.yaml"));
  auto grid      = build_scenario_grid(spec);
  ASSERT_EQ(grid.size(), 20u);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const auto& a = grid[i - 1];
    const auto& b = grid[i];
    EXPECT_LT(std::tie(a.n_nodes, a.ratio.R, a.stride), std::tie(b.n_nodes, b.ratio.R, b.stride));
  }
  EXPECT_EQ(grid.front().name, "ratio-n1-R1-T1000-c50-in-situ-x1");
}

TEST(Sweep, InfeasibleAxisIsReported)
{
  SweepSpec spec = parse_sweep_spec(fmt::format("base: {{platform: {}}}\naxes: {{nodes: [64]}}", kCluster));
  EXPECT_THROW(build_scenario_grid(spec), InfeasibleScenario);
  EXPECT_THROW(parse_sweep_spec(fmt::format("base: {{platform: {}}}\naxes: {{colour: [1]}}", kCluster)), ParseError);
  EXPECT_THROW(parse_sweep_spec("axes: {nodes: [1]}"), ParseError);
}

TEST(Run, ComponentTimesDecomposeTheSpan)
{
  Scenario s    = sixteen_nodes(MappingMode::in_situ);
  s.n_nodes     = 2;
  SweepResult r = run_scenario(s);
  const auto& c = r.component_times;
  EXPECT_NEAR(c.sim_active + c.sim_idle, c.ana_active + c.ana_idle, 1e-9);
  EXPECT_GE(c.sim_idle, 0);
  EXPECT_GE(c.ana_idle, 0);
  EXPECT_GT(r.simulation_time, 0);
  EXPECT_EQ(r.report.rho, 4);
  EXPECT_TRUE(r.trace.empty());
}

TEST(Run, RepeatedRunsAreIdentical)
{
  Scenario s = sixteen_nodes(MappingMode::in_situ);
  s.n_nodes  = 2;
  s.jitter   = 0.05;
  s.seed     = 17;
  auto a     = run_scenario(s, RunOptions{true});
  auto b     = run_scenario(s, RunOptions{true});
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(to_report_row(a), to_report_row(b));
}

TEST(Run, SweepKeepsInputOrder)
{
  Platform p = load_platform(kCluster);
  std::vector<Scenario> grid;
  for (int n : {2, 1, 2}) {
    Scenario s = sixteen_nodes(MappingMode::in_situ);
    s.n_nodes  = n;
    s.name     = "n" + std::to_string(n);
    grid.push_back(s);
  }
  auto parallel = run_sweep(grid, p, 3);
  ASSERT_EQ(parallel.size(), 3u);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(parallel[i].scenario.name, grid[i].name);
    EXPECT_EQ(parallel[i].report, run_scenario(grid[i], p).report);
  }
}

TEST(DataScaling, ZeroDataMakesModesAgree)
{
  Platform p = load_platform(kCluster);
  auto rows  = compare_data_scaling(sixteen_nodes(MappingMode::in_situ), {0}, p, 2);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].mode, MappingMode::in_situ);
  EXPECT_EQ(rows[1].mode, MappingMode::in_transit);
  EXPECT_NEAR(rows[0].simulation_time, rows[1].simulation_time, 0.01 * rows[0].simulation_time);
}

TEST(DataScaling, LoopbackTransfersAreCheaper)
{
  Platform p = load_platform(kCluster);
  Scenario s = sixteen_nodes(MappingMode::in_situ);
  s.data_scale = 100;
  std::array<double, 2> ingest{};
  for (MappingMode mode : {MappingMode::in_situ, MappingMode::in_transit}) {
    s.mapping_mode = mode;
    ingest[static_cast<std::size_t>(mode)] = run_scenario(s, p).report.stages.G;
  }
  EXPECT_LE(ingest[0], ingest[1]);
}

TEST(DataScaling, RejectsBadScales)
{
  Platform p = load_platform(kCluster);
  Scenario s = sixteen_nodes(MappingMode::in_situ);
  EXPECT_THROW(compare_data_scaling(s, {}, p), std::invalid_argument);
  EXPECT_THROW(compare_data_scaling(s, {-1}, p), std::invalid_argument);
  std::ostringstream out;
  write_data_scaling_csv(out, {DataScalingRow{1, MappingMode::in_situ, 2.5}});
  EXPECT_EQ(out.str(), "scale,mode,simulation_time\n1,in-situ,2.500000000\n");
}
