#include "insitu/engine.hpp"
#include "insitu/flow_network.hpp"
#include "insitu/workflow.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace insitu;

namespace {

void BM_MaxMinSolve(benchmark::State& state)
{
  const auto flows = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  std::vector<double> cap(64);
  for (auto& c : cap)
    c = 1e9 * static_cast<double>(1 + rng() % 10);
  FlowNetwork net(cap);
  for (std::size_t f = 0; f < flows; ++f)
    net.add({rng() % 63, 63}, 1e6);
  for (auto _ : state) {
    net.solve();
    benchmark::DoNotOptimize(net.rate(0));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * flows));
}
BENCHMARK(BM_MaxMinSolve)->Arg(16)->Arg(256)->Arg(2048);

void BM_EngineSleepEvents(benchmark::State& state)
{
  Platform p = Platform::build(Topology::flat, {NodeSpec{"n", 64}}, {LinkSpec{"backbone", 1e9, 1e-6}});
  const int actors = static_cast<int>(state.range(0));
  for (auto _ : state) {
    Simulation sim(p);
    for (int a = 0; a < actors; ++a)
      sim.spawn("a", 0, [&sim, a](Actor& self) -> Task<> {
        for (int i = 0; i < 1000; ++i)
          co_await sim.sleep(self, 1e-3 * (1 + a % 7));
      });
    benchmark::DoNotOptimize(sim.run());
  }
  state.SetItemsProcessed(state.iterations() * actors * 1000);
}
BENCHMARK(BM_EngineSleepEvents)->Arg(1)->Arg(64);

void BM_SmallWorkflow(benchmark::State& state)
{
  std::vector<NodeSpec> nodes;
  for (int i = 0; i < 4; ++i)
    nodes.push_back(NodeSpec{"n" + std::to_string(i), 32});
  Platform p = Platform::build(Topology::flat, nodes, {LinkSpec{"backbone", 1.25e9, 1e-6}});
  WorkflowConfig cfg;
  cfg.total_iterations    = 800;
  cfg.stride              = 100;
  cfg.exchange_every      = 20;
  cfg.n_ranks             = 96;
  cfg.rank_iteration_work = 1e-3;
  cfg.halo_bytes          = 16384;
  cfg.n_analytics_actors  = 8;
  cfg.cost_per_particle   = 1e-6;
  cfg.size_per_particle   = 100;
  cfg.n_particles         = 96000;
  cfg.dtl_mode            = QueueMode::mailbox;
  Mapping ranks, analytics;
  for (NodeId n = 0; n < 4; ++n) {
    ranks.entries.emplace_back(n, 24);
    analytics.entries.emplace_back(n, 2);
  }
  for (auto _ : state) {
    WorkflowResult r = run_workflow(p, cfg, ranks, analytics, WorkflowRunOptions{false});
    benchmark::DoNotOptimize(r.end_time);
    state.counters["events"] = static_cast<double>(r.events);
  }
}
BENCHMARK(BM_SmallWorkflow)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
