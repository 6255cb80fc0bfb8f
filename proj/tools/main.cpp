// insitu-sim: command-line driver for scenario runs, sweeps, mapping comparisons and the analytical model.

#include "insitu/errors.hpp"
#include "insitu/experiments.hpp"
#include "insitu/model.hpp"
#include "insitu/trace.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <thread>

namespace {

using namespace insitu;

struct OutputOptions {
  std::string output;
  std::string format = "csv";
};

void add_output_options(CLI::App* cmd, OutputOptions& o)
{
  cmd->add_option("-o,--output", o.output, "Write the report to this file instead of stdout");
  cmd->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "structured", "json"}));
}

void emit_report(const OutputOptions& o, const std::vector<SweepResult>& results)
{
  ReportFormat format = parse_report_format(o.format);
  if (o.output.empty())
    export_report(std::cout, results, format);
  else
    export_report(std::filesystem::path(o.output), results, format);
}

void print_warnings(const std::vector<SweepResult>& results)
{
  for (const auto& r : results)
    for (const auto& w : r.warnings)
      std::cerr << fmt::format("warning: {}: {}\n", r.scenario.name, w);
}

unsigned default_jobs()
{
  return std::max(1u, std::thread::hardware_concurrency());
}

// --- run ---------------------------------------------------------------------------------------------------------

struct RunArgs {
  std::string scenario;
  std::string trace;
  OutputOptions out;

  // Direct mode
  std::string platform;
  std::string rank_hostfile;
  std::vector<std::string> analysis; // n map cost cscale size dscale
  long iterations   = 8000;
  long stride       = 1000;
  long exchange     = 20;
  int ranks         = 1;
  double rank_work  = 0;
  double halo_bytes = 0;
  long particles    = 1372000;
  std::string dtl   = "instantaneous";
  std::string routing = "shared";
  bool strict       = false;
};

int run_direct(const RunArgs& a)
{
  if (a.platform.empty() || a.analysis.size() != 6)
    throw ConfigError("direct mode needs --platform and --analysis <n> <hostfile> <cost> <cscale> <size> <dscale>");
  Platform platform = load_platform(a.platform);

  WorkflowConfig cfg;
  cfg.total_iterations    = a.iterations;
  cfg.stride              = a.stride;
  cfg.exchange_every      = a.exchange;
  cfg.n_ranks             = a.ranks;
  cfg.rank_iteration_work = a.rank_work;
  cfg.halo_bytes          = a.halo_bytes;
  cfg.n_particles         = a.particles;
  cfg.n_analytics_actors  = std::stoi(a.analysis[0]);
  cfg.analytics_mapping   = a.analysis[1];
  cfg.cost_per_particle   = std::stod(a.analysis[2]);
  cfg.compute_scale       = std::stod(a.analysis[3]);
  cfg.size_per_particle   = std::stod(a.analysis[4]);
  cfg.data_scale          = std::stod(a.analysis[5]);
  cfg.dtl_mode            = parse_queue_mode(a.dtl);
  cfg.state_routing       = parse_state_routing(a.routing);
  cfg.validate();

  Mapping analytics = load_mapping(cfg.analytics_mapping, platform, cfg.n_analytics_actors);
  Mapping ranks;
  if (!a.rank_hostfile.empty()) {
    ranks = load_mapping(a.rank_hostfile, platform, cfg.n_ranks);
  } else {
    // Fill nodes in order, leaving the cores already taken by analytics.
    std::vector<long> free(platform.node_count());
    for (NodeId n = 0; n < platform.node_count(); ++n)
      free[n] = platform.node(n).cores;
    for (const auto& [n, k] : analytics.entries)
      free[n] -= k;
    long left = cfg.n_ranks;
    for (NodeId n = 0; n < platform.node_count() && left > 0; ++n) {
      long here = std::min(left, std::max(0L, free[n]));
      if (here > 0)
        ranks.entries.emplace_back(n, static_cast<int>(here));
      left -= here;
    }
    if (left > 0)
      throw InfeasibleScenario(fmt::format("{} ranks do not fit next to the analytics actors", cfg.n_ranks));
  }
  check_core_capacity(platform, {&ranks, &analytics});

  WorkflowResult result = run_workflow(platform, cfg, ranks, analytics);
  if (!a.trace.empty())
    write_trace_csv(std::filesystem::path(a.trace), result.trace);
  ExtractedStages x = extract_stages(result.trace, cfg);
  for (const auto& w : x.warnings)
    std::cerr << "warning: " << w << '\n';
  std::string text = format_model_report(compare_with_model(x, ModelOptions{a.strict}));
  if (a.out.output.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(a.out.output);
    if (!(f << text))
      throw IoError(fmt::format("cannot write '{}'", a.out.output));
  }
  return 0;
}

int run_command(const RunArgs& a)
{
  if (a.scenario.empty())
    return run_direct(a);
  Scenario s         = load_scenario(a.scenario);
  SweepResult result = run_scenario(s, RunOptions{!a.trace.empty()});
  if (!a.trace.empty())
    write_trace_csv(std::filesystem::path(a.trace), result.trace);
  print_warnings({result});
  emit_report(a.out, {result});
  return 0;
}

// --- sweep / compare-mapping / model -----------------------------------------------------------------------------

struct SweepArgs {
  std::string spec;
  unsigned jobs = default_jobs();
  OutputOptions out;
};

int sweep_command(const SweepArgs& a)
{
  SweepSpec spec    = load_sweep_spec(a.spec);
  Platform platform = load_platform(spec.base.platform);
  auto grid         = build_scenario_grid(spec, platform);
  auto results      = run_sweep(grid, platform, a.jobs);
  print_warnings(results);
  emit_report(a.out, results);
  return 0;
}

struct CompareArgs {
  std::string scenario;
  std::vector<double> scales{1, 10, 100, 500, 1000};
  unsigned jobs = default_jobs();
  std::string output;
};

int compare_command(const CompareArgs& a)
{
  Scenario base     = load_scenario(a.scenario);
  Platform platform = load_platform(base.platform);
  auto rows         = compare_data_scaling(base, a.scales, platform, a.jobs);
  if (a.output.empty()) {
    write_data_scaling_csv(std::cout, rows);
  } else {
    std::ofstream f(a.output);
    if (!f)
      throw IoError(fmt::format("cannot write '{}'", a.output));
    write_data_scaling_csv(f, rows);
  }
  return 0;
}

struct ModelArgs {
  StageCosts stages;
  long iterations = 8000;
  long stride     = 1000;
  bool strict     = false;
};

int model_command(const ModelArgs& a)
{
  ModelInputs in{a.stages, a.iterations, a.stride};
  EfficiencyReport r = evaluate(in, ModelOptions{a.strict});
  std::cout << fmt::format("rho = {}\nmakespan = {:.9f}\nidle_per_step = {:.9f}\neta = {:.6f}\nscenario = {}\n", r.rho,
                           r.makespan, r.idle_per_step, r.eta, to_string(r.scenario));
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Simulator of in-situ simulation + analytics workflows"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run one scenario file, or a workflow described on the command line");
  run_cmd->add_option("scenario", run.scenario, "Scenario file")->check(CLI::ExistingFile);
  run_cmd->add_option("--trace", run.trace, "Write the event trace (CSV) to this file");
  add_output_options(run_cmd, run.out);
  run_cmd->add_option("--platform", run.platform, "Platform file (direct mode)")->check(CLI::ExistingFile);
  run_cmd->add_option("--rank-hostfile", run.rank_hostfile, "Rank placement (direct mode)")
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--analysis", run.analysis, "<actors> <hostfile> <cost/particle> <cost scale> <bytes/particle> <data scale>")
      ->expected(6);
  run_cmd->add_option("--iterations", run.iterations, "Total MD iterations (N)");
  run_cmd->add_option("--stride", run.stride, "Iterations between analyses (T)");
  run_cmd->add_option("--exchange-every", run.exchange, "Halo exchange periodicity (X)");
  run_cmd->add_option("--ranks", run.ranks, "Number of simulation ranks");
  run_cmd->add_option("--rank-work", run.rank_work, "Work per iteration and rank (reference-core seconds)");
  run_cmd->add_option("--halo-bytes", run.halo_bytes, "Bytes per neighbor and halo exchange");
  run_cmd->add_option("--particles", run.particles, "Total particle count");
  run_cmd->add_option("--dtl", run.dtl, "Data transport mode")->check(CLI::IsMember({"instantaneous", "queue", "mailbox"}));
  run_cmd->add_option("--state-routing", run.routing, "State queue layout")
      ->check(CLI::IsMember({"shared", "node_local"}));
  run_cmd->add_flag("--strict", run.strict, "Include Se and C in the model");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run every scenario of a sweep spec");
  sweep_cmd->add_option("spec", sweep.spec, "Sweep spec file")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("-j,--jobs", sweep.jobs, "Parallel simulations")->check(CLI::PositiveNumber);
  add_output_options(sweep_cmd, sweep.out);

  CompareArgs cmp;
  auto* cmp_cmd = app.add_subcommand("compare-mapping", "In-situ vs in-transit under growing data volumes");
  cmp_cmd->add_option("scenario", cmp.scenario, "Base scenario file")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--scales", cmp.scales, "Data scales")->delimiter(',');
  cmp_cmd->add_option("-j,--jobs", cmp.jobs, "Parallel simulations")->check(CLI::PositiveNumber);
  cmp_cmd->add_option("-o,--output", cmp.output, "Write the CSV table to this file");

  ModelArgs model;
  auto* model_cmd = app.add_subcommand("model", "Evaluate idle time, makespan and efficiency from stage costs");
  model_cmd->add_option("--S", model.stages.S, "Simulate (s)")->required();
  model_cmd->add_option("--I", model.stages.I, "Ingest (s)");
  model_cmd->add_option("--G", model.stages.G, "Get (s)");
  model_cmd->add_option("--A", model.stages.A, "Analyze (s)")->required();
  model_cmd->add_option("--Se", model.stages.Se, "Send (s)");
  model_cmd->add_option("--C", model.stages.C, "Collect (s)");
  model_cmd->add_option("--iterations", model.iterations, "N");
  model_cmd->add_option("--stride", model.stride, "T");
  model_cmd->add_flag("--strict", model.strict, "Include Se and C");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd)
      return run_command(run);
    if (*sweep_cmd)
      return sweep_command(sweep);
    if (*cmp_cmd)
      return compare_command(cmp);
    return model_command(model);
  } catch (const InfeasibleScenario& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
