#pragma once

#include "insitu/model.hpp"
#include "insitu/platform.hpp"
#include "insitu/workflow.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace insitu {

enum class MappingMode { in_situ, in_transit };

std::string_view to_string(MappingMode m);
MappingMode parse_mapping_mode(std::string_view text);

/// Simulation-side parameters shared by every scenario of a study.
struct WorkflowParams {
  long iterations          = 8000;
  long exchange_every      = 20;
  double iteration_work    = 1.2;     // core-seconds per iteration, split evenly over the ranks
  double halo_bytes        = 16384;   // per neighbor and exchange
  long particles           = 1372000; // 4 atoms per cell on a 70^3 lattice
  double cost_per_particle = 7.93e-7;
  double size_per_particle = 100;
};

struct Scenario {
  std::string name = "scenario";
  std::filesystem::path platform;
  int n_nodes = 1;
  AllocationRatio ratio{1, 16, 16};
  long stride       = 1000;
  double cost_scale = 1;
  MappingMode mapping_mode = MappingMode::in_situ;
  int dedicated_nodes      = 1;
  double data_scale        = 1;
  QueueMode dtl_mode       = QueueMode::instantaneous;
  int repetitions          = 1;

  /// Analytics work is multiplied by 1 + alpha * (nodes hosting analytics - 1).
  double scatter_alpha = 0;
  double jitter        = 0;
  std::uint64_t seed   = 0;
  StateRouting state_routing = StateRouting::node_local;
  WorkflowParams workflow;

  /// Throws ConfigError on a structural problem (non-positive counts, dedicated nodes >= nodes, ...).
  void validate() const;
  int n_ranks() const { return n_nodes * ratio.sim_cores_per_node; }
  int n_analytics() const { return n_nodes * ratio.ana_cores_per_node; }
  double analytics_penalty(int analytics_nodes) const { return 1.0 + scatter_alpha * (analytics_nodes - 1); }
};

/// Split of `cores_per_node` with sim/ana = R. Throws InfeasibleScenario unless R + 1 divides the core count.
AllocationRatio ratio_for(int R, int cores_per_node);

/// Parses a scenario document. A relative platform path is resolved against `base_dir`.
/// `ratio` is either a [sim, ana] pair or R, which is split over the cores of the platform's first node
/// (the platform file is loaded for that).
Scenario parse_scenario(std::string_view yaml, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

struct ScenarioMappings {
  Mapping ranks;
  Mapping analytics;
};

/// in-situ: every one of the first n nodes hosts sim_cores ranks and ana_cores actors.
/// in-transit: the same totals, actors packed on the last `dedicated_nodes` nodes and ranks filling the others.
/// Throws InfeasibleScenario when the platform lacks nodes or cores.
ScenarioMappings build_mappings(const Scenario& s, const Platform& platform);
WorkflowConfig build_workflow_config(const Scenario& s, const ScenarioMappings& m);

struct ComponentTimes {
  double sim_active = 0;
  double sim_idle   = 0;
  double ana_active = 0;
  double ana_idle   = 0;
};

struct SweepResult {
  Scenario scenario;
  EfficiencyReport efficiency;
  ModelReport report;
  ComponentTimes component_times;
  double simulation_time = 0; // when the simulation component finished
  std::vector<std::string> warnings;
  std::vector<TraceEvent> trace; // first repetition, only when requested
};

struct RunOptions {
  bool keep_trace = false;
};

SweepResult run_scenario(const Scenario& s, const Platform& platform, RunOptions options = {});
SweepResult run_scenario(const Scenario& s, RunOptions options = {});

// --- sweeps ------------------------------------------------------------------------------------------------------

struct SweepSpec {
  Scenario base;
  std::vector<int> nodes;
  std::vector<int> ratios; // values of R, resolved against the platform's cores per node
  bool all_ratios = false; // every split of generate_ratio_allocations
  std::vector<std::pair<long, double>> stride_cost;
  std::vector<MappingMode> mappings;
  std::vector<double> data_scales;
};

/// Axes: nodes, ratio (list of R or "all"), stride_cost pairs or constant_budget + strides, mapping, data_scale.
/// A missing axis takes the base scenario's value.
SweepSpec parse_sweep_spec(std::string_view yaml, const std::filesystem::path& base_dir = {});
SweepSpec load_sweep_spec(const std::filesystem::path& path);

/// Cross product ordered by (nodes, R, stride, mapping, data_scale). Every scenario is checked for feasibility.
std::vector<Scenario> build_scenario_grid(const SweepSpec& spec, const Platform& platform);
std::vector<Scenario> build_scenario_grid(const SweepSpec& spec);

/// (T, T * budget / N) for each stride; every stride must divide N.
std::vector<std::pair<long, double>> constant_budget_pairs(long iterations, double budget,
                                                           const std::vector<long>& strides);

/// Runs scenarios on up to `workers` threads; results keep the input order.
std::vector<SweepResult> run_sweep(const std::vector<Scenario>& scenarios, const Platform& platform,
                                   unsigned workers = 1);

struct DataScalingRow {
  double scale = 0;
  MappingMode mode = MappingMode::in_situ;
  double simulation_time = 0;
};

/// Runs `base` in both mapping modes with a mailbox DTL at each scale.
std::vector<DataScalingRow> compare_data_scaling(const Scenario& base, const std::vector<double>& scales,
                                                 const Platform& platform, unsigned workers = 1);
void write_data_scaling_csv(std::ostream& out, const std::vector<DataScalingRow>& rows);

// --- reports -----------------------------------------------------------------------------------------------------

enum class ReportFormat { csv, structured };

ReportFormat parse_report_format(std::string_view text);

/// One exported report line, flattened.
struct ReportRow {
  std::string name;
  int nodes = 0;
  int sim_cores = 0;
  int ana_cores = 0;
  int R = 0;
  long stride = 0;
  double cost_scale = 0;
  std::string mapping;
  int dedicated_nodes = 0;
  double data_scale = 0;
  std::string dtl;
  long rho = 0;
  double S = 0, I = 0, G = 0, A = 0, Se = 0, C = 0;
  double idle_S = 0, idle_A = 0;
  double makespan_predicted = 0;
  double makespan_simulated = 0;
  double eta_predicted = 0;
  double eta_simulated = 0;
  std::string scenario;
  double sim_active = 0, sim_idle = 0, ana_active = 0, ana_idle = 0;
  double simulation_time = 0;

  bool operator==(const ReportRow&) const = default;
};

ReportRow to_report_row(const SweepResult& r);
std::vector<std::string> report_columns();

/// csv: fixed columns, times with 9 decimals and efficiencies with 6. structured: JSON, full precision.
/// Throws std::invalid_argument on an empty result list.
void export_report(std::ostream& out, const std::vector<SweepResult>& results, ReportFormat format);
/// Throws IoError when the file cannot be written; never leaves an empty file behind.
void export_report(const std::filesystem::path& path, const std::vector<SweepResult>& results, ReportFormat format);
std::vector<ReportRow> parse_report(std::string_view text, ReportFormat format);

} // namespace insitu
