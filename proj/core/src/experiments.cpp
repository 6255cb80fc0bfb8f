#include "insitu/experiments.hpp"

#include "insitu/errors.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace insitu {

std::string_view to_string(MappingMode m)
{
  return m == MappingMode::in_situ ? "in-situ" : "in-transit";
}

MappingMode parse_mapping_mode(std::string_view text)
{
  if (text == "in-situ" || text == "in_situ" || text == "insitu")
    return MappingMode::in_situ;
  if (text == "in-transit" || text == "in_transit" || text == "intransit")
    return MappingMode::in_transit;
  throw ParseError(fmt::format("unknown mapping mode '{}' (expected in-situ or in-transit)", text));
}

void Scenario::validate() const
{
  if (n_nodes < 1)
    throw ConfigError(fmt::format("scenario '{}': nodes must be >= 1", name));
  if (ratio.sim_cores_per_node < 1 || ratio.ana_cores_per_node < 1)
    throw ConfigError(fmt::format("scenario '{}': ratio needs at least one core on each side", name));
  if (stride < 1 || workflow.iterations < 1 || workflow.iterations % stride != 0)
    throw ConfigError(fmt::format("scenario '{}': stride {} must divide {} iterations", name, stride,
                                  workflow.iterations));
  if (!(cost_scale >= 0) || !(data_scale >= 0) || !(scatter_alpha >= 0))
    throw ConfigError(fmt::format("scenario '{}': cost, data scale and alpha must be non-negative", name));
  if (mapping_mode == MappingMode::in_transit && (dedicated_nodes < 1 || dedicated_nodes >= n_nodes))
    throw ConfigError(fmt::format("scenario '{}': in-transit needs 1 <= dedicated nodes < nodes ({} of {})", name,
                                  dedicated_nodes, n_nodes));
  if (repetitions < 1)
    throw ConfigError(fmt::format("scenario '{}': repetitions must be >= 1", name));
}

AllocationRatio ratio_for(int R, int cores_per_node)
{
  if (R < 1 || cores_per_node < 2 || cores_per_node % (R + 1) != 0)
    throw InfeasibleScenario(fmt::format("ratio R={} cannot split {} cores per node", R, cores_per_node));
  int ana = cores_per_node / (R + 1);
  return AllocationRatio{R, cores_per_node - ana, ana};
}

// --- scenario files ----------------------------------------------------------------------------------------------

namespace {

template <class T>
T as(const YAML::Node& n, std::string_view key)
{
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ParseError(fmt::format("field '{}' has an invalid value", key));
  }
}

const std::set<std::string, std::less<>> kScenarioKeys{
    "name",   "platform",      "nodes",  "ratio",        "stride",        "cost",
    "mapping", "dedicated_nodes", "data_scale", "dtl",    "repetitions",   "scatter_alpha",
    "jitter", "seed",          "state_routing", "workflow"};

const std::set<std::string, std::less<>> kWorkflowKeys{
    "iterations", "exchange_every", "iteration_work", "halo_bytes", "particles", "cost_per_particle",
    "size_per_particle"};

void check_keys(const YAML::Node& map, const std::set<std::string, std::less<>>& allowed, std::string_view where)
{
  for (const auto& kv : map) {
    auto key = kv.first.as<std::string>();
    if (!allowed.count(key))
      throw ParseError(fmt::format("unknown key '{}' in {}", key, where));
  }
}

YAML::Node load_yaml(std::string_view text)
{
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ParseError(fmt::format("invalid YAML: {}", e.what()));
  }
}

std::string read_file(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw ParseError(fmt::format("cannot open '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Scenario scenario_from_node(const YAML::Node& root, const std::filesystem::path& base_dir)
{
  if (!root.IsMap())
    throw ParseError("a scenario must be a mapping");
  check_keys(root, kScenarioKeys, "scenario");
  Scenario s;
  if (auto n = root["name"])
    s.name = as<std::string>(n, "name");
  if (!root["platform"])
    throw ParseError("scenario has no 'platform'");
  s.platform = as<std::string>(root["platform"], "platform");
  if (s.platform.is_relative() && !base_dir.empty())
    s.platform = base_dir / s.platform;
  if (auto n = root["nodes"])
    s.n_nodes = as<int>(n, "nodes");
  if (auto n = root["stride"])
    s.stride = as<long>(n, "stride");
  if (auto n = root["cost"])
    s.cost_scale = as<double>(n, "cost");
  if (auto n = root["mapping"])
    s.mapping_mode = parse_mapping_mode(as<std::string>(n, "mapping"));
  if (auto n = root["dedicated_nodes"])
    s.dedicated_nodes = as<int>(n, "dedicated_nodes");
  if (auto n = root["data_scale"])
    s.data_scale = as<double>(n, "data_scale");
  if (auto n = root["dtl"])
    s.dtl_mode = parse_queue_mode(as<std::string>(n, "dtl"));
  if (auto n = root["repetitions"])
    s.repetitions = as<int>(n, "repetitions");
  if (auto n = root["scatter_alpha"])
    s.scatter_alpha = as<double>(n, "scatter_alpha");
  if (auto n = root["jitter"])
    s.jitter = as<double>(n, "jitter");
  if (auto n = root["seed"])
    s.seed = as<std::uint64_t>(n, "seed");
  if (auto n = root["state_routing"])
    s.state_routing = parse_state_routing(as<std::string>(n, "state_routing"));

  if (auto w = root["workflow"]) {
    if (!w.IsMap())
      throw ParseError("'workflow' must be a mapping");
    check_keys(w, kWorkflowKeys, "workflow");
    WorkflowParams& p = s.workflow;
    if (auto n = w["iterations"])
      p.iterations = as<long>(n, "iterations");
    if (auto n = w["exchange_every"])
      p.exchange_every = as<long>(n, "exchange_every");
    if (auto n = w["iteration_work"])
      p.iteration_work = as<double>(n, "iteration_work");
    if (auto n = w["halo_bytes"])
      p.halo_bytes = as<double>(n, "halo_bytes");
    if (auto n = w["particles"])
      p.particles = as<long>(n, "particles");
    if (auto n = w["cost_per_particle"])
      p.cost_per_particle = as<double>(n, "cost_per_particle");
    if (auto n = w["size_per_particle"])
      p.size_per_particle = as<double>(n, "size_per_particle");
  }

  if (auto r = root["ratio"]) {
    if (r.IsSequence()) {
      if (r.size() != 2)
        throw ParseError("'ratio' pair must be [sim_cores, ana_cores]");
      int sim = as<int>(r[0], "ratio"), ana = as<int>(r[1], "ratio");
      if (sim < 1 || ana < 1)
        throw ParseError("'ratio' core counts must be positive");
      s.ratio = AllocationRatio{sim / ana, sim, ana};
    } else {
      Platform p = load_platform(s.platform);
      s.ratio    = ratio_for(as<int>(r, "ratio"), p.node(0).cores);
    }
  }
  s.validate();
  return s;
}

} // namespace

Scenario parse_scenario(std::string_view yaml, const std::filesystem::path& base_dir)
{
  return scenario_from_node(load_yaml(yaml), base_dir);
}

Scenario load_scenario(const std::filesystem::path& path)
{
  return parse_scenario(read_file(path), path.parent_path());
}

// --- mappings ----------------------------------------------------------------------------------------------------

ScenarioMappings build_mappings(const Scenario& s, const Platform& platform)
{
  s.validate();
  if (static_cast<std::size_t>(s.n_nodes) > platform.node_count())
    throw InfeasibleScenario(fmt::format("scenario '{}' needs {} nodes, the platform has {}", s.name, s.n_nodes,
                                         platform.node_count()));
  const int sim = s.ratio.sim_cores_per_node;
  const int ana = s.ratio.ana_cores_per_node;
  ScenarioMappings m;

  if (s.mapping_mode == MappingMode::in_situ) {
    for (NodeId n = 0; n < static_cast<NodeId>(s.n_nodes); ++n) {
      if (sim + ana > platform.node(n).cores)
        throw InfeasibleScenario(fmt::format("scenario '{}': node '{}' has {} cores, the ratio needs {}", s.name,
                                             platform.node(n).name, platform.node(n).cores, sim + ana));
      m.ranks.entries.emplace_back(n, sim);
      m.analytics.entries.emplace_back(n, ana);
    }
    return m;
  }

  auto fill = [&](Mapping& out, long count, NodeId first, NodeId last, std::string_view what) {
    for (NodeId n = first; n < last && count > 0; ++n) {
      int here = static_cast<int>(std::min<long>(count, platform.node(n).cores));
      out.entries.emplace_back(n, here);
      count -= here;
    }
    if (count > 0)
      throw InfeasibleScenario(fmt::format("scenario '{}': {} {} do not fit on their {} nodes", s.name, count, what,
                                           last - first));
  };
  const auto split = static_cast<NodeId>(s.n_nodes - s.dedicated_nodes);
  fill(m.ranks, s.n_ranks(), 0, split, "ranks");
  fill(m.analytics, s.n_analytics(), split, static_cast<NodeId>(s.n_nodes), "analytics actors");
  return m;
}

WorkflowConfig build_workflow_config(const Scenario& s, const ScenarioMappings& m)
{
  WorkflowConfig c;
  c.total_iterations    = s.workflow.iterations;
  c.stride              = s.stride;
  c.exchange_every      = s.workflow.exchange_every;
  c.n_ranks             = static_cast<int>(m.ranks.total());
  c.rank_iteration_work = s.workflow.iteration_work / c.n_ranks;
  c.halo_bytes          = s.workflow.halo_bytes;
  c.n_analytics_actors  = static_cast<int>(m.analytics.total());
  c.cost_per_particle   = s.workflow.cost_per_particle;
  c.compute_scale       = s.cost_scale;
  c.size_per_particle   = s.workflow.size_per_particle;
  c.data_scale          = s.data_scale;
  c.n_particles         = s.workflow.particles;
  c.dtl_mode            = s.dtl_mode;
  c.state_routing       = s.state_routing;
  c.analytics_penalty   = s.analytics_penalty(static_cast<int>(m.analytics.nodes().size()));
  c.jitter              = s.jitter;
  c.seed                = s.seed;
  c.validate();
  return c;
}

// --- running -----------------------------------------------------------------------------------------------------

SweepResult run_scenario(const Scenario& s, const Platform& platform, RunOptions options)
{
  const ScenarioMappings m = build_mappings(s, platform);
  WorkflowConfig cfg       = build_workflow_config(s, m);

  SweepResult out;
  out.scenario = s;
  ExtractedStages mean;
  mean.eta_simulated = 0;
  const double reps = s.repetitions;
  for (int rep = 0; rep < s.repetitions; ++rep) {
    cfg.seed         = s.seed + static_cast<std::uint64_t>(rep);
    WorkflowResult w = run_workflow(platform, cfg, m.ranks, m.analytics);
    ExtractedStages x = extract_stages(w.trace, cfg);
    if (rep == 0) {
      mean.rho   = x.rho;
      mean.steps = x.steps;
      if (options.keep_trace)
        out.trace = std::move(w.trace);
    }
    mean.steady.S += x.steady.S / reps;
    mean.steady.I += x.steady.I / reps;
    mean.steady.G += x.steady.G / reps;
    mean.steady.A += x.steady.A / reps;
    mean.steady.Se += x.steady.Se / reps;
    mean.steady.C += x.steady.C / reps;
    mean.steady_span += x.steady_span / reps;
    mean.makespan_simulated += x.makespan_simulated / reps;
    mean.eta_simulated += x.eta_simulated / reps;
    mean.max_deviation = std::max(mean.max_deviation, x.max_deviation);
    out.simulation_time += w.simulation_end / reps;
    for (auto& warning : x.warnings)
      if (std::find(out.warnings.begin(), out.warnings.end(), warning) == out.warnings.end())
        out.warnings.push_back(std::move(warning));
  }

  out.report     = compare_with_model(mean);
  out.efficiency = evaluate(ModelInputs{mean.steady, mean.rho, 1});

  const double span  = mean.steady_span;
  const double steps = static_cast<double>(mean.rho - 1);
  ComponentTimes& ct = out.component_times;
  ct.sim_active      = std::min(span, steps * simulation_side(mean.steady));
  ct.sim_idle        = span - ct.sim_active;
  ct.ana_active      = std::min(span, steps * analytics_side(mean.steady));
  ct.ana_idle        = span - ct.ana_active;
  return out;
}

SweepResult run_scenario(const Scenario& s, RunOptions options)
{
  return run_scenario(s, load_platform(s.platform), options);
}

std::vector<SweepResult> run_sweep(const std::vector<Scenario>& scenarios, const Platform& platform, unsigned workers)
{
  std::vector<SweepResult> results(scenarios.size());
  std::vector<std::exception_ptr> errors(scenarios.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      try {
        results[i] = run_scenario(scenarios[i], platform);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(std::max<std::size_t>(1, scenarios.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
  return results;
}

// --- sweeps ------------------------------------------------------------------------------------------------------

std::vector<std::pair<long, double>> constant_budget_pairs(long iterations, double budget,
                                                           const std::vector<long>& strides)
{
  std::vector<std::pair<long, double>> out;
  for (long T : strides) {
    if (T < 1 || iterations % T != 0)
      throw ConfigError(fmt::format("stride {} does not divide {} iterations", T, iterations));
    out.emplace_back(T, budget * static_cast<double>(T) / static_cast<double>(iterations));
  }
  return out;
}

SweepSpec parse_sweep_spec(std::string_view yaml, const std::filesystem::path& base_dir)
{
  YAML::Node root = load_yaml(yaml);
  if (!root.IsMap() || !root["base"])
    throw ParseError("a sweep spec needs a 'base' scenario");
  check_keys(root, {"base", "axes"}, "sweep spec");
  SweepSpec spec;
  spec.base = scenario_from_node(root["base"], base_dir);

  YAML::Node axes = root["axes"];
  if (!axes)
    return spec;
  if (!axes.IsMap())
    throw ParseError("'axes' must be a mapping");
  check_keys(axes, {"nodes", "ratio", "stride_cost", "constant_budget", "strides", "mapping", "data_scale"}, "axes");

  if (auto n = axes["nodes"])
    spec.nodes = as<std::vector<int>>(n, "nodes");
  if (auto n = axes["ratio"]) {
    if (n.IsScalar() && n.Scalar() == "all")
      spec.all_ratios = true;
    else
      spec.ratios = as<std::vector<int>>(n, "ratio");
  }
  if (axes["stride_cost"] && axes["constant_budget"])
    throw ParseError("use either 'stride_cost' or 'constant_budget', not both");
  if (auto n = axes["stride_cost"]) {
    for (const auto& pair : n) {
      if (!pair.IsSequence() || pair.size() != 2)
        throw ParseError("'stride_cost' entries must be [stride, cost] pairs");
      spec.stride_cost.emplace_back(as<long>(pair[0], "stride_cost"), as<double>(pair[1], "stride_cost"));
    }
  }
  if (auto n = axes["constant_budget"]) {
    if (!axes["strides"])
      throw ParseError("'constant_budget' requires 'strides'");
    spec.stride_cost = constant_budget_pairs(spec.base.workflow.iterations, as<double>(n, "constant_budget"),
                                             as<std::vector<long>>(axes["strides"], "strides"));
  } else if (axes["strides"]) {
    throw ParseError("'strides' is only meaningful with 'constant_budget'");
  }
  if (auto n = axes["mapping"])
    for (const auto& m : n)
      spec.mappings.push_back(parse_mapping_mode(as<std::string>(m, "mapping")));
  if (auto n = axes["data_scale"])
    spec.data_scales = as<std::vector<double>>(n, "data_scale");
  return spec;
}

SweepSpec load_sweep_spec(const std::filesystem::path& path)
{
  return parse_sweep_spec(read_file(path), path.parent_path());
}

std::vector<Scenario> build_scenario_grid(const SweepSpec& spec, const Platform& platform)
{
  const Scenario& b = spec.base;
  auto nodes        = spec.nodes.empty() ? std::vector<int>{b.n_nodes} : spec.nodes;
  std::sort(nodes.begin(), nodes.end());

  const int cores = platform.node(0).cores;
  std::vector<AllocationRatio> ratios;
  if (spec.all_ratios)
    ratios = generate_ratio_allocations(cores);
  for (int R : spec.ratios)
    ratios.push_back(ratio_for(R, cores));
  if (ratios.empty())
    ratios.push_back(b.ratio);
  std::sort(ratios.begin(), ratios.end(), [](const AllocationRatio& x, const AllocationRatio& y) {
    return std::tie(x.R, y.sim_cores_per_node) < std::tie(y.R, x.sim_cores_per_node);
  });

  auto sc = spec.stride_cost.empty() ? std::vector<std::pair<long, double>>{{b.stride, b.cost_scale}}
                                     : spec.stride_cost;
  std::sort(sc.begin(), sc.end());
  auto mappings = spec.mappings.empty() ? std::vector<MappingMode>{b.mapping_mode} : spec.mappings;
  std::sort(mappings.begin(), mappings.end());
  auto scales = spec.data_scales.empty() ? std::vector<double>{b.data_scale} : spec.data_scales;
  std::sort(scales.begin(), scales.end());

  std::vector<Scenario> out;
  for (int n : nodes)
    for (const auto& r : ratios)
      for (const auto& [T, cost] : sc)
        for (MappingMode mode : mappings)
          for (double scale : scales) {
            Scenario s     = b;
            s.n_nodes      = n;
            s.ratio        = r;
            s.stride       = T;
            s.cost_scale   = cost;
            s.mapping_mode = mode;
            s.data_scale   = scale;
            s.name = fmt::format("{}-n{}-R{}-T{}-c{}-{}-x{}", b.name, n, r.R, T, cost, to_string(mode), scale);
            build_mappings(s, platform);
            out.push_back(std::move(s));
          }
  return out;
}

std::vector<Scenario> build_scenario_grid(const SweepSpec& spec)
{
  return build_scenario_grid(spec, load_platform(spec.base.platform));
}

// --- data scaling ------------------------------------------------------------------------------------------------

std::vector<DataScalingRow> compare_data_scaling(const Scenario& base, const std::vector<double>& scales,
                                                 const Platform& platform, unsigned workers)
{
  if (scales.empty())
    throw std::invalid_argument("compare_data_scaling: no scales given");
  std::vector<Scenario> runs;
  for (double scale : scales) {
    if (!(scale >= 0))
      throw std::invalid_argument(fmt::format("compare_data_scaling: invalid scale {}", scale));
    for (MappingMode mode : {MappingMode::in_situ, MappingMode::in_transit}) {
      Scenario s     = base;
      s.data_scale   = scale;
      s.mapping_mode = mode;
      s.dtl_mode     = QueueMode::mailbox;
      s.name         = fmt::format("{}-{}-x{}", base.name, to_string(mode), scale);
      runs.push_back(std::move(s));
    }
  }
  auto results = run_sweep(runs, platform, workers);
  std::vector<DataScalingRow> rows;
  for (const auto& r : results)
    rows.push_back(DataScalingRow{r.scenario.data_scale, r.scenario.mapping_mode, r.simulation_time});
  return rows;
}

void write_data_scaling_csv(std::ostream& out, const std::vector<DataScalingRow>& rows)
{
  out << "scale,mode,simulation_time\n";
  for (const auto& r : rows)
    out << fmt::format("{},{},{:.9f}\n", r.scale, to_string(r.mode), r.simulation_time);
}

} // namespace insitu
