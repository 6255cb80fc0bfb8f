#pragma once

#include "insitu/dtl.hpp"
#include "insitu/engine.hpp"
#include "insitu/platform.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace insitu {

// --- mappings ----------------------------------------------------------------------------------------------------

/// Hostfile-like placement: each entry puts `slots` entities on a node, in order.
struct Mapping {
  std::vector<std::pair<NodeId, int>> entries;

  long total() const;
  /// One node id per mapped entity, in mapping order.
  std::vector<NodeId> expand() const;
  /// Distinct nodes used, in first-appearance order.
  std::vector<NodeId> nodes() const;
};

/// Text format: one `node-name count` pair per line, `#` starts a comment.
Mapping parse_mapping(std::string_view text, const Platform& platform, long expected);
Mapping load_mapping(const std::filesystem::path& path, const Platform& platform, long expected);
std::string format_mapping(const Mapping& m, const Platform& platform);

/// Throws ValidationError if the mappings together put more entities on a node than it has cores.
void check_core_capacity(const Platform& platform, const std::vector<const Mapping*>& mappings);

// --- allocation ratios -------------------------------------------------------------------------------------------

struct AllocationRatio {
  int R                  = 1;
  int sim_cores_per_node = 0;
  int ana_cores_per_node = 0;

  bool operator==(const AllocationRatio&) const = default;
};

/// Splits (c - k, k) for k = c/2, c/4, ..., 1. `cores_per_node` must be a power of two >= 2.
std::vector<AllocationRatio> generate_ratio_allocations(int cores_per_node);

// --- workflow configuration --------------------------------------------------------------------------------------

/// How ranks pick the state queue they ingest into.
/// shared: one state queue for the whole workflow.
/// node_local: one state queue per node hosting analytics actors; ranks use the queue of their own node when it has
/// one, otherwise the analytics nodes are assigned round-robin by node.
enum class StateRouting { shared, node_local };

std::string_view to_string(StateRouting r);
StateRouting parse_state_routing(std::string_view text);

inline constexpr double kMetricsMessageBytes = 64;

struct WorkflowConfig {
  long total_iterations = 8000; // N
  long stride           = 1000; // T, analysis every T iterations
  long exchange_every   = 20;   // X, halo exchange periodicity
  int n_ranks           = 1;
  double rank_iteration_work = 0; // work units per iteration per rank
  double halo_bytes          = 0; // bytes per neighbor exchange

  // The six analytics parameters.
  int n_analytics_actors = 1;
  std::string analytics_mapping; // hostfile path (informational once the Mapping is loaded)
  double cost_per_particle = 0;  // seconds per particle on a reference core
  double compute_scale     = 1;
  double size_per_particle = 0; // bytes
  double data_scale        = 1;

  long n_particles   = 0;
  QueueMode dtl_mode = QueueMode::instantaneous;

  // Extensions used by the experiment driver.
  StateRouting state_routing = StateRouting::shared;
  double analytics_penalty   = 1.0; // multiplies analytics work (resource scattering)
  double jitter              = 0.0; // relative amplitude of per-chunk compute noise, 0 = deterministic
  std::uint64_t seed         = 0;

  long steps() const { return stride > 0 ? total_iterations / stride : 0; }
  /// Throws ConfigError when an invariant is violated (T must divide N, X >= 1, counts >= 1, scales >= 0).
  void validate() const;
};

/// Near-equal partition: the first (n_particles mod n_actors) actors get one extra particle.
long assign_particles(long n_particles, long n_actors, long index);

/// Factorization of n into three factors with minimal surface (most cubic), sorted descending.
std::array<int, 3> rank_grid(int n_ranks);

/// Distinct-direction neighbors of `rank` on the periodic 3D grid (self excluded), one entry per direction.
std::vector<int> halo_neighbors(const std::array<int, 3>& grid, int rank);

// --- the workflow itself -----------------------------------------------------------------------------------------

struct WorkflowRunOptions {
  bool trace = true;
};

struct WorkflowResult {
  std::vector<TraceEvent> trace;
  SimTime end_time            = 0; // last processed event
  SimTime simulation_end      = 0; // when the last rank finished its final collect
  std::uint64_t total_puts    = 0;
  std::uint64_t total_gets    = 0;
  std::size_t live_actors     = 0; // actors not terminated at the end (0 for a clean shutdown)
  long collector_firings      = 0;
  std::uint64_t events        = 0;
  std::uint64_t flows         = 0;
  std::vector<ActorId> rank_actors;
  std::vector<ActorId> analytics_actors;
  ActorId collector_actor     = 0;
};

/// Actor programs and shared state of one in-situ workflow instance inside a Simulation.
///
/// Queue topology: state queue(s) from ranks to analytics actors, a metrics queue from analytics actors to the
/// metric collector, and one results queue per rank fed by the collector. All follow cfg.dtl_mode.
class Workflow {
public:
  Workflow(Simulation& sim, Dtl& dtl, const WorkflowConfig& cfg, Mapping ranks, Mapping analytics);

  /// Spawns ranks (in rank order), then analytics actors, then the collector on the first analytics node.
  void spawn_all();

  /// One MD rank: per step, simulate T iterations with periodic halo exchanges (S), collect the previous step's
  /// metrics (C), ingest its state share asynchronously (I). Ends with the last collect; rank 0 then poisons the
  /// analytics actors.
  Task<> run_simulation_component(Actor& self, int rank);
  /// Get state (G); on poison, the last actor alive poisons the collector; otherwise analyze (A) and send
  /// metrics asynchronously (Se).
  Task<> run_analytics_actor(Actor& self, int index);
  /// Accumulates one metric set per rank, then puts one copy of the result per rank. Returns on poison.
  Task<> run_metric_collector(Actor& self);

  const WorkflowConfig& config() const { return cfg_; }
  long particles_of_rank(int rank) const { return assign_particles(cfg_.n_particles, cfg_.n_ranks, rank); }
  double state_bytes(int rank) const;
  long collector_firings() const { return firings_; }
  SimTime simulation_end() const { return simulation_end_; }
  const std::vector<Actor*>& ranks() const { return rank_actors_; }
  const std::vector<Actor*>& analytics() const { return analytics_actors_; }
  Actor* collector() const { return collector_; }

private:
  Task<> halo_exchange(Actor& self, int rank, long round);
  Task<> collect(Actor& self, int rank, long step);
  MessageQueue& state_queue_for_rank(int rank);

  Simulation& sim_;
  Dtl& dtl_;
  WorkflowConfig cfg_;
  Mapping rank_map_;
  Mapping ana_map_;
  std::vector<NodeId> rank_nodes_;
  std::vector<NodeId> ana_nodes_;

  std::vector<MessageQueue*> state_queues_;      // one per analytics node (node_local) or a single one
  std::vector<std::size_t> rank_queue_;          // rank -> index in state_queues_
  std::vector<std::size_t> actor_queue_;         // analytics actor -> index in state_queues_
  std::vector<long> actors_per_queue_;
  MessageQueue* metrics_ = nullptr;
  std::vector<MessageQueue*> results_;           // one per rank, so each rank gets its own copy

  std::array<int, 3> grid_{1, 1, 1};
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::map<long, int>> halo_arrivals_;
  std::vector<Signal> halo_signal_;

  std::vector<Actor*> rank_actors_;
  std::vector<Actor*> analytics_actors_;
  std::map<ActorId, int> rank_of_actor_;
  Actor* collector_ = nullptr;
  long live_analytics_ = 0;
  long firings_        = 0;
  SimTime simulation_end_ = 0;
};

/// Builds a simulation over `platform`, runs the workflow to completion and returns its trace and counters.
WorkflowResult run_workflow(const Platform& platform, const WorkflowConfig& cfg, const Mapping& ranks,
                            const Mapping& analytics, WorkflowRunOptions options = {});

} // namespace insitu
