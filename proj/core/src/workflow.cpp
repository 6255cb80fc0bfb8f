#include "insitu/workflow.hpp"

#include "insitu/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <random>

namespace insitu {

std::string_view to_string(StateRouting r)
{
  return r == StateRouting::shared ? "shared" : "node_local";
}

StateRouting parse_state_routing(std::string_view text)
{
  if (text == "shared")
    return StateRouting::shared;
  if (text == "node_local" || text == "node-local")
    return StateRouting::node_local;
  throw ParseError(fmt::format("unknown state routing '{}' (expected shared or node_local)", text));
}

void WorkflowConfig::validate() const
{
  if (total_iterations < 1)
    throw ConfigError("total iterations must be >= 1");
  if (stride < 1)
    throw ConfigError("stride must be >= 1");
  if (total_iterations % stride != 0)
    throw ConfigError(fmt::format("stride {} does not divide the iteration count {}", stride, total_iterations));
  if (exchange_every < 1)
    throw ConfigError("exchange periodicity must be >= 1");
  if (n_ranks < 1)
    throw ConfigError("need at least one rank");
  if (n_analytics_actors < 1)
    throw ConfigError("need at least one analytics actor");
  if (n_particles < 0)
    throw ConfigError("particle count must be non-negative");
  if (!(compute_scale >= 0) || !(data_scale >= 0) || !(analytics_penalty >= 0))
    throw ConfigError("scaling factors must be non-negative");
  if (!(cost_per_particle >= 0) || !(size_per_particle >= 0))
    throw ConfigError("per-particle cost and size must be non-negative");
  if (!(rank_iteration_work >= 0) || !(halo_bytes >= 0))
    throw ConfigError("rank work and halo size must be non-negative");
  if (!(jitter >= 0) || !(jitter < 1))
    throw ConfigError("jitter must lie in [0, 1)");
}

Workflow::Workflow(Simulation& sim, Dtl& dtl, const WorkflowConfig& cfg, Mapping ranks, Mapping analytics)
    : sim_(sim), dtl_(dtl), cfg_(cfg), rank_map_(std::move(ranks)), ana_map_(std::move(analytics))
{
  cfg_.validate();
  if (rank_map_.total() != cfg_.n_ranks)
    throw CountMismatch(fmt::format("rank mapping places {} ranks, expected {}", rank_map_.total(), cfg_.n_ranks));
  if (ana_map_.total() != cfg_.n_analytics_actors)
    throw CountMismatch(fmt::format("analytics mapping places {} actors, expected {}", ana_map_.total(),
                                    cfg_.n_analytics_actors));
  rank_nodes_ = rank_map_.expand();
  ana_nodes_  = ana_map_.expand();
  for (NodeId n : rank_nodes_)
    sim_.platform().node(n);
  for (NodeId n : ana_nodes_)
    sim_.platform().node(n);

  const Platform& p = sim_.platform();
  if (cfg_.state_routing == StateRouting::shared) {
    state_queues_.push_back(&dtl_.create_queue("state", cfg_.dtl_mode));
    rank_queue_.assign(rank_nodes_.size(), 0);
    actor_queue_.assign(ana_nodes_.size(), 0);
    actors_per_queue_.push_back(cfg_.n_analytics_actors);
  } else {
    std::vector<NodeId> ana_hosts = ana_map_.nodes();
    std::map<NodeId, std::size_t> queue_of_node;
    for (NodeId n : ana_hosts) {
      queue_of_node[n] = state_queues_.size();
      state_queues_.push_back(&dtl_.create_queue("state@" + p.node(n).name, cfg_.dtl_mode));
      actors_per_queue_.push_back(0);
    }
    for (NodeId n : ana_nodes_) {
      actor_queue_.push_back(queue_of_node.at(n));
      ++actors_per_queue_[queue_of_node.at(n)];
    }
    // Nodes without analytics are dealt to the analytics nodes round-robin, in order of appearance.
    std::map<NodeId, std::size_t> remote;
    for (NodeId n : rank_nodes_) {
      if (auto it = queue_of_node.find(n); it != queue_of_node.end()) {
        rank_queue_.push_back(it->second);
        continue;
      }
      auto [it, inserted] = remote.try_emplace(n, remote.size() % state_queues_.size());
      rank_queue_.push_back(it->second);
    }
  }
  metrics_ = &dtl_.create_queue("metrics", cfg_.dtl_mode);
  for (int r = 0; r < cfg_.n_ranks; ++r)
    results_.push_back(&dtl_.create_queue(fmt::format("results/{}", r), cfg_.dtl_mode));

  grid_ = rank_grid(cfg_.n_ranks);
  for (int r = 0; r < cfg_.n_ranks; ++r)
    neighbors_.push_back(halo_neighbors(grid_, r));
  halo_arrivals_.resize(static_cast<std::size_t>(cfg_.n_ranks));
  halo_signal_ = std::vector<Signal>(static_cast<std::size_t>(cfg_.n_ranks));
  live_analytics_ = cfg_.n_analytics_actors;
}

double Workflow::state_bytes(int rank) const
{
  return static_cast<double>(particles_of_rank(rank)) * cfg_.size_per_particle * cfg_.data_scale;
}

MessageQueue& Workflow::state_queue_for_rank(int rank)
{
  return *state_queues_[rank_queue_[static_cast<std::size_t>(rank)]];
}

void Workflow::spawn_all()
{
  for (int r = 0; r < cfg_.n_ranks; ++r) {
    Actor& a = sim_.spawn(fmt::format("rank-{}", r), rank_nodes_[static_cast<std::size_t>(r)],
                          [this, r](Actor& self) { return run_simulation_component(self, r); });
    rank_actors_.push_back(&a);
    rank_of_actor_[a.id()] = r;
  }
  for (int i = 0; i < cfg_.n_analytics_actors; ++i) {
    Actor& a = sim_.spawn(fmt::format("analytics-{}", i), ana_nodes_[static_cast<std::size_t>(i)],
                          [this, i](Actor& self) { return run_analytics_actor(self, i); });
    analytics_actors_.push_back(&a);
  }
  collector_ = &sim_.spawn("collector", ana_nodes_.front(), [this](Actor& self) { return run_metric_collector(self); });
}

Task<> Workflow::halo_exchange(Actor& self, int rank, long round)
{
  const auto& nbrs = neighbors_[static_cast<std::size_t>(rank)];
  std::vector<Completion> sends;
  sends.reserve(nbrs.size());
  for (int n : nbrs) {
    auto dst = static_cast<std::size_t>(n);
    sends.push_back(sim_.start_comm(self.node(), rank_nodes_[dst], cfg_.halo_bytes, [this, dst, round](SimTime) {
      ++halo_arrivals_[dst][round];
      sim_.notify(halo_signal_[dst]);
    }));
  }
  for (auto& c : sends)
    co_await sim_.wait(self, c);

  auto& arrivals       = halo_arrivals_[static_cast<std::size_t>(rank)];
  const auto expected  = static_cast<int>(nbrs.size());
  co_await sim_.wait_until(
      self, halo_signal_[static_cast<std::size_t>(rank)],
      [&arrivals, round, expected] {
        auto it = arrivals.find(round);
        return it != arrivals.end() && it->second >= expected;
      },
      fmt::format("halo round {}", round));
  arrivals.erase(round);
}

Task<> Workflow::collect(Actor& self, int rank, long step)
{
  const SimTime asked = sim_.now();
  Message m           = co_await results_[static_cast<std::size_t>(rank)]->get(self);
  if (m.matched_time > asked) {
    sim_.trace_at(asked, self, StageLabel::other, fmt::format("wait begin step={}", step));
    sim_.trace_at(m.matched_time, self, StageLabel::other, fmt::format("wait end step={}", step));
  }
  sim_.trace_at(m.matched_time, self, StageLabel::C, stage_detail(true, step));
  sim_.trace(self, StageLabel::C, stage_detail(false, step));
}

Task<> Workflow::run_simulation_component(Actor& self, int rank)
{
  const long steps = cfg_.steps();
  const long T     = cfg_.stride;
  const long X     = cfg_.exchange_every;
  const bool halo  = cfg_.halo_bytes > 0 && !neighbors_[static_cast<std::size_t>(rank)].empty();
  std::mt19937_64 rng(cfg_.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(rank));
  std::uniform_real_distribution<double> noise(-1.0, 1.0);

  long iteration  = 0;
  long halo_round = 0;
  for (long step = 1; step <= steps; ++step) {
    sim_.trace(self, StageLabel::S, stage_detail(true, step));
    for (long done = 0; done < T;) {
      long chunk  = std::min(T - done, X - iteration % X);
      double work = static_cast<double>(chunk) * cfg_.rank_iteration_work;
      if (cfg_.jitter > 0)
        work *= 1.0 + cfg_.jitter * noise(rng);
      co_await sim_.execute_compute(self, work);
      iteration += chunk;
      done += chunk;
      if (halo && iteration % X == 0)
        co_await halo_exchange(self, rank, halo_round++);
    }
    sim_.trace(self, StageLabel::S, stage_detail(false, step));

    // Metrics of the previous analysis must be back before the next ingest.
    if (step >= 2)
      co_await collect(self, rank, step - 1);

    sim_.trace(self, StageLabel::I, stage_detail(true, step));
    co_await state_queue_for_rank(rank).put_async(self, Message::data(self, state_bytes(rank), step));
    sim_.trace(self, StageLabel::I, stage_detail(false, step));
  }
  co_await collect(self, rank, steps);
  simulation_end_ = std::max(simulation_end_, sim_.now());

  if (rank == 0) {
    for (std::size_t q = 0; q < state_queues_.size(); ++q)
      for (long k = 0; k < actors_per_queue_[q]; ++k)
        co_await state_queues_[q]->put_async(self, Message::poison(self));
    sim_.trace(self, StageLabel::other, "poison analytics");
  }
}

Task<> Workflow::run_analytics_actor(Actor& self, int index)
{
  MessageQueue& state = *state_queues_[actor_queue_[static_cast<std::size_t>(index)]];
  while (true) {
    const SimTime asked = sim_.now();
    Message m           = co_await state.get(self);
    if (m.is_poison()) {
      sim_.trace(self, StageLabel::other, "poison received");
      if (--live_analytics_ == 0) {
        co_await metrics_->put_async(self, Message::poison(self));
        sim_.trace(self, StageLabel::other, "poison collector");
      }
      co_return;
    }
    const long step = m.tag;
    if (m.matched_time > asked) {
      sim_.trace_at(asked, self, StageLabel::other, fmt::format("wait begin step={}", step));
      sim_.trace_at(m.matched_time, self, StageLabel::other, fmt::format("wait end step={}", step));
    }
    sim_.trace_at(m.matched_time, self, StageLabel::G, stage_detail(true, step));
    sim_.trace(self, StageLabel::G, stage_detail(false, step));

    sim_.trace(self, StageLabel::A, stage_detail(true, step));
    const long particles = particles_of_rank(rank_of_actor_.at(m.producer));
    co_await sim_.execute_compute(self, static_cast<double>(particles) * cfg_.cost_per_particle *
                                            cfg_.compute_scale * cfg_.analytics_penalty);
    sim_.trace(self, StageLabel::A, stage_detail(false, step));

    sim_.trace(self, StageLabel::Se, stage_detail(true, step));
    co_await metrics_->put_async(self, Message::data(self, kMetricsMessageBytes, step));
    sim_.trace(self, StageLabel::Se, stage_detail(false, step));
  }
}

Task<> Workflow::run_metric_collector(Actor& self)
{
  for (long round = 1;; ++round) {
    long collected   = 0;
    std::int64_t tag = 0;
    while (collected < cfg_.n_ranks) {
      Message m = co_await metrics_->get(self);
      if (m.is_poison()) {
        sim_.trace(self, StageLabel::other, fmt::format("poison round={} collected={}", round, collected));
        co_return;
      }
      ++collected;
      tag = m.tag;
      sim_.trace(self, StageLabel::other, fmt::format("metric round={} n={}", round, collected));
    }
    ++firings_;
    sim_.trace(self, StageLabel::other, fmt::format("fire round={} step={}", round, tag));
    for (int copy = 0; copy < cfg_.n_ranks; ++copy) {
      co_await results_[static_cast<std::size_t>(copy)]->put_async(self, Message::data(self, kMetricsMessageBytes, tag));
      sim_.trace(self, StageLabel::other, fmt::format("result round={} copy={}", round, copy + 1));
    }
  }
}

WorkflowResult run_workflow(const Platform& platform, const WorkflowConfig& cfg, const Mapping& ranks,
                            const Mapping& analytics, WorkflowRunOptions options)
{
  Simulation sim(platform);
  sim.set_tracing(options.trace);
  Dtl dtl(sim);
  Workflow wf(sim, dtl, cfg, ranks, analytics);
  wf.spawn_all();

  WorkflowResult r;
  r.end_time = sim.run();
  dtl.close_all();

  r.trace             = sim.trace_events();
  r.simulation_end    = wf.simulation_end();
  r.total_puts        = dtl.total_puts();
  r.total_gets        = dtl.total_gets();
  r.collector_firings = wf.collector_firings();
  r.events            = sim.events_processed();
  r.flows             = sim.flows_started();
  for (ActorId id = 0; id < sim.actor_count(); ++id)
    if (sim.actor(id).state() != ActorState::terminated)
      ++r.live_actors;
  for (const Actor* a : wf.ranks())
    r.rank_actors.push_back(a->id());
  for (const Actor* a : wf.analytics())
    r.analytics_actors.push_back(a->id());
  r.collector_actor = wf.collector()->id();
  return r;
}

} // namespace insitu
