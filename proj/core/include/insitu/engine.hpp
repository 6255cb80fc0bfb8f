#pragma once

#include "insitu/flow_network.hpp"
#include "insitu/platform.hpp"
#include "insitu/task.hpp"
#include "insitu/trace.hpp"

#include <coroutine>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

namespace insitu {

using SimTime = double; // seconds of virtual time

class Simulation;

enum class ActorState { runnable, blocked, terminated };

/// A simulated process pinned to a node. Owned by its Simulation; handed out by reference.
class Actor {
public:
  Actor(const Actor&)            = delete;
  Actor& operator=(const Actor&) = delete;

  ActorId id() const { return id_; }
  NodeId node() const { return node_; }
  const std::string& name() const { return name_; }
  ActorState state() const { return state_; }
  /// What a blocked actor is waiting on (empty otherwise).
  const std::string& waiting_on() const { return waiting_on_; }
  Simulation& simulation() const { return *sim_; }

private:
  friend class Simulation;
  Actor(Simulation& sim, ActorId id, NodeId node, std::string name, std::function<Task<>(Actor&)> body)
      : sim_(&sim), id_(id), node_(node), name_(std::move(name)), body_(std::move(body))
  {
  }

  Simulation* sim_;
  ActorId id_;
  NodeId node_;
  std::string name_;
  std::function<Task<>(Actor&)> body_;
  Task<> root_;
  ActorState state_ = ActorState::runnable;
  std::coroutine_handle<> resume_point_;
  std::string waiting_on_;
  bool wake_pending_ = false;
};

/// Shared completion flag of an activity (compute, communication, asynchronous DTL operation).
/// Completes exactly once; waiting on a completed one returns immediately.
class Completion {
public:
  Completion() = default;

  bool valid() const { return static_cast<bool>(state_); }
  std::uint64_t id() const { return state_->id; }
  bool done() const { return state_->done; }
  /// Completion time; meaningful once done().
  SimTime time() const { return state_->time; }

private:
  friend class Simulation;
  struct State {
    std::uint64_t id = 0;
    bool done        = false;
    SimTime time     = 0;
    std::vector<Actor*> waiters;
    std::function<void(SimTime)> on_done;
  };
  explicit Completion(std::shared_ptr<State> s) : state_(std::move(s)) {}
  std::shared_ptr<State> state_;
};

/// Wake-up point for actors waiting on an arbitrary predicate (see Simulation::wait_until).
class Signal {
public:
  bool has_waiters() const { return !waiters_.empty(); }

private:
  friend class Simulation;
  std::vector<Actor*> waiters_;
};

/// One deterministic discrete-event simulation instance.
///
/// Actors are C++20 coroutines scheduled cooperatively on a single thread. Every wake-up goes through the event
/// queue, ordered by (time, insertion sequence), so identical inputs always yield identical traces.
///
/// Compute activities occupy one core of the actor's node for work / core_speed seconds; when all cores are busy
/// they queue FIFO. Communications first pay the route latency and then share link bandwidth with every other
/// active flow under max-min fairness, re-solved whenever a flow starts or ends.
class Simulation {
public:
  /// The platform must outlive the simulation.
  explicit Simulation(const Platform& platform);
  ~Simulation();
  Simulation(const Simulation&)            = delete;
  Simulation& operator=(const Simulation&) = delete;

  const Platform& platform() const { return platform_; }
  SimTime now() const { return now_; }

  /// Registers a runnable actor that starts at the current time. Ids follow spawn order.
  Actor& spawn(std::string name, NodeId node, std::function<Task<>(Actor&)> body);
  const Actor& actor(ActorId id) const;
  std::size_t actor_count() const { return actors_.size(); }

  /// Processes events in (time, seq) order until exhaustion (or `until`). Returns the time of the last
  /// processed event. Throws DeadlockDetected when live actors remain blocked with nothing left to happen,
  /// and rethrows the first exception escaping an actor body.
  SimTime run(std::optional<SimTime> until = std::nullopt);

  // --- Activities, awaited from actor context -------------------------------------------------------------------

  /// Runs `work` units on one core of the caller's node. Returns the completion time.
  Task<SimTime> execute_compute(Actor& self, double work);
  /// Transfers `bytes` from the caller's node to `dst`. Returns the completion time.
  Task<SimTime> execute_comm(Actor& self, NodeId dst, double bytes);
  Task<SimTime> execute_comm(Actor& self, const Actor& dst, double bytes);
  Task<> sleep(Actor& self, double seconds);
  /// Blocks until `c` completes; returns its completion time.
  Task<SimTime> wait(Actor& self, Completion c);
  /// Blocks until `pred()` holds, re-checking every time `signal` is notified.
  Task<> wait_until(Actor& self, Signal& signal, std::function<bool()> pred, std::string reason);

  // --- Non-blocking building blocks ---------------------------------------------------------------------------------

  /// Starts a transfer without blocking anyone. Size 0 pays latency only.
  Completion start_comm(NodeId src, NodeId dst, double bytes, std::function<void(SimTime)> on_done = {});
  /// Same over an explicit link sequence; the latency is the sum of the links' latencies.
  Completion start_transfer(std::vector<LinkId> route, double bytes, std::function<void(SimTime)> on_done = {});
  Completion start_compute(NodeId node, double work);
  Completion make_completion(std::function<void(SimTime)> on_done = {});
  void complete(Completion& c);
  void notify(Signal& signal);

  /// Awaitable that parks `self` until someone calls wake(self).
  struct Park {
    Simulation& sim;
    Actor& self;
    std::string reason;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h) { sim.suspend(self, h, std::move(reason)); }
    void await_resume() const noexcept {}
  };
  Park park(Actor& self, std::string reason) { return Park{*this, self, std::move(reason)}; }
  /// Schedules the resumption of a parked actor at the current time.
  void wake(Actor& actor);

  void schedule(SimTime at, std::function<void()> action);

  // --- Tracing ---------------------------------------------------------------------------------------------------

  void set_tracing(bool enabled) { tracing_ = enabled; }
  bool tracing() const { return tracing_; }
  void trace(const Actor& actor, StageLabel label, std::string detail);
  /// Records an event dated `at` <= now (used for phases whose start is only known afterwards).
  void trace_at(SimTime at, const Actor& actor, StageLabel label, std::string detail);
  /// Trace sorted by (time, seq).
  std::vector<TraceEvent> trace_events() const;

  std::uint64_t events_processed() const { return events_processed_; }
  std::uint64_t flows_started() const { return flows_started_; }
  /// Bandwidth currently allocated on a link (for conservation checks).
  double link_load(LinkId link) const { return network_.load(link); }

private:
  struct Event {
    SimTime time;
    std::uint64_t seq;
    std::function<void()> action;
  };
  struct EventLater {
    bool operator()(const Event& a, const Event& b) const
    {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };
  struct CoreQueue {
    int free = 0;
    std::deque<std::pair<double, Completion>> pending;
  };
  struct FlowBinding {
    Completion completion;
  };

  void suspend(Actor& self, std::coroutine_handle<> h, std::string reason);
  void resume(Actor& actor);
  void begin_compute(NodeId node, double work, Completion c);
  void network_advance_to(SimTime t);
  void network_resolve();
  void on_network_event(std::uint64_t version);
  [[noreturn]] void report_deadlock() const;

  const Platform& platform_;
  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  std::vector<std::unique_ptr<Actor>> actors_;
  std::vector<CoreQueue> cores_;
  std::uint64_t next_completion_id_ = 0;

  FlowNetwork network_;
  SimTime network_time_ = 0;
  bool network_dirty_   = false;
  std::uint64_t network_version_ = 0;
  std::vector<std::optional<FlowBinding>> flow_bindings_; // indexed by FlowId
  std::uint64_t flows_started_ = 0;

  bool tracing_ = true;
  std::uint64_t trace_seq_ = 0;
  std::vector<TraceEvent> trace_;
  std::uint64_t events_processed_ = 0;
  std::exception_ptr failure_;
};

} // namespace insitu
