#include "insitu/engine.hpp"

#include "insitu/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace insitu {

namespace {
std::vector<double> link_capacities(const Platform& p)
{
  std::vector<double> caps;
  caps.reserve(p.link_count());
  for (const auto& l : p.links())
    caps.push_back(l.bandwidth);
  return caps;
}

std::string_view state_name(ActorState s)
{
  switch (s) {
    case ActorState::runnable:
      return "runnable";
    case ActorState::blocked:
      return "blocked";
    case ActorState::terminated:
      return "terminated";
  }
  return "?";
}
} // namespace

Simulation::Simulation(const Platform& platform) : platform_(platform), network_(link_capacities(platform))
{
  cores_.resize(platform.node_count());
  for (NodeId n = 0; n < platform.node_count(); ++n)
    cores_[n].free = platform.node(n).cores;
}

Simulation::~Simulation() = default;

Actor& Simulation::spawn(std::string name, NodeId node, std::function<Task<>(Actor&)> body)
{
  if (node >= platform_.node_count())
    throw UnknownNode(fmt::format("cannot spawn '{}' on unknown node id {}", name, node));
  ActorId id = actors_.size();
  actors_.push_back(std::unique_ptr<Actor>(new Actor(*this, id, node, std::move(name), std::move(body))));
  Actor& a        = *actors_.back();
  a.root_         = a.body_(a);
  a.resume_point_ = a.root_.handle();
  a.wake_pending_ = true;
  schedule(now_, [this, &a] { resume(a); });
  return a;
}

const Actor& Simulation::actor(ActorId id) const
{
  if (id >= actors_.size())
    throw std::out_of_range(fmt::format("no actor {}", id));
  return *actors_[id];
}

void Simulation::schedule(SimTime at, std::function<void()> action)
{
  if (at < now_)
    throw std::logic_error(fmt::format("cannot schedule an event in the past ({} < {})", at, now_));
  events_.push(Event{at, next_seq_++, std::move(action)});
}

void Simulation::suspend(Actor& self, std::coroutine_handle<> h, std::string reason)
{
  self.state_        = ActorState::blocked;
  self.resume_point_ = h;
  self.waiting_on_   = std::move(reason);
}

void Simulation::wake(Actor& actor)
{
  if (actor.wake_pending_ || actor.state_ == ActorState::terminated)
    return;
  actor.wake_pending_ = true;
  schedule(now_, [this, &actor] { resume(actor); });
}

void Simulation::resume(Actor& actor)
{
  actor.wake_pending_ = false;
  if (actor.state_ == ActorState::terminated || !actor.resume_point_)
    return;
  actor.state_ = ActorState::runnable;
  actor.waiting_on_.clear();
  auto h              = actor.resume_point_;
  actor.resume_point_ = {};
  h.resume();
  if (actor.root_.done()) {
    actor.state_ = ActorState::terminated;
    if (auto e = actor.root_.error(); e && !failure_)
      failure_ = e;
  }
}

SimTime Simulation::run(std::optional<SimTime> until)
{
  if (actors_.empty())
    throw std::logic_error("Simulation::run: no actor was spawned");

  SimTime last = now_;
  while (true) {
    if (network_dirty_ && (events_.empty() || events_.top().time > now_))
      network_resolve();
    if (events_.empty())
      break;
    if (until && events_.top().time > *until)
      return last;
    Event ev = std::move(const_cast<Event&>(events_.top()));
    events_.pop();
    now_ = ev.time;
    last = now_;
    ev.action();
    ++events_processed_;
    if (failure_)
      std::rethrow_exception(failure_);
  }

  if (std::any_of(actors_.begin(), actors_.end(),
                  [](const auto& a) { return a->state_ != ActorState::terminated; }))
    report_deadlock();
  return last;
}

void Simulation::report_deadlock() const
{
  std::string msg = fmt::format("deadlock at t={:.9f}:", now_);
  for (const auto& a : actors_) {
    if (a->state_ == ActorState::terminated)
      continue;
    msg += fmt::format(" [actor {} '{}' on {} {}: {}]", a->id_, a->name_, platform_.node(a->node_).name,
                       state_name(a->state_), a->waiting_on_.empty() ? "nothing" : a->waiting_on_);
  }
  throw DeadlockDetected(msg);
}

Completion Simulation::make_completion(std::function<void(SimTime)> on_done)
{
  auto s     = std::make_shared<Completion::State>();
  s->id      = next_completion_id_++;
  s->on_done = std::move(on_done);
  return Completion(std::move(s));
}

void Simulation::complete(Completion& c)
{
  auto& s = *c.state_;
  if (s.done)
    throw std::logic_error(fmt::format("completion #{} completed twice", s.id));
  s.done = true;
  s.time = now_;
  for (Actor* a : s.waiters)
    wake(*a);
  s.waiters.clear();
  if (s.on_done) {
    auto cb = std::move(s.on_done);
    cb(now_);
  }
}

void Simulation::notify(Signal& signal)
{
  auto waiters = std::move(signal.waiters_);
  signal.waiters_.clear();
  for (Actor* a : waiters)
    wake(*a);
}

Task<SimTime> Simulation::wait(Actor& self, Completion c)
{
  if (!c.done()) {
    c.state_->waiters.push_back(&self);
    co_await park(self, fmt::format("activity #{}", c.id()));
  }
  co_return c.time();
}

Task<> Simulation::wait_until(Actor& self, Signal& signal, std::function<bool()> pred, std::string reason)
{
  while (!pred()) {
    signal.waiters_.push_back(&self);
    co_await park(self, reason);
  }
}

Task<> Simulation::sleep(Actor& self, double seconds)
{
  if (!(seconds >= 0))
    throw std::invalid_argument("sleep: negative duration");
  Completion c = make_completion();
  schedule(now_ + seconds, [this, c]() mutable { complete(c); });
  co_await wait(self, c);
}

// --- compute -------------------------------------------------------------------------------------------------------

Completion Simulation::start_compute(NodeId node, double work)
{
  if (node >= platform_.node_count())
    throw UnknownNode(fmt::format("compute on unknown node id {}", node));
  if (!(work >= 0))
    throw std::invalid_argument("compute: work must be non-negative");
  Completion c = make_completion();
  if (work == 0) {
    complete(c);
    return c;
  }
  auto& q = cores_[node];
  if (q.free > 0) {
    --q.free;
    begin_compute(node, work, c);
  } else {
    q.pending.emplace_back(work, c);
  }
  return c;
}

void Simulation::begin_compute(NodeId node, double work, Completion c)
{
  SimTime end = now_ + work / platform_.node(node).core_speed;
  schedule(end, [this, node, c]() mutable {
    complete(c);
    auto& q = cores_[node];
    if (q.pending.empty()) {
      ++q.free;
    } else {
      auto [w, next] = std::move(q.pending.front());
      q.pending.pop_front();
      begin_compute(node, w, next);
    }
  });
}

Task<SimTime> Simulation::execute_compute(Actor& self, double work)
{
  if (!(work >= 0))
    throw std::invalid_argument("execute_compute: work must be non-negative");
  if (work == 0)
    co_return now_;
  Completion c = start_compute(self.node(), work);
  co_return co_await wait(self, c);
}

// --- communications --------------------------------------------------------------------------------------------------

Completion Simulation::start_comm(NodeId src, NodeId dst, double bytes, std::function<void(SimTime)> on_done)
{
  return start_transfer(platform_.route(src, dst), bytes, std::move(on_done));
}

Completion Simulation::start_transfer(std::vector<LinkId> route, double bytes, std::function<void(SimTime)> on_done)
{
  if (!(bytes >= 0))
    throw std::invalid_argument("comm: size must be non-negative");
  if (route.empty())
    throw std::invalid_argument("comm: empty route");
  double latency = 0;
  for (LinkId l : route) {
    if (l >= platform_.link_count())
      throw std::out_of_range(fmt::format("comm: unknown link {}", l));
    latency += platform_.link(l).latency;
  }

  Completion c = make_completion(std::move(on_done));
  schedule(now_ + latency, [this, route = std::move(route), bytes, c]() mutable {
    if (bytes == 0) {
      complete(c);
      return;
    }
    network_advance_to(now_);
    FlowId id = network_.add(std::move(route), bytes);
    if (flow_bindings_.size() <= id)
      flow_bindings_.resize(id + 1);
    flow_bindings_[id] = FlowBinding{c};
    network_dirty_     = true;
    ++flows_started_;
  });
  return c;
}

Task<SimTime> Simulation::execute_comm(Actor& self, NodeId dst, double bytes)
{
  if (!(bytes > 0))
    throw std::invalid_argument("execute_comm: size must be positive");
  Completion c = start_comm(self.node(), dst, bytes);
  co_return co_await wait(self, c);
}

Task<SimTime> Simulation::execute_comm(Actor& self, const Actor& dst, double bytes)
{
  return execute_comm(self, dst.node(), bytes);
}

void Simulation::network_advance_to(SimTime t)
{
  network_.advance(t - network_time_);
  network_time_ = t;
}

void Simulation::network_resolve()
{
  network_advance_to(now_);
  network_.solve();
  network_dirty_ = false;
  ++network_version_;
  if (auto dt = network_.time_to_next_completion())
    schedule(now_ + *dt, [this, v = network_version_] { on_network_event(v); });
}

void Simulation::on_network_event(std::uint64_t version)
{
  if (version != network_version_)
    return;
  network_advance_to(now_);
  // Completions closer than a few ulps of the clock cannot be scheduled separately from now.
  const double horizon = 4 * (std::nextafter(now_, std::numeric_limits<double>::infinity()) - now_);
  for (FlowId id : network_.take_finished(horizon)) {
    Completion c = std::move(flow_bindings_[id]->completion);
    flow_bindings_[id].reset();
    complete(c);
  }
  network_dirty_ = true;
}

// --- tracing ---------------------------------------------------------------------------------------------------------

void Simulation::trace(const Actor& actor, StageLabel label, std::string detail)
{
  trace_at(now_, actor, label, std::move(detail));
}

void Simulation::trace_at(SimTime at, const Actor& actor, StageLabel label, std::string detail)
{
  if (!tracing_)
    return;
  if (at > now_)
    throw std::logic_error("trace_at: cannot record an event in the future");
  trace_.push_back(TraceEvent{at, actor.id(), label, std::move(detail), trace_seq_++});
}

std::vector<TraceEvent> Simulation::trace_events() const
{
  std::vector<TraceEvent> sorted = trace_;
  std::stable_sort(sorted.begin(), sorted.end(), [](const TraceEvent& a, const TraceEvent& b) {
    return a.time != b.time ? a.time < b.time : a.seq < b.seq;
  });
  return sorted;
}

} // namespace insitu
