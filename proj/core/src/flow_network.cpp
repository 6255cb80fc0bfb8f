#include "insitu/flow_network.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace insitu {

namespace {
// A flow is done once what is left is negligible with respect to what it had to send.
constexpr double kRelativeDoneTolerance = 1e-11;
} // namespace

FlowNetwork::FlowNetwork(std::vector<double> capacities) : capacity_(std::move(capacities))
{
  for (double c : capacity_)
    if (!(c > 0))
      throw std::invalid_argument("FlowNetwork: link capacities must be positive");
  cap_left_.resize(capacity_.size());
  unfixed_on_link_.resize(capacity_.size());
  flows_on_link_.resize(capacity_.size());
}

FlowId FlowNetwork::add(std::vector<LinkId> route, double bytes)
{
  if (route.empty())
    throw std::invalid_argument("FlowNetwork::add: empty route");
  if (!(bytes > 0))
    throw std::invalid_argument("FlowNetwork::add: flow size must be positive");
  for (LinkId l : route)
    if (l >= capacity_.size())
      throw std::out_of_range(fmt::format("FlowNetwork::add: unknown link {}", l));
  FlowId id = flows_.size();
  flows_.push_back(Flow{std::move(route), bytes, bytes, 0.0, true});
  active_.push_back(id);
  return id;
}

FlowNetwork::Flow& FlowNetwork::flow(FlowId id)
{
  if (id >= flows_.size() || !flows_[id].live)
    throw std::out_of_range(fmt::format("FlowNetwork: no live flow {}", id));
  return flows_[id];
}

const FlowNetwork::Flow& FlowNetwork::flow(FlowId id) const
{
  if (id >= flows_.size() || !flows_[id].live)
    throw std::out_of_range(fmt::format("FlowNetwork: no live flow {}", id));
  return flows_[id];
}

bool FlowNetwork::contains(FlowId id) const
{
  return id < flows_.size() && flows_[id].live;
}

void FlowNetwork::remove(FlowId id)
{
  Flow& f = flow(id);
  f.live  = false;
  f.route.clear();
  f.route.shrink_to_fit();
  active_.erase(std::lower_bound(active_.begin(), active_.end(), id));
}

void FlowNetwork::solve()
{
  std::copy(capacity_.begin(), capacity_.end(), cap_left_.begin());
  std::fill(unfixed_on_link_.begin(), unfixed_on_link_.end(), 0);
  for (auto& v : flows_on_link_)
    v.clear();

  for (FlowId id : active_) {
    Flow& f = flows_[id];
    f.rate  = -1; // marks "not fixed yet"
    for (LinkId l : f.route) {
      ++unfixed_on_link_[l];
      flows_on_link_[l].push_back(id);
    }
  }

  std::size_t left = active_.size();
  while (left > 0) {
    LinkId bottleneck = capacity_.size();
    double share      = std::numeric_limits<double>::infinity();
    for (LinkId l = 0; l < capacity_.size(); ++l) {
      if (unfixed_on_link_[l] == 0)
        continue;
      double s = std::max(cap_left_[l], 0.0) / unfixed_on_link_[l];
      if (s < share) {
        share      = s;
        bottleneck = l;
      }
    }
    for (FlowId id : flows_on_link_[bottleneck]) {
      Flow& f = flows_[id];
      if (f.rate >= 0)
        continue;
      f.rate = share;
      --left;
      for (LinkId l : f.route) {
        cap_left_[l] -= share;
        --unfixed_on_link_[l];
      }
    }
  }
}

void FlowNetwork::advance(double dt)
{
  if (dt <= 0)
    return;
  for (FlowId id : active_) {
    Flow& f     = flows_[id];
    f.remaining = std::max(0.0, f.remaining - f.rate * dt);
  }
}

bool FlowNetwork::finished(const Flow& f, double horizon) const
{
  return f.remaining <= f.size * kRelativeDoneTolerance || f.remaining <= f.rate * horizon;
}

std::optional<double> FlowNetwork::time_to_next_completion() const
{
  std::optional<double> best;
  for (FlowId id : active_) {
    const Flow& f = flows_[id];
    double dt;
    if (finished(f))
      dt = 0;
    else if (f.rate > 0)
      dt = f.remaining / f.rate;
    else
      continue;
    if (!best || dt < *best)
      best = dt;
  }
  return best;
}

std::vector<FlowId> FlowNetwork::take_finished(double horizon)
{
  std::vector<FlowId> done;
  for (FlowId id : active_)
    if (finished(flows_[id], horizon))
      done.push_back(id);
  for (FlowId id : done) {
    Flow& f = flows_[id];
    f.live  = false;
    f.route.clear();
    f.route.shrink_to_fit();
  }
  if (!done.empty())
    std::erase_if(active_, [this](FlowId id) { return !flows_[id].live; });
  return done;
}

double FlowNetwork::rate(FlowId id) const
{
  return flow(id).rate;
}

double FlowNetwork::remaining(FlowId id) const
{
  return flow(id).remaining;
}

double FlowNetwork::load(LinkId link) const
{
  double total = 0;
  for (FlowId id : active_) {
    const Flow& f = flows_[id];
    for (LinkId l : f.route)
      if (l == link)
        total += f.rate;
  }
  return total;
}

} // namespace insitu
