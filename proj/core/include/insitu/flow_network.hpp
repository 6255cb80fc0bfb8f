#pragma once

#include "insitu/platform.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace insitu {

using FlowId = std::uint64_t;

/// Fluid model of the network: a set of flows crossing capacitated links, sharing bandwidth
/// with max-min fairness (progressive filling). The owner drives time explicitly through advance().
class FlowNetwork {
public:
  explicit FlowNetwork(std::vector<double> capacities);

  /// Adds a flow with `bytes` left to transfer. Rates are stale until the next solve().
  FlowId add(std::vector<LinkId> route, double bytes);
  void remove(FlowId id);

  /// Progressive filling: repeatedly saturate the link offering the smallest fair share,
  /// freezing the flows that cross it. Ties go to the lowest link id.
  void solve();

  /// Drains `rate * dt` bytes from every flow.
  void advance(double dt);

  /// Time until the first flow finishes at the current rates, if any flow is progressing.
  std::optional<double> time_to_next_completion() const;

  /// Removes and returns (in id order) flows with nothing left to send, or that would finish within `horizon`
  /// seconds at their current rate.
  std::vector<FlowId> take_finished(double horizon = 0);

  bool empty() const { return active_.empty(); }
  std::size_t size() const { return active_.size(); }
  bool contains(FlowId id) const;
  double rate(FlowId id) const;
  double remaining(FlowId id) const;
  /// Sum of current rates over the flows crossing `link`.
  double load(LinkId link) const;
  double capacity(LinkId link) const { return capacity_.at(link); }
  const std::vector<FlowId>& active() const { return active_; }

private:
  struct Flow {
    std::vector<LinkId> route;
    double size      = 0;
    double remaining = 0;
    double rate      = 0;
    bool live        = false;
  };

  Flow& flow(FlowId id);
  const Flow& flow(FlowId id) const;
  bool finished(const Flow& f, double horizon = 0) const;

  std::vector<double> capacity_;
  std::vector<Flow> flows_;     // indexed by FlowId
  std::vector<FlowId> active_;  // ascending ids

  // scratch space reused by solve()
  std::vector<double> cap_left_;
  std::vector<int> unfixed_on_link_;
  std::vector<std::vector<FlowId>> flows_on_link_;
};

} // namespace insitu
