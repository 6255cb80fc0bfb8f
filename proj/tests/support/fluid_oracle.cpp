#include "fluid_oracle.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace oracle {

std::vector<long double> max_min_rates(const std::vector<double>& capacity,
                                       const std::vector<std::vector<std::size_t>>& routes)
{
  const std::size_t n = routes.size();
  std::vector<long double> rate(n, 0);
  std::vector<long double> residual(capacity.begin(), capacity.end());
  std::vector<bool> frozen(n, false);

  for (std::size_t round = 0; round <= n; ++round) {
    std::vector<std::size_t> users(capacity.size(), 0);
    for (std::size_t f = 0; f < n; ++f)
      if (!frozen[f])
        for (auto l : routes[f])
          ++users[l];

    long double step = std::numeric_limits<long double>::infinity();
    for (std::size_t l = 0; l < capacity.size(); ++l)
      if (users[l] > 0)
        step = std::min(step, residual[l] / users[l]);
    if (step == std::numeric_limits<long double>::infinity())
      break;

    for (std::size_t f = 0; f < n; ++f)
      if (!frozen[f]) {
        rate[f] += step;
        for (auto l : routes[f])
          residual[l] -= step;
      }
    for (std::size_t f = 0; f < n; ++f)
      for (auto l : routes[f])
        if (residual[l] <= 1e-12L * capacity[l])
          frozen[f] = true;
  }
  return rate;
}

std::vector<double> completion_times(const std::vector<double>& capacity, const std::vector<Flow>& flows)
{
  const std::size_t n = flows.size();
  std::vector<double> done(n, -1);
  std::vector<long double> left(n);
  std::vector<bool> active(n, false);
  std::size_t finished = 0;

  for (std::size_t f = 0; f < n; ++f) {
    left[f] = flows[f].size;
    if (flows[f].size == 0) {
      done[f] = flows[f].arrival + flows[f].latency;
      ++finished;
    }
  }

  long double now = 0;
  while (finished < n) {
    std::vector<std::size_t> ids;
    std::vector<std::vector<std::size_t>> routes;
    for (std::size_t f = 0; f < n; ++f)
      if (active[f]) {
        ids.push_back(f);
        routes.push_back(flows[f].links);
      }
    auto rate = max_min_rates(capacity, routes);

    long double next = std::numeric_limits<long double>::infinity();
    for (std::size_t f = 0; f < n; ++f)
      if (!active[f] && done[f] < 0)
        next = std::min(next, static_cast<long double>(flows[f].arrival) + flows[f].latency);
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (rate[i] > 0)
        next = std::min(next, now + left[ids[i]] / rate[i]);
    if (next == std::numeric_limits<long double>::infinity())
      throw std::logic_error("oracle: no progress possible");

    const long double dt = next - now;
    now                  = next;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      std::size_t f = ids[i];
      left[f] -= rate[i] * dt;
      if (left[f] <= 1e-12L * flows[f].size) {
        active[f] = false;
        done[f]   = static_cast<double>(now);
        ++finished;
      }
    }
    for (std::size_t f = 0; f < n; ++f)
      if (!active[f] && done[f] < 0 && static_cast<long double>(flows[f].arrival) + flows[f].latency <= now)
        active[f] = true;
  }
  return done;
}

} // namespace oracle
