#include "fixtures.hpp"

namespace fixtures {

using namespace insitu;

Platform single_node(int cores)
{
  return Platform::build(Topology::flat, {NodeSpec{"solo", cores}}, {LinkSpec{"backbone", 1e9, 1e-5}});
}

Platform flat(int nodes, int cores)
{
  std::vector<NodeSpec> ns;
  for (int i = 0; i < nodes; ++i)
    ns.push_back(NodeSpec{"host-" + std::to_string(i), cores});
  return Platform::build(Topology::flat, ns, {LinkSpec{"backbone", 1e9, 1e-5}});
}

Platform cluster(int nodes, int cores)
{
  std::vector<NodeSpec> ns;
  for (int i = 0; i < nodes; ++i) {
    NodeSpec n{"node-" + std::to_string(i), cores};
    n.loopback_bandwidth = 1.25e11;
    n.loopback_latency   = 1e-7;
    ns.push_back(n);
  }
  return Platform::build(Topology::star, ns, {LinkSpec{"backbone", 5e10, 1e-6}}, "backbone",
                         LinkSpec{"", 1.25e9, 2e-6});
}

Platform three_links()
{
  return Platform::build(Topology::flat, {NodeSpec{"solo", 4}},
                         {LinkSpec{"L0", 1e9, 1e-6}, LinkSpec{"L1", 5e8, 2e-6}, LinkSpec{"L2", 2e9, 0}}, "L0");
}

Mapping even(const std::vector<NodeId>& nodes, int count)
{
  Mapping m;
  for (NodeId n : nodes)
    m.entries.emplace_back(n, count);
  return m;
}

std::string source_path(const std::string& relative)
{
  return std::string(INSITU_SOURCE_DIR) + "/" + relative;
}

} // namespace fixtures
