#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace insitu {

using NodeId = std::size_t;
using LinkId = std::size_t;

/// Memory-copy pseudo-link defaults: orders of magnitude faster than the interconnect.
inline constexpr double kDefaultLoopbackBandwidth = 16.0 * 1024 * 1024 * 1024; // bytes/s
inline constexpr double kDefaultLoopbackLatency   = 1e-7;                      // s

enum class Topology { flat, star };

struct NodeSpec {
  std::string name;
  int cores                 = 1;
  double core_speed         = 1.0; // multiplier of a reference core
  double loopback_bandwidth = kDefaultLoopbackBandwidth;
  double loopback_latency   = kDefaultLoopbackLatency;
  /// Access link used by the star topology. Empty means "generated from the node_link template".
  std::string link;
};

struct LinkSpec {
  std::string name;
  double bandwidth = 0; // bytes/s
  double latency   = 0; // s
};

/// A link as seen by the network model. Loopback pseudo-links are appended after the declared links.
struct LinkInfo {
  std::string name;
  double bandwidth = 0;
  double latency   = 0;
  std::optional<NodeId> loopback_of;

  bool is_loopback() const { return loopback_of.has_value(); }
};

/// The simulated cluster. Immutable once built, so it can be shared read-only between simulation instances.
class Platform {
public:
  /// Validates everything and throws ValidationError on the first problem found.
  /// For the star topology, nodes without an explicit `link` get a dedicated access link built from `node_link`.
  static Platform build(Topology topology, std::vector<NodeSpec> nodes, std::vector<LinkSpec> links,
                        std::string backbone = "backbone", std::optional<LinkSpec> node_link = std::nullopt);

  Topology topology() const { return topology_; }
  std::size_t node_count() const { return nodes_.size(); }
  const NodeSpec& node(NodeId id) const;
  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  NodeId node_id(std::string_view name) const; // throws UnknownNode
  std::optional<NodeId> find_node(std::string_view name) const;

  /// Declared links followed by one loopback pseudo-link per node.
  std::size_t link_count() const { return links_.size(); }
  const LinkInfo& link(LinkId id) const { return links_.at(id); }
  const std::vector<LinkInfo>& links() const { return links_; }
  LinkId loopback(NodeId node) const;

  /// Same node: the node's loopback. Otherwise the topology's link sequence (symmetric).
  std::vector<LinkId> route(NodeId src, NodeId dst) const;
  /// Sum of the latencies along route(src, dst).
  double route_latency(NodeId src, NodeId dst) const;

  long total_cores() const;

private:
  Platform() = default;

  Topology topology_ = Topology::flat;
  std::vector<NodeSpec> nodes_;
  std::vector<LinkInfo> links_;
  std::optional<LinkId> backbone_;
  std::vector<LinkId> access_links_; // star only, indexed by node
  std::size_t first_loopback_ = 0;
};

/// Parses a rate such as "10Gbps", "1.25e9", "125MBps" or "16GiBps" into bytes/second.
double parse_bandwidth(std::string_view text);
/// Parses a duration such as "1e-4", "100us" or "5ms" into seconds.
double parse_duration(std::string_view text);

/// Parses the YAML platform description (see README for the schema). Throws ParseError / ValidationError.
Platform parse_platform(std::string_view text);
Platform load_platform(const std::filesystem::path& path);

} // namespace insitu
