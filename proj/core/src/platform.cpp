#include "insitu/platform.hpp"

#include "insitu/errors.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace insitu {

namespace {

void check_link(const LinkSpec& l)
{
  if (l.name.empty())
    throw ValidationError("link without a name");
  if (!(l.bandwidth > 0) || !std::isfinite(l.bandwidth))
    throw ValidationError(fmt::format("link '{}': bandwidth must be positive", l.name));
  if (!(l.latency >= 0) || !std::isfinite(l.latency))
    throw ValidationError(fmt::format("link '{}': latency must be non-negative", l.name));
}

std::pair<double, std::string_view> split_number(std::string_view text, std::string_view what)
{
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc())
    throw ParseError(fmt::format("invalid {} '{}'", what, text));
  std::string_view unit(ptr, static_cast<std::size_t>(text.data() + text.size() - ptr));
  while (!unit.empty() && std::isspace(static_cast<unsigned char>(unit.front())))
    unit.remove_prefix(1);
  return {value, unit};
}

} // namespace

double parse_bandwidth(std::string_view text)
{
  auto [value, unit] = split_number(text, "bandwidth");
  if (unit.empty() || unit == "Bps")
    return value;

  // [k|M|G|T][i](B|b)ps
  double scale = 1;
  std::size_t pos = 0;
  const double base = (unit.size() > 1 && unit[1] == 'i') ? 1024.0 : 1000.0;
  switch (unit[0]) {
    case 'k':
    case 'K':
      scale = base;
      pos   = 1;
      break;
    case 'M':
      scale = base * base;
      pos   = 1;
      break;
    case 'G':
      scale = base * base * base;
      pos   = 1;
      break;
    case 'T':
      scale = base * base * base * base;
      pos   = 1;
      break;
    default:
      break;
  }
  if (pos == 1 && base == 1024.0)
    pos = 2;
  std::string_view rest = unit.substr(pos);
  if (rest == "Bps")
    return value * scale;
  if (rest == "bps")
    return value * scale / 8.0;
  throw ParseError(fmt::format("unknown bandwidth unit '{}'", unit));
}

double parse_duration(std::string_view text)
{
  auto [value, unit] = split_number(text, "duration");
  if (unit.empty() || unit == "s")
    return value;
  if (unit == "ms")
    return value * 1e-3;
  if (unit == "us")
    return value * 1e-6;
  if (unit == "ns")
    return value * 1e-9;
  throw ParseError(fmt::format("unknown time unit '{}'", unit));
}

Platform Platform::build(Topology topology, std::vector<NodeSpec> nodes, std::vector<LinkSpec> links,
                         std::string backbone, std::optional<LinkSpec> node_link)
{
  if (nodes.empty())
    throw ValidationError("platform must contain at least one node");

  std::set<std::string, std::less<>> names;
  for (const auto& n : nodes) {
    if (n.name.empty())
      throw ValidationError("node without a name");
    if (!names.insert(n.name).second)
      throw ValidationError(fmt::format("duplicate node name '{}'", n.name));
    if (n.cores < 1)
      throw ValidationError(fmt::format("node '{}': cores must be >= 1", n.name));
    if (!(n.core_speed > 0) || !std::isfinite(n.core_speed))
      throw ValidationError(fmt::format("node '{}': core_speed must be positive", n.name));
    if (!(n.loopback_bandwidth > 0))
      throw ValidationError(fmt::format("node '{}': loopback_bandwidth must be positive", n.name));
    if (!(n.loopback_latency >= 0))
      throw ValidationError(fmt::format("node '{}': loopback_latency must be non-negative", n.name));
  }

  if (topology == Topology::star) {
    for (auto& n : nodes) {
      if (!n.link.empty())
        continue;
      if (nodes.size() == 1)
        break;
      if (!node_link)
        throw ValidationError(fmt::format("star topology: node '{}' has no access link and no node_link template", n.name));
      LinkSpec generated = *node_link;
      generated.name     = n.name + "_link";
      n.link             = generated.name;
      links.push_back(generated);
    }
  }

  Platform p;
  p.topology_ = topology;
  std::set<std::string, std::less<>> link_names;
  for (const auto& l : links) {
    check_link(l);
    if (!link_names.insert(l.name).second)
      throw ValidationError(fmt::format("duplicate link name '{}'", l.name));
    p.links_.push_back(LinkInfo{l.name, l.bandwidth, l.latency, std::nullopt});
  }

  auto find_link = [&p](std::string_view name) -> std::optional<LinkId> {
    for (LinkId i = 0; i < p.links_.size(); ++i)
      if (p.links_[i].name == name)
        return i;
    return std::nullopt;
  };

  if (nodes.size() > 1) {
    p.backbone_ = find_link(backbone);
    if (!p.backbone_)
      throw ValidationError(fmt::format("route references missing backbone link '{}'", backbone));
    if (topology == Topology::star) {
      for (const auto& n : nodes) {
        auto id = find_link(n.link);
        if (!id)
          throw ValidationError(fmt::format("node '{}' references missing link '{}'", n.name, n.link));
        if (*id == *p.backbone_)
          throw ValidationError(fmt::format("node '{}' uses the backbone as its access link", n.name));
        p.access_links_.push_back(*id);
      }
    }
  }

  p.first_loopback_ = p.links_.size();
  for (NodeId i = 0; i < nodes.size(); ++i)
    p.links_.push_back(LinkInfo{"loopback(" + nodes[i].name + ")", nodes[i].loopback_bandwidth,
                                nodes[i].loopback_latency, i});
  p.nodes_ = std::move(nodes);
  return p;
}

const NodeSpec& Platform::node(NodeId id) const
{
  if (id >= nodes_.size())
    throw UnknownNode(fmt::format("unknown node id {}", id));
  return nodes_[id];
}

std::optional<NodeId> Platform::find_node(std::string_view name) const
{
  for (NodeId i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].name == name)
      return i;
  return std::nullopt;
}

NodeId Platform::node_id(std::string_view name) const
{
  if (auto id = find_node(name))
    return *id;
  throw UnknownNode(fmt::format("unknown node '{}'", name));
}

LinkId Platform::loopback(NodeId node) const
{
  if (node >= nodes_.size())
    throw UnknownNode(fmt::format("unknown node id {}", node));
  return first_loopback_ + node;
}

std::vector<LinkId> Platform::route(NodeId src, NodeId dst) const
{
  if (src >= nodes_.size() || dst >= nodes_.size())
    throw UnknownNode(fmt::format("route({}, {}): unknown node", src, dst));
  if (src == dst)
    return {loopback(src)};
  if (topology_ == Topology::flat)
    return {*backbone_};
  return {access_links_[src], *backbone_, access_links_[dst]};
}

double Platform::route_latency(NodeId src, NodeId dst) const
{
  double lat = 0;
  for (LinkId l : route(src, dst))
    lat += links_[l].latency;
  return lat;
}

long Platform::total_cores() const
{
  long total = 0;
  for (const auto& n : nodes_)
    total += n.cores;
  return total;
}

namespace {

double read_bandwidth(const YAML::Node& n)
{
  return parse_bandwidth(n.as<std::string>());
}

double read_duration(const YAML::Node& n)
{
  return parse_duration(n.as<std::string>());
}

LinkSpec read_link(const YAML::Node& n)
{
  if (!n.IsMap())
    throw ParseError("link entry must be a mapping");
  LinkSpec l;
  if (n["name"])
    l.name = n["name"].as<std::string>();
  if (!n["bandwidth"])
    throw ParseError(fmt::format("link '{}' has no bandwidth", l.name));
  l.bandwidth = read_bandwidth(n["bandwidth"]);
  if (n["latency"])
    l.latency = read_duration(n["latency"]);
  return l;
}

} // namespace

Platform parse_platform(std::string_view text)
{
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ParseError(fmt::format("platform: {}", e.what()));
  }
  if (!root.IsMap())
    throw ParseError("platform: top level must be a mapping");

  try {
    Topology topology = Topology::star;
    if (root["topology"]) {
      auto t = root["topology"].as<std::string>();
      if (t == "flat")
        topology = Topology::flat;
      else if (t == "star")
        topology = Topology::star;
      else
        throw ParseError(fmt::format("platform: unknown topology '{}'", t));
    }

    std::vector<LinkSpec> links;
    if (auto ls = root["links"]) {
      if (!ls.IsSequence())
        throw ParseError("platform: 'links' must be a list");
      for (const auto& l : ls)
        links.push_back(read_link(l));
    }

    std::optional<LinkSpec> node_link;
    if (auto nl = root["node_link"])
      node_link = read_link(nl);

    std::vector<NodeSpec> nodes;
    auto ns = root["nodes"];
    if (!ns || !ns.IsSequence())
      throw ParseError("platform: 'nodes' list is required");
    for (const auto& n : ns) {
      if (!n.IsMap())
        throw ParseError("platform: node entry must be a mapping");
      NodeSpec proto;
      if (n["cores"])
        proto.cores = n["cores"].as<int>();
      if (n["core_speed"])
        proto.core_speed = n["core_speed"].as<double>();
      if (n["loopback_bandwidth"])
        proto.loopback_bandwidth = read_bandwidth(n["loopback_bandwidth"]);
      if (n["loopback_latency"])
        proto.loopback_latency = read_duration(n["loopback_latency"]);
      if (n["link"])
        proto.link = n["link"].as<std::string>();

      if (n["count"]) {
        // Homogeneous group: <prefix>0 .. <prefix>{count-1}
        int count = n["count"].as<int>();
        if (count < 1)
          throw ValidationError("platform: node group count must be >= 1");
        if (!proto.link.empty())
          throw ParseError("platform: a node group cannot share one explicit access link");
        std::string prefix = n["prefix"] ? n["prefix"].as<std::string>() : std::string("node-");
        for (int i = 0; i < count; ++i) {
          NodeSpec s = proto;
          s.name     = prefix + std::to_string(i);
          nodes.push_back(std::move(s));
        }
      } else {
        if (!n["name"])
          throw ParseError("platform: node entry needs 'name' (or 'prefix' + 'count')");
        proto.name = n["name"].as<std::string>();
        nodes.push_back(std::move(proto));
      }
    }

    std::string backbone = root["backbone"] ? root["backbone"].as<std::string>() : std::string("backbone");
    return Platform::build(topology, std::move(nodes), std::move(links), std::move(backbone), node_link);
  } catch (const YAML::Exception& e) {
    throw ParseError(fmt::format("platform: {}", e.what()));
  }
}

Platform load_platform(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw ParseError(fmt::format("cannot open platform file '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_platform(buffer.str());
}

} // namespace insitu
