#include "insitu/errors.hpp"
#include "insitu/workflow.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

namespace insitu {

long Mapping::total() const
{
  long t = 0;
  for (const auto& [_, slots] : entries)
    t += slots;
  return t;
}

std::vector<NodeId> Mapping::expand() const
{
  std::vector<NodeId> out;
  out.reserve(static_cast<std::size_t>(total()));
  for (const auto& [node, slots] : entries)
    out.insert(out.end(), static_cast<std::size_t>(slots), node);
  return out;
}

std::vector<NodeId> Mapping::nodes() const
{
  std::vector<NodeId> out;
  for (const auto& [node, slots] : entries)
    if (slots > 0 && std::find(out.begin(), out.end(), node) == out.end())
      out.push_back(node);
  return out;
}

Mapping parse_mapping(std::string_view text, const Platform& platform, long expected)
{
  Mapping m;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::istringstream fields(line);
    std::string node;
    std::string count_text;
    if (!(fields >> node))
      continue;
    if (!(fields >> count_text))
      throw ParseError(fmt::format("mapping line {}: expected '<node> <count>'", lineno));
    std::string extra;
    if (fields >> extra)
      throw ParseError(fmt::format("mapping line {}: trailing text '{}'", lineno, extra));
    int count = 0;
    auto [ptr, ec] = std::from_chars(count_text.data(), count_text.data() + count_text.size(), count);
    if (ec != std::errc() || ptr != count_text.data() + count_text.size() || count < 0)
      throw ParseError(fmt::format("mapping line {}: invalid count '{}'", lineno, count_text));
    m.entries.emplace_back(platform.node_id(node), count);
  }
  if (m.total() != expected)
    throw CountMismatch(fmt::format("mapping places {} entities, expected {}", m.total(), expected));
  return m;
}

Mapping load_mapping(const std::filesystem::path& path, const Platform& platform, long expected)
{
  std::ifstream in(path);
  if (!in)
    throw ParseError(fmt::format("cannot open mapping file '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_mapping(buffer.str(), platform, expected);
}

std::string format_mapping(const Mapping& m, const Platform& platform)
{
  std::string out;
  for (const auto& [node, slots] : m.entries)
    out += fmt::format("{} {}\n", platform.node(node).name, slots);
  return out;
}

void check_core_capacity(const Platform& platform, const std::vector<const Mapping*>& mappings)
{
  std::vector<long> used(platform.node_count(), 0);
  for (const Mapping* m : mappings)
    for (const auto& [node, slots] : m->entries)
      used.at(node) += slots;
  for (NodeId n = 0; n < used.size(); ++n)
    if (used[n] > platform.node(n).cores)
      throw ValidationError(fmt::format("node '{}' hosts {} entities but has {} cores", platform.node(n).name,
                                        used[n], platform.node(n).cores));
}

std::vector<AllocationRatio> generate_ratio_allocations(int cores_per_node)
{
  if (cores_per_node < 2 || (cores_per_node & (cores_per_node - 1)) != 0)
    throw InvalidCoreCount(fmt::format("cores per node must be a power of two >= 2, got {}", cores_per_node));
  std::vector<AllocationRatio> out;
  for (int ana = cores_per_node / 2; ana >= 1; ana /= 2) {
    int sim = cores_per_node - ana;
    out.push_back(AllocationRatio{sim / ana, sim, ana});
  }
  return out;
}

long assign_particles(long n_particles, long n_actors, long index)
{
  if (n_actors < 1)
    throw std::invalid_argument("assign_particles: need at least one actor");
  if (index < 0 || index >= n_actors)
    throw std::out_of_range(fmt::format("assign_particles: index {} out of [0, {})", index, n_actors));
  long share = n_particles / n_actors;
  return share + (index < n_particles % n_actors ? 1 : 0);
}

std::array<int, 3> rank_grid(int n_ranks)
{
  if (n_ranks < 1)
    throw std::invalid_argument("rank_grid: need at least one rank");
  std::array<int, 3> best{n_ranks, 1, 1};
  long best_surface = std::numeric_limits<long>::max();
  for (int c = 1; static_cast<long>(c) * c * c <= n_ranks; ++c) {
    if (n_ranks % c != 0)
      continue;
    int rest = n_ranks / c;
    for (int b = c; static_cast<long>(b) * b <= rest; ++b) {
      if (rest % b != 0)
        continue;
      int a        = rest / b;
      long surface = static_cast<long>(a) * b + static_cast<long>(b) * c + static_cast<long>(a) * c;
      if (surface < best_surface) {
        best_surface = surface;
        best         = {a, b, c};
      }
    }
  }
  return best;
}

std::vector<int> halo_neighbors(const std::array<int, 3>& grid, int rank)
{
  const int gx = grid[0], gy = grid[1], gz = grid[2];
  const int x = rank % gx, y = (rank / gx) % gy, z = rank / (gx * gy);
  auto id     = [&](int i, int j, int k) { return ((k + gz) % gz * gy + (j + gy) % gy) * gx + (i + gx) % gx; };
  std::vector<int> out;
  for (int n : {id(x - 1, y, z), id(x + 1, y, z), id(x, y - 1, z), id(x, y + 1, z), id(x, y, z - 1), id(x, y, z + 1)})
    if (n != rank)
      out.push_back(n);
  return out;
}

} // namespace insitu
