#include "fixtures.hpp"

#include "insitu/errors.hpp"
#include "insitu/workflow.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace insitu;

TEST(Mapping, ParsesHostfile)
{
  Platform p = fixtures::flat(3);
  Mapping m  = parse_mapping("# ranks\nhost-0 4\n\nhost-2 2   # tail\n", p, 6);
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.total(), 6);
  EXPECT_EQ(m.expand(), (std::vector<NodeId>{0, 0, 0, 0, 2, 2}));
  EXPECT_EQ(m.nodes(), (std::vector<NodeId>{0, 2}));
  EXPECT_EQ(parse_mapping(format_mapping(m, p), p, 6).entries, m.entries);
}

TEST(Mapping, HostfileErrors)
{
  Platform p = fixtures::flat(2);
  EXPECT_THROW(parse_mapping("host-0\n", p, 1), ParseError);
  EXPECT_THROW(parse_mapping("host-0 two\n", p, 2), ParseError);
  EXPECT_THROW(parse_mapping("host-0 1 extra\n", p, 1), ParseError);
  EXPECT_THROW(parse_mapping("host-9 1\n", p, 1), UnknownNode);
  EXPECT_THROW(parse_mapping("host-0 3\n", p, 4), CountMismatch);
  EXPECT_THROW(load_mapping("/nonexistent/hosts", p, 1), ParseError);
}

TEST(Mapping, CoreCapacity)
{
  Platform p = fixtures::flat(2, 4);
  Mapping a  = fixtures::even({0}, 3);
  Mapping b  = fixtures::even({0}, 1);
  EXPECT_NO_THROW(check_core_capacity(p, {&a, &b}));
  Mapping c = fixtures::even({0}, 2);
  EXPECT_THROW(check_core_capacity(p, {&a, &c}), ValidationError);
}

TEST(Ratios, ThirtyTwoCoresGivesFiveSplits)
{
  auto r = generate_ratio_allocations(32);
  std::vector<AllocationRatio> expected{{1, 16, 16}, {3, 24, 8}, {7, 28, 4}, {15, 30, 2}, {31, 31, 1}};
  EXPECT_EQ(r, expected);
  for (const auto& a : r)
    EXPECT_EQ(a.sim_cores_per_node + a.ana_cores_per_node, 32);
}

TEST(Ratios, RejectsNonPowersOfTwo)
{
  EXPECT_THROW(generate_ratio_allocations(24), InvalidCoreCount);
  EXPECT_THROW(generate_ratio_allocations(1), InvalidCoreCount);
  EXPECT_THROW(generate_ratio_allocations(0), InvalidCoreCount);
  EXPECT_EQ(generate_ratio_allocations(2).size(), 1u);
}

TEST(Particles, NearEqualPartition)
{
  long total = 0;
  for (long i = 0; i < 7; ++i) {
    long k = assign_particles(100, 7, i);
    EXPECT_EQ(k, i < 2 ? 15 : 14);
    total += k;
  }
  EXPECT_EQ(total, 100);
  EXPECT_THROW(assign_particles(10, 0, 0), std::invalid_argument);
  EXPECT_THROW(assign_particles(10, 2, 2), std::out_of_range);
}

TEST(RankGrid, MostCubicFactorization)
{
  EXPECT_EQ(rank_grid(1), (std::array<int, 3>{1, 1, 1}));
  EXPECT_EQ(rank_grid(8), (std::array<int, 3>{2, 2, 2}));
  EXPECT_EQ(rank_grid(12), (std::array<int, 3>{3, 2, 2}));
  EXPECT_EQ(rank_grid(7), (std::array<int, 3>{7, 1, 1}));
  for (int n = 1; n <= 300; ++n) {
    auto g = rank_grid(n);
    EXPECT_EQ(g[0] * g[1] * g[2], n);
    EXPECT_GE(g[0], g[1]);
    EXPECT_GE(g[1], g[2]);
  }
}

TEST(RankGrid, PeriodicNeighbors)
{
  auto n = halo_neighbors({2, 2, 2}, 0);
  EXPECT_EQ(n, (std::vector<int>{1, 1, 2, 2, 4, 4}));
  auto m = halo_neighbors({3, 1, 1}, 1);
  EXPECT_EQ(m, (std::vector<int>{0, 2}));
  EXPECT_TRUE(halo_neighbors({1, 1, 1}, 0).empty());

  // The relation is symmetric.
  std::array<int, 3> g{4, 3, 2};
  for (int r = 0; r < 24; ++r)
    for (int q : halo_neighbors(g, r)) {
      auto back = halo_neighbors(g, q);
      EXPECT_NE(std::find(back.begin(), back.end(), r), back.end());
    }
}
