// Mask indexing, neighbor construction and component labeling against
// hand-enumerated small grids plus a brute-force adjacency oracle.

#include <gtest/gtest.h>

#include <cstdint>
#include <set>
#include <vector>

#include "bless/lattice.hpp"
#include "bless/rng.hpp"

using namespace bless;

namespace {

// brute-force neighbor list: compare coordinates of every in-mask pair
std::set<std::pair<std::int64_t, std::int64_t>> brute_edges(const LatticeMask& m) {
  const int nd = static_cast<int>(m.dims.size());
  auto coords = [&](std::int64_t full) {
    std::vector<std::int64_t> c(nd);
    for (int a = 0; a < nd; ++a) {
      c[a] = full % m.dims[a];
      full /= m.dims[a];
    }
    return c;
  };
  std::set<std::pair<std::int64_t, std::int64_t>> edges;
  for (std::int64_t j = 0; j < m.n_voxels; ++j) {
    for (std::int64_t k = 0; k < m.n_voxels; ++k) {
      if (j == k) continue;
      const auto a = coords(m.full_of[j]), b = coords(m.full_of[k]);
      int diff = 0;
      for (int d = 0; d < nd; ++d) diff += static_cast<int>(std::abs(a[d] - b[d]));
      if (diff == 1) edges.insert({j, k});
    }
  }
  return edges;
}

}  // namespace

TEST(Lattice, MaskIndexingRoundTrip) {
  // 3x2 grid, first axis fastest; drop full index 2 (coords x=2,y=0)
  LatticeMask m = make_mask({3, 2}, {1, 1, 0, 1, 1, 1});
  EXPECT_EQ(m.n_voxels, 5);
  EXPECT_EQ(m.lattice_size(), 6);
  const std::int64_t want_full[] = {0, 1, 3, 4, 5};
  for (int j = 0; j < 5; ++j) {
    EXPECT_EQ(m.full_of[j], want_full[j]);
    EXPECT_EQ(m.dense_of[want_full[j]], j);
  }
  EXPECT_EQ(m.dense_of[2], -1);

  EXPECT_THROW(make_mask({3}, {1, 1, 1}), config_error);
  EXPECT_THROW(make_mask({2, 0}, {}), config_error);
  EXPECT_THROW(make_mask({2, 2}, {1, 1, 1}), config_error);
}

TEST(Lattice, FullMaskCoversLattice) {
  LatticeMask m = full_mask({4, 3, 2});
  EXPECT_EQ(m.n_voxels, 24);
  for (std::int64_t i = 0; i < 24; ++i) {
    EXPECT_EQ(m.dense_of[i], i);
    EXPECT_EQ(m.full_of[i], i);
  }
}

TEST(Lattice, GraphMatchesHandEnumeration) {
  // full 3x3: dense index = x + 3y
  LatticeMask m = full_mask({3, 3});
  NeighborGraph g = build_graph(m);
  EXPECT_EQ(g.n_voxels(), 9);
  const std::vector<std::vector<std::int32_t>> want = {
      {1, 3}, {0, 2, 4}, {1, 5}, {0, 4, 6}, {1, 3, 5, 7}, {2, 4, 8}, {3, 7}, {4, 6, 8}, {5, 7}};
  for (int j = 0; j < 9; ++j) {
    std::vector<std::int32_t> row(g.neighbors.begin() + g.offsets[j],
                                  g.neighbors.begin() + g.offsets[j + 1]);
    EXPECT_EQ(row, want[j]) << j;
    EXPECT_EQ(g.degree(j), static_cast<int>(want[j].size()));
  }
  EXPECT_EQ(g.n_components, 1);
  // parity two-coloring: adjacent voxels never share a color
  for (int j = 0; j < 9; ++j)
    for (std::int32_t e = g.offsets[j]; e < g.offsets[j + 1]; ++e)
      EXPECT_NE(g.color[j], g.color[g.neighbors[e]]);
  EXPECT_EQ(g.color[0], 0);  // origin is even parity
}

TEST(Lattice, GraphMatchesBruteForceOnRandomMasks) {
  RngStream rs(123, StreamKind::Generic);
  for (int trial = 0; trial < 8; ++trial) {
    const bool three_d = trial % 2 == 1;
    std::vector<std::uint32_t> dims =
        three_d ? std::vector<std::uint32_t>{4, 3, 3} : std::vector<std::uint32_t>{5, 4};
    std::int64_t total = 1;
    for (auto d : dims) total *= d;
    std::vector<std::uint8_t> inside(total);
    std::int64_t n = 0;
    for (auto& v : inside) n += (v = rs.uniform() < 0.7 ? 1 : 0);
    if (n == 0) inside[0] = 1;
    LatticeMask m = make_mask(dims, inside);
    NeighborGraph g = build_graph(m);
    const auto want = brute_edges(m);
    std::set<std::pair<std::int64_t, std::int64_t>> got;
    for (std::int64_t j = 0; j < m.n_voxels; ++j) {
      for (std::int32_t e = g.offsets[j]; e < g.offsets[j + 1]; ++e) {
        got.insert({j, g.neighbors[e]});
        EXPECT_NE(g.color[j], g.color[g.neighbors[e]]);
      }
      // rows sorted strictly
      for (std::int32_t e = g.offsets[j] + 1; e < g.offsets[j + 1]; ++e)
        EXPECT_LT(g.neighbors[e - 1], g.neighbors[e]);
    }
    EXPECT_EQ(got, want) << trial;
  }
}

TEST(Lattice, ComponentsOrderedBySize) {
  // 7x1 line with a gap: full-mask components {0,1,2} and {4,5,6}
  LatticeMask m = make_mask({7, 1}, {1, 1, 1, 0, 1, 1, 1});
  NeighborGraph g = build_graph(m);
  EXPECT_EQ(g.n_components, 2);
  // component field over a sub-activation: drop dense voxel 1 (full 1)
  std::vector<std::uint8_t> active = {1, 0, 1, 1, 1, 1};
  std::vector<std::int64_t> sizes;
  auto label = connected_components(m, g, active, &sizes);
  // actives: dense {0}, {2}, {3,4,5} -> label by decreasing size
  ASSERT_EQ(sizes.size(), 3u);
  EXPECT_EQ(sizes[0], 3);
  EXPECT_EQ(sizes[1], 1);
  EXPECT_EQ(sizes[2], 1);
  EXPECT_EQ(label[1], -1);
  EXPECT_EQ(label[3], 0);
  EXPECT_EQ(label[4], 0);
  EXPECT_EQ(label[5], 0);
  // singleton tie broken by smaller dense index
  EXPECT_EQ(label[0], 1);
  EXPECT_EQ(label[2], 2);
  EXPECT_THROW(connected_components(m, g, {1, 0}, nullptr), config_error);
}

TEST(Lattice, ComponentCountsAcrossDimensions) {
  // two disjoint plates in 3-d: z=0 plane and z=2 plane of a 2x2x3 grid
  std::vector<std::uint8_t> inside(12, 0);
  for (int i = 0; i < 4; ++i) inside[i] = 1;       // z = 0
  for (int i = 8; i < 12; ++i) inside[i] = 1;      // z = 2
  LatticeMask m = make_mask({2, 2, 3}, inside);
  NeighborGraph g = build_graph(m);
  EXPECT_EQ(m.n_voxels, 8);
  EXPECT_EQ(g.n_components, 2);
  // each in-plane voxel touches exactly its 2 plate neighbors
  for (int j = 0; j < 8; ++j) EXPECT_EQ(g.degree(j), 2);
}
