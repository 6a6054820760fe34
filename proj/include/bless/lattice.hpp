#pragma once

// Lattice mask and neighbor structure. Voxels live on a 2-d or 3-d grid in
// row-major order with the first axis fastest; the dense index enumerates
// in-mask voxels in that order. Adjacency is 4- (2-d) or 6-connectivity
// (3-d), symmetric and self-loop free.

#include <cstdint>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "bless/math.hpp"

namespace bless {

struct LatticeMask {
  std::vector<std::uint32_t> dims;       // 2 or 3 entries
  std::vector<std::uint8_t> inside;      // full lattice occupancy
  std::vector<std::int64_t> dense_of;    // full index -> dense index or -1
  std::vector<std::int64_t> full_of;     // dense index -> full index
  std::int64_t n_voxels = 0;

  std::int64_t lattice_size() const {
    std::int64_t s = 1;
    for (auto d : dims) s *= d;
    return s;
  }
};

inline LatticeMask make_mask(std::vector<std::uint32_t> dims,
                             std::vector<std::uint8_t> inside) {
  if (dims.size() != 2 && dims.size() != 3)
    throw config_error("mask must be 2-d or 3-d");
  std::int64_t total = 1;
  for (auto d : dims) {
    if (d == 0) throw config_error("mask axis of length zero");
    total *= d;
  }
  if (static_cast<std::int64_t>(inside.size()) != total)
    throw config_error("mask payload does not match its dimensions");
  LatticeMask m;
  m.dims = std::move(dims);
  m.inside = std::move(inside);
  m.dense_of.assign(total, -1);
  for (std::int64_t i = 0; i < total; ++i) {
    if (m.inside[i]) {
      m.dense_of[i] = m.n_voxels++;
      m.full_of.push_back(i);
    }
  }
  return m;
}

inline LatticeMask full_mask(std::vector<std::uint32_t> dims) {
  std::int64_t total = 1;
  for (auto d : dims) total *= d;
  return make_mask(std::move(dims), std::vector<std::uint8_t>(total, 1));
}

struct NeighborGraph {
  std::vector<std::int32_t> offsets;    // CSR over dense voxels, size M+1
  std::vector<std::int32_t> neighbors;  // sorted inside each row
  std::vector<std::uint8_t> color;      // coordinate-parity two-coloring
  int n_components = 0;                 // components of the full mask

  std::int64_t n_voxels() const {
    return static_cast<std::int64_t>(offsets.size()) - 1;
  }
  int degree(std::int64_t j) const { return offsets[j + 1] - offsets[j]; }
};

// Connected components of an arbitrary binary field over the mask.
// Labels are dense per active voxel (-1 elsewhere) and ordered by
// decreasing size, ties broken by the smallest dense index in the component.
inline std::vector<std::int32_t> connected_components(
    const LatticeMask& mask, const NeighborGraph& graph,
    const std::vector<std::uint8_t>& active, std::vector<std::int64_t>* sizes_out = nullptr) {
  const std::int64_t m = mask.n_voxels;
  if (static_cast<std::int64_t>(active.size()) != m)
    throw config_error("active field length does not match mask");
  std::vector<std::int32_t> label(m, -1);
  struct Comp { std::int64_t size, first; std::int32_t raw; };
  std::vector<Comp> comps;
  std::vector<std::int64_t> stack;
  for (std::int64_t start = 0; start < m; ++start) {
    if (!active[start] || label[start] >= 0) continue;
    const std::int32_t raw = static_cast<std::int32_t>(comps.size());
    std::int64_t size = 0;
    stack.push_back(start);
    label[start] = raw;
    while (!stack.empty()) {
      const std::int64_t v = stack.back();
      stack.pop_back();
      ++size;
      for (std::int32_t e = graph.offsets[v]; e < graph.offsets[v + 1]; ++e) {
        const std::int32_t u = graph.neighbors[e];
        if (active[u] && label[u] < 0) {
          label[u] = raw;
          stack.push_back(u);
        }
      }
    }
    comps.push_back({size, start, raw});
  }
  std::vector<std::int32_t> order(comps.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    if (comps[a].size != comps[b].size) return comps[a].size > comps[b].size;
    return comps[a].first < comps[b].first;
  });
  std::vector<std::int32_t> remap(comps.size());
  for (std::size_t r = 0; r < order.size(); ++r) remap[order[r]] = static_cast<std::int32_t>(r);
  for (auto& l : label)
    if (l >= 0) l = remap[l];
  if (sizes_out) {
    sizes_out->assign(comps.size(), 0);
    for (std::size_t r = 0; r < order.size(); ++r) (*sizes_out)[r] = comps[order[r]].size;
  }
  return label;
}

inline NeighborGraph build_graph(const LatticeMask& mask) {
  const std::int64_t m = mask.n_voxels;
  const int nd = static_cast<int>(mask.dims.size());
  NeighborGraph g;
  g.offsets.assign(m + 1, 0);
  g.color.assign(m, 0);

  std::vector<std::int64_t> strides(nd, 1);
  for (int a = 1; a < nd; ++a) strides[a] = strides[a - 1] * mask.dims[a - 1];

  std::vector<std::int64_t> coord(nd);
  std::vector<std::vector<std::int32_t>> rows(m);
  for (std::int64_t j = 0; j < m; ++j) {
    std::int64_t rem = mask.full_of[j];
    std::int64_t parity = 0;
    for (int a = 0; a < nd; ++a) {
      coord[a] = rem % mask.dims[a];
      rem /= mask.dims[a];
      parity += coord[a];
    }
    g.color[j] = static_cast<std::uint8_t>(parity & 1);
    for (int a = 0; a < nd; ++a) {
      for (int step : {-1, 1}) {
        const std::int64_t c = coord[a] + step;
        if (c < 0 || c >= static_cast<std::int64_t>(mask.dims[a])) continue;
        const std::int64_t nb_full = mask.full_of[j] + step * strides[a];
        const std::int64_t nb = mask.dense_of[nb_full];
        if (nb >= 0) rows[j].push_back(static_cast<std::int32_t>(nb));
      }
    }
    std::sort(rows[j].begin(), rows[j].end());
  }
  for (std::int64_t j = 0; j < m; ++j)
    g.offsets[j + 1] = g.offsets[j] + static_cast<std::int32_t>(rows[j].size());
  g.neighbors.reserve(g.offsets[m]);
  for (auto& row : rows)
    g.neighbors.insert(g.neighbors.end(), row.begin(), row.end());

  std::vector<std::int64_t> sizes;
  connected_components(mask, g, std::vector<std::uint8_t>(m, 1), &sizes);
  g.n_components = static_cast<int>(sizes.size());
  return g;
}

}  // namespace bless
