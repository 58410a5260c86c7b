#pragma once

// Patch adjacency graph over the submask grid, shortest-path distances,
// vertical-axis mirror symmetry, and the geometry-aware guidance weight.

#include <ostream>
#include <queue>
#include <stdexcept>
#include <vector>

#include "seeable/labels.hpp"

namespace seeable {

// 4-connected grid lattice over rows x cols patches. Distances are
// precomputed at construction (hop counts, unit edge length).
struct PatchGraph {
  int rows = 0;
  int cols = 0;
  int n_nodes = 0;
  std::vector<std::vector<int>> adj;
  std::vector<int> dist;  // n_nodes x n_nodes, -1 = unreachable

  int distance_at(int i, int j) const { return dist[static_cast<size_t>(i) * n_nodes + j]; }
};

inline PatchGraph build_grid_graph(int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("build_grid_graph: rows, cols >= 1");
  PatchGraph g;
  g.rows = rows;
  g.cols = cols;
  g.n_nodes = rows * cols;
  g.adj.resize(g.n_nodes);
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) {
        g.adj[id(r, c)].push_back(id(r, c + 1));
        g.adj[id(r, c + 1)].push_back(id(r, c));
      }
      if (r + 1 < rows) {
        g.adj[id(r, c)].push_back(id(r + 1, c));
        g.adj[id(r + 1, c)].push_back(id(r, c));
      }
    }
  }
  // all-pairs BFS
  g.dist.assign(static_cast<size_t>(g.n_nodes) * g.n_nodes, -1);
  for (int s = 0; s < g.n_nodes; ++s) {
    std::queue<int> q;
    auto* row = g.dist.data() + static_cast<size_t>(s) * g.n_nodes;
    row[s] = 0;
    q.push(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : g.adj[u]) {
        if (row[v] < 0) {
          row[v] = row[u] + 1;
          q.push(v);
        }
      }
    }
  }
  return g;
}

inline int edge_count(const PatchGraph& g) {
  int twice = 0;
  for (const auto& nbrs : g.adj) twice += static_cast<int>(nbrs.size());
  return twice / 2;
}

// Minimum hop count between patches i and j.
inline int graph_distance(const PatchGraph& g, int i, int j) {
  if (i < 0 || i >= g.n_nodes || j < 0 || j >= g.n_nodes)
    throw std::invalid_argument("graph_distance: node out of range");
  const int d = g.distance_at(i, j);
  if (d < 0) throw std::domain_error("graph_distance: nodes are disconnected");
  return d;
}

// Mirror patch across the vertical center axis: (r, c) -> (r, cols-1-c).
inline int sym_location(int y_loc, int rows, int cols) {
  if (y_loc < 0 || y_loc >= rows * cols) throw std::invalid_argument("sym_location: out of range");
  const int r = y_loc / cols;
  const int c = y_loc % cols;
  return r * cols + (cols - 1 - c);
}

// Three-scale penalty: 1/4 for same position (type-only error), 1/2 for the
// mirror-symmetric position, otherwise the raw graph distance.
inline double guidance_weight(int pred_y, int true_y, const PatchGraph& g, int n_type) {
  const int n_cls = g.n_nodes * n_type;
  if (pred_y < 0 || pred_y >= n_cls || true_y < 0 || true_y >= n_cls)
    throw std::invalid_argument("guidance_weight: label out of range");
  const int pp = label_pos(pred_y, n_type);
  const int pt = label_pos(true_y, n_type);
  if (pp == pt) return 0.25;
  if (sym_location(pp, g.rows, g.cols) == pt) return 0.5;
  return static_cast<double>(graph_distance(g, pp, pt));
}

// Debug dump of the hop-count matrix, one comma-separated row per node.
inline void write_distance_matrix(const PatchGraph& g, std::ostream& os) {
  for (int i = 0; i < g.n_nodes; ++i) {
    for (int j = 0; j < g.n_nodes; ++j) os << g.distance_at(i, j) << (j + 1 == g.n_nodes ? '\n' : ',');
  }
}

}  // namespace seeable
