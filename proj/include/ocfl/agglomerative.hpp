#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ocfl/cluster_types.hpp"

namespace ocfl {

// Bottom-up average linkage (UPGMA) on the divergence matrix, merging while
// the smallest inter-cluster linkage stays at or below the threshold.
inline ClusterAssignment agglomerative_average(const DivergenceMatrix& gamma,
                                               double distance_threshold) {
  if (!(distance_threshold > 0.0))
    throw std::invalid_argument("agglomerative_average: distance_threshold must be > 0");
  const int n = gamma.order;
  std::vector<bool> active(n, true);
  std::vector<int> size(n, 1);
  std::vector<int> owner(n);  // row -> active cluster slot
  for (int i = 0; i < n; ++i) owner[i] = i;
  // linkage matrix, updated by the unweighted pair-group mean rule
  std::vector<std::vector<double>> link(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) link[i][j] = gamma.entries[static_cast<size_t>(i) * n + j];

  for (int merges = 0; merges < n - 1; ++merges) {
    double best = std::numeric_limits<double>::infinity();
    int ba = -1, bb = -1;
    for (int a = 0; a < n; ++a) {
      if (!active[a]) continue;
      for (int b = a + 1; b < n; ++b) {
        if (!active[b]) continue;
        if (link[a][b] < best) {
          best = link[a][b];
          ba = a;
          bb = b;
        }
      }
    }
    if (ba < 0 || best > distance_threshold) break;
    for (int c = 0; c < n; ++c) {
      if (!active[c] || c == ba || c == bb) continue;
      double merged = (size[ba] * link[ba][c] + size[bb] * link[bb][c]) /
                      static_cast<double>(size[ba] + size[bb]);
      link[ba][c] = link[c][ba] = merged;
    }
    size[ba] += size[bb];
    active[bb] = false;
    for (int i = 0; i < n; ++i)
      if (owner[i] == bb) owner[i] = ba;
  }
  return make_assignment(gamma, owner, "agglomerative");
}

// SCL bipartition: split a cohort so the maximum cross-group cosine
// similarity is minimal, i.e. the minimum cross-group distance is maximal.
// That optimum is the cut through the largest edge of a minimum spanning
// tree. The part holding the lowest client id comes first.
inline std::pair<std::vector<ClientId>, std::vector<ClientId>> cosine_bipartition(
    const DivergenceMatrix& gamma) {
  const int n = gamma.order;
  if (n < 2) throw std::invalid_argument("cosine_bipartition: cohort must have >= 2 clients");
  auto dist = [&](int i, int j) { return gamma.entries[static_cast<size_t>(i) * n + j]; };

  // Prim from node 0
  std::vector<bool> in_tree(n, false);
  std::vector<double> key(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  key[0] = 0.0;
  for (int step = 0; step < n; ++step) {
    int u = -1;
    double bestk = std::numeric_limits<double>::infinity();
    for (int v = 0; v < n; ++v)
      if (!in_tree[v] && key[v] < bestk) {
        bestk = key[v];
        u = v;
      }
    in_tree[u] = true;
    for (int v = 0; v < n; ++v)
      if (!in_tree[v] && dist(u, v) < key[v]) {
        key[v] = dist(u, v);
        parent[v] = u;
      }
  }

  // heaviest tree edge; ties resolved toward the lowest endpoint pair
  int cut = -1;
  double cutw = -1.0;
  for (int v = 1; v < n; ++v) {
    double w = dist(v, parent[v]);
    int lo = std::min(v, parent[v]), hi = std::max(v, parent[v]);
    int clo = cut < 0 ? -1 : std::min(cut, parent[cut]);
    int chi = cut < 0 ? -1 : std::max(cut, parent[cut]);
    if (w > cutw || (w == cutw && (lo < clo || (lo == clo && hi < chi)))) {
      cutw = w;
      cut = v;
    }
  }

  // removing (cut, parent[cut]) separates the subtree rooted at cut
  std::vector<bool> side(n, false);
  side[cut] = true;
  for (bool grew = true; grew;) {
    grew = false;
    for (int v = 1; v < n; ++v)
      if (!side[v] && side[parent[v]]) {
        side[v] = true;
        grew = true;
      }
  }

  std::vector<ClientId> a, b;
  for (int i = 0; i < n; ++i)
    (side[i] ? a : b).push_back(gamma.client_index[i]);
  // row 0 is never on the cut child's side by construction, so b holds the
  // lowest row; still, order parts by their smallest client id
  if (a.empty() || b.empty())
    throw std::logic_error("cosine_bipartition: degenerate cut");
  if (*std::min_element(a.begin(), a.end()) < *std::min_element(b.begin(), b.end()))
    return {a, b};
  return {b, a};
}

}  // namespace ocfl
