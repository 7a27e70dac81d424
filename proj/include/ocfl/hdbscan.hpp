#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ocfl/cluster_types.hpp"

namespace ocfl {

inline int default_min_cluster_size(int n, double fraction = 0.2) {
  return std::max(2, static_cast<int>(std::lround(fraction * n)));
}

namespace detail {

// lambda = 1/distance, with zero distances clamped so arithmetic stays finite
inline double lambda_of(double d) { return 1.0 / std::max(d, 1e-300); }

struct Dendrogram {
  // nodes 0..n-1 are leaves; merges append nodes with two children each
  std::vector<int> left, right;
  std::vector<double> height;
  std::vector<int> size;
  int root = -1;

  std::vector<int> leaves_under(int node) const {
    int n_leaves = (static_cast<int>(size.size()) + 1) / 2;
    std::vector<int> out, stack{node};
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      if (u < n_leaves) {
        out.push_back(u);
      } else {
        stack.push_back(left[u]);
        stack.push_back(right[u]);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

// single-linkage tree over the mutual-reachability graph
inline Dendrogram single_linkage(const std::vector<std::vector<double>>& mreach) {
  const int n = static_cast<int>(mreach.size());
  struct Edge {
    double w;
    int a, b;
  };
  // Prim MST on the dense mutual reachability matrix
  std::vector<Edge> mst;
  std::vector<bool> in_tree(n, false);
  std::vector<double> key(n, std::numeric_limits<double>::infinity());
  std::vector<int> from(n, -1);
  key[0] = 0.0;
  for (int step = 0; step < n; ++step) {
    int u = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int v = 0; v < n; ++v)
      if (!in_tree[v] && key[v] < best) {
        best = key[v];
        u = v;
      }
    in_tree[u] = true;
    if (from[u] >= 0) mst.push_back({key[u], std::min(from[u], u), std::max(from[u], u)});
    for (int v = 0; v < n; ++v)
      if (!in_tree[v] && mreach[u][v] < key[v]) {
        key[v] = mreach[u][v];
        from[v] = u;
      }
  }
  std::sort(mst.begin(), mst.end(), [](const Edge& x, const Edge& y) {
    if (x.w != y.w) return x.w < y.w;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  Dendrogram d;
  d.left.assign(n, -1);
  d.right.assign(n, -1);
  d.height.assign(n, 0.0);
  d.size.assign(n, 1);
  std::vector<int> rep(n);  // union-find root
  std::vector<int> comp_node(n);
  for (int i = 0; i < n; ++i) {
    rep[i] = i;
    comp_node[i] = i;
  }
  auto find = [&](int x) {
    while (rep[x] != x) {
      rep[x] = rep[rep[x]];
      x = rep[x];
    }
    return x;
  };
  for (const Edge& e : mst) {
    int ra = find(e.a), rb = find(e.b);
    int na = comp_node[ra], nb = comp_node[rb];
    int fresh = static_cast<int>(d.left.size());
    d.left.push_back(std::min(na, nb));
    d.right.push_back(std::max(na, nb));
    d.height.push_back(e.w);
    d.size.push_back(d.size[na] + d.size[nb]);
    rep[rb] = ra;
    comp_node[ra] = fresh;
    d.root = fresh;
  }
  return d;
}

struct CondensedCluster {
  int id = 0;
  int parent = -1;  // -1 for the root cluster
  double lambda_birth = 0.0;
  double stability = 0.0;
  std::vector<int> points;  // every point under the birth node
  std::vector<int> children;
};

struct CondensedTree {
  std::vector<CondensedCluster> clusters;
};

inline int condense_walk(const Dendrogram& d, int dnode, double lambda_birth, int parent,
                         int mcs, CondensedTree& out) {
  int cid = static_cast<int>(out.clusters.size());
  out.clusters.push_back({});
  out.clusters[cid].id = cid;
  out.clusters[cid].parent = parent;
  out.clusters[cid].lambda_birth = lambda_birth;
  out.clusters[cid].points = d.leaves_under(dnode);

  int cur = dnode;
  for (;;) {
    double lam = lambda_of(d.height[cur]);
    int l = d.left[cur], r = d.right[cur];
    int sl = d.size[l], sr = d.size[r];
    if (sl >= mcs && sr >= mcs) {
      // true split: the remaining members all leave here
      out.clusters[cid].stability += d.size[cur] * (lam - lambda_birth);
      int ca = condense_walk(d, l, lam, cid, mcs, out);
      int cb = condense_walk(d, r, lam, cid, mcs, out);
      out.clusters[cid].children.push_back(ca);
      out.clusters[cid].children.push_back(cb);
      return cid;
    }
    if (sl < mcs && sr < mcs) {
      // cluster dissolves into points
      out.clusters[cid].stability += d.size[cur] * (lam - lambda_birth);
      return cid;
    }
    // the small side sheds its points, the big side carries the cluster on
    // (the big side has >= mcs >= 2 members, so it is an internal node)
    int small = sl < mcs ? l : r;
    int big = sl < mcs ? r : l;
    out.clusters[cid].stability += d.size[small] * (lam - lambda_birth);
    cur = big;
  }
}

inline CondensedTree build_condensed(const DivergenceMatrix& gamma, int mcs) {
  const int n = gamma.order;
  auto dist = [&](int i, int j) { return gamma.entries[static_cast<size_t>(i) * n + j]; };
  // core distance: mcs-th nearest neighbor counting the point itself, so the
  // (mcs-1)-th other point; a block of exactly mcs members stays self-supporting
  std::vector<double> core(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> others;
    for (int j = 0; j < n; ++j)
      if (j != i) others.push_back(dist(i, j));
    std::sort(others.begin(), others.end());
    core[i] = others[std::min(mcs - 1, n - 1) - 1];
  }
  std::vector<std::vector<double>> mreach(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) mreach[i][j] = std::max({core[i], core[j], dist(i, j)});

  Dendrogram d = single_linkage(mreach);
  CondensedTree tree;
  condense_walk(d, d.root, 0.0, -1, mcs, tree);
  return tree;
}

// excess-of-mass selection, root selectable, ties resolved toward the parent
inline std::vector<int> select_clusters(const CondensedTree& tree) {
  const auto& cs = tree.clusters;
  std::vector<double> val(cs.size(), 0.0);
  std::vector<char> selected(cs.size(), 0);
  // clusters were appended parent-before-child, so reverse order is bottom-up
  for (int i = static_cast<int>(cs.size()) - 1; i >= 0; --i) {
    if (cs[i].children.empty()) {
      val[i] = cs[i].stability;
      selected[i] = 1;
      continue;
    }
    double child_sum = 0.0;
    for (int c : cs[i].children) child_sum += val[c];
    if (cs[i].stability >= child_sum) {
      val[i] = cs[i].stability;
      selected[i] = 1;
      // deselect the whole subtree
      std::vector<int> stack(cs[i].children.begin(), cs[i].children.end());
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        selected[u] = 0;
        for (int c : cs[u].children) stack.push_back(c);
      }
    } else {
      val[i] = child_sum;
    }
  }
  std::vector<int> out;
  for (size_t i = 0; i < cs.size(); ++i)
    if (selected[i]) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace detail

// HDBSCAN over the divergence matrix as a precomputed distance matrix, with
// every would-be noise point attached to the cluster of smallest mean raw
// distance so the labeling stays total.
inline ClusterAssignment hdbscan(const DivergenceMatrix& gamma, int min_cluster_size) {
  const int n = gamma.order;
  if (min_cluster_size < 2 || min_cluster_size > n)
    throw std::invalid_argument("hdbscan: min_cluster_size must be in [2, n], got " +
                                std::to_string(min_cluster_size));
  detail::CondensedTree tree = detail::build_condensed(gamma, min_cluster_size);
  std::vector<int> picked = detail::select_clusters(tree);

  // order selected clusters by their smallest member row
  std::sort(picked.begin(), picked.end(), [&](int a, int b) {
    return tree.clusters[a].points.front() < tree.clusters[b].points.front();
  });

  std::vector<int> labels(n, -1);
  for (size_t c = 0; c < picked.size(); ++c)
    for (int p : tree.clusters[picked[c]].points) labels[p] = static_cast<int>(c);

  // post-assign noise by smallest mean raw distance to each cluster's members
  auto dist = [&](int i, int j) { return gamma.entries[static_cast<size_t>(i) * n + j]; };
  for (int i = 0; i < n; ++i) {
    if (labels[i] >= 0) continue;
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (size_t c = 0; c < picked.size(); ++c) {
      const auto& pts = tree.clusters[picked[c]].points;
      double s = 0.0;
      int cnt = 0;
      for (int p : pts) {
        if (p == i) continue;
        s += dist(i, p);
        ++cnt;
      }
      double mean = s / std::max(cnt, 1);
      if (mean < best) {
        best = mean;
        arg = static_cast<int>(c);
      }
    }
    labels[i] = arg;
  }
  return make_assignment(gamma, labels, "hdbscan");
}

}  // namespace ocfl
