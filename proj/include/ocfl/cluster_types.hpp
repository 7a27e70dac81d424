#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocfl/divergence.hpp"
#include "ocfl/tensor.hpp"

namespace ocfl {

// A total labeling of the clients that appear in a divergence matrix.
// Labels are contiguous 0..n_clusters-1, numbered by first appearance in
// client row order so that equal partitions compare equal.
struct ClusterAssignment {
  std::vector<ClientId> order;  // client ids, matrix row order
  std::vector<int> labels;      // parallel to order
  int n_clusters = 0;
  std::string method;

  int label_of(ClientId id) const {
    for (size_t i = 0; i < order.size(); ++i)
      if (order[i] == id) return labels[i];
    throw std::invalid_argument("label_of: unknown client " + std::to_string(id));
  }

  std::vector<std::vector<ClientId>> groups() const {
    std::vector<std::vector<ClientId>> g(n_clusters);
    for (size_t i = 0; i < order.size(); ++i) g[labels[i]].push_back(order[i]);
    return g;
  }
};

// Rewrite labels to 0..k-1 in order of first appearance; returns k.
inline int canonicalize_labels(std::vector<int>& labels) {
  std::vector<int> seen;
  for (int& l : labels) {
    auto it = std::find(seen.begin(), seen.end(), l);
    if (it == seen.end()) {
      seen.push_back(l);
      l = static_cast<int>(seen.size()) - 1;
    } else {
      l = static_cast<int>(it - seen.begin());
    }
  }
  return static_cast<int>(seen.size());
}

inline ClusterAssignment make_assignment(const DivergenceMatrix& gamma, std::vector<int> labels,
                                         std::string method) {
  if (labels.size() != gamma.client_index.size())
    throw std::invalid_argument("make_assignment: label count mismatch");
  ClusterAssignment a;
  a.order = gamma.client_index;
  a.labels = std::move(labels);
  a.n_clusters = canonicalize_labels(a.labels);
  a.method = std::move(method);
  return a;
}

namespace detail {

// Euclidean distance between two rows of the divergence matrix.
inline double row_distance(const DivergenceMatrix& g, int i, int j) {
  const size_t n = static_cast<size_t>(g.order);
  double s = 0.0;
  for (size_t d = 0; d < n; ++d) {
    double diff = g.entries[i * n + d] - g.entries[j * n + d];
    s += diff * diff;
  }
  return std::sqrt(s);
}

// Matrix rows as points in R^n.
inline std::vector<std::vector<double>> gamma_rows(const DivergenceMatrix& g) {
  const int n = g.order;
  std::vector<std::vector<double>> pts(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) pts[i][j] = g.entries[static_cast<size_t>(i) * n + j];
  return pts;
}

}  // namespace detail

}  // namespace ocfl
