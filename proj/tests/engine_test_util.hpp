#pragma once

// helpers shared by the clustering engine tests

#include <numeric>
#include <random>
#include <vector>

#include "ocfl/divergence.hpp"

inline ocfl::DivergenceMatrix gamma_from(const std::vector<std::vector<double>>& m) {
  ocfl::DivergenceMatrix g;
  g.order = static_cast<int>(m.size());
  for (int i = 0; i < g.order; ++i) g.client_index.push_back(i);
  g.entries.resize(static_cast<size_t>(g.order) * g.order);
  for (int i = 0; i < g.order; ++i)
    for (int j = 0; j < g.order; ++j) g.entries[static_cast<size_t>(i) * g.order + j] = m[i][j];
  return g;
}

// Block-structured distance matrix: `within` inside each block, `across` otherwise.
inline ocfl::DivergenceMatrix block_gamma(const std::vector<int>& sizes, double within,
                                          double across) {
  int n = std::accumulate(sizes.begin(), sizes.end(), 0);
  std::vector<int> block_of;
  for (size_t b = 0; b < sizes.size(); ++b)
    for (int k = 0; k < sizes[b]; ++k) block_of.push_back(static_cast<int>(b));
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) m[i][j] = block_of[i] == block_of[j] ? within : across;
  return gamma_from(m);
}

// Blocks with per-pair jitter, still symmetric with zero diagonal.
inline ocfl::DivergenceMatrix noisy_block_gamma(std::mt19937_64& rng, const std::vector<int>& sizes,
                                                double within_max, double cross_lo,
                                                double cross_hi) {
  int n = std::accumulate(sizes.begin(), sizes.end(), 0);
  std::vector<int> block_of;
  for (size_t b = 0; b < sizes.size(); ++b)
    for (int k = 0; k < sizes[b]; ++k) block_of.push_back(static_cast<int>(b));
  std::uniform_real_distribution<double> win(0.0, within_max);
  std::uniform_real_distribution<double> cross(cross_lo, cross_hi);
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      m[i][j] = m[j][i] = block_of[i] == block_of[j] ? win(rng) : cross(rng);
  return gamma_from(m);
}

// Fully random symmetric matrix with entries in [lo, hi], zero diagonal.
inline ocfl::DivergenceMatrix random_gamma(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m[i][j] = m[j][i] = u(rng);
  return gamma_from(m);
}

// Reorder clients: row i of the result is row perm[i] of the input, ids kept.
inline ocfl::DivergenceMatrix permute_gamma(const ocfl::DivergenceMatrix& g,
                                            const std::vector<int>& perm) {
  ocfl::DivergenceMatrix out;
  out.order = g.order;
  out.entries.resize(g.entries.size());
  for (int i = 0; i < g.order; ++i) {
    out.client_index.push_back(g.client_index[perm[i]]);
    for (int j = 0; j < g.order; ++j)
      out.entries[static_cast<size_t>(i) * g.order + j] =
          g.entries[static_cast<size_t>(perm[i]) * g.order + perm[j]];
  }
  return out;
}

// Same partition up to label renaming, over label vectors aligned by index.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = i + 1; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}
