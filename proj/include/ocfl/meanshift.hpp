#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ocfl/cluster_types.hpp"

namespace ocfl {

struct MeanShiftConfig {
  std::optional<double> bandwidth;  // absent: median pairwise row distance
  double shift_tol = 1e-6;
  int max_iter = 300;
};

// Median pairwise Euclidean distance between the matrix rows.
inline double auto_bandwidth(const DivergenceMatrix& gamma) {
  const int n = gamma.order;
  std::vector<double> d;
  d.reserve(size_t(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d.push_back(detail::row_distance(gamma, i, j));
  std::sort(d.begin(), d.end());
  size_t m = d.size();
  if (m == 0) return 0.0;
  return (m % 2 == 1) ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
}

// Flat-kernel mean shift on the rows of the divergence matrix.
inline ClusterAssignment mean_shift(const DivergenceMatrix& gamma, const MeanShiftConfig& cfg = {}) {
  const int n = gamma.order;
  if (n < 2) throw std::invalid_argument("mean_shift: need at least 2 clients");
  double h;
  if (cfg.bandwidth.has_value()) {
    h = *cfg.bandwidth;
    if (!(h > 0.0)) throw std::invalid_argument("mean_shift: bandwidth must be > 0");
  } else {
    h = auto_bandwidth(gamma);
  }

  std::vector<std::vector<double>> pts = detail::gamma_rows(gamma);

  auto dist = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t k = 0; k < a.size(); ++k) {
      double d = a[k] - b[k];
      s += d * d;
    }
    return std::sqrt(s);
  };

  // every point seeds one trajectory
  std::vector<std::vector<double>> modes(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> x = pts[i];
    for (int it = 0; it < cfg.max_iter; ++it) {
      std::vector<double> m(x.size(), 0.0);
      int inside = 0;
      for (int j = 0; j < n; ++j) {
        if (dist(x, pts[j]) <= h) {
          ++inside;
          for (size_t k = 0; k < m.size(); ++k) m[k] += pts[j][k];
        }
      }
      for (double& v : m) v /= inside;  // the seed itself is always inside
      double moved = dist(x, m);
      x = std::move(m);
      if (moved < cfg.shift_tol) break;
    }
    modes[i] = std::move(x);
  }

  // merge modes closer than bandwidth/2 (coincident modes always merge)
  std::vector<std::vector<double>> canon;
  std::vector<int> mode_id(n);
  for (int i = 0; i < n; ++i) {
    int found = -1;
    for (size_t c = 0; c < canon.size(); ++c) {
      double d = dist(modes[i], canon[c]);
      if (d < h / 2.0 || d == 0.0) {
        found = static_cast<int>(c);
        break;
      }
    }
    if (found < 0) {
      canon.push_back(modes[i]);
      found = static_cast<int>(canon.size()) - 1;
    }
    mode_id[i] = found;
  }

  // assign every point to its nearest canonical mode
  std::vector<int> labels(n, 0);
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (size_t c = 0; c < canon.size(); ++c) {
      double d = dist(pts[i], canon[c]);
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    labels[i] = arg;
  }
  return make_assignment(gamma, labels, "meanshift");
}

}  // namespace ocfl
