#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "ocfl/cluster_types.hpp"
#include "ocfl/rng.hpp"

namespace ocfl {

struct KMeansConfig {
  int k = 0;  // 0: take the caller's cluster count
  int n_init = 10;
  int max_iter = 300;
  double tol = 1e-9;
};

namespace detail {

inline double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct KMeansRun {
  std::vector<int> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

inline KMeansRun lloyd_once(const std::vector<std::vector<double>>& pts, int k, int max_iter,
                            double tol, Rng& rng) {
  const int n = static_cast<int>(pts.size());
  // k-means++ seeding
  std::vector<std::vector<double>> centers;
  std::uniform_int_distribution<int> first(0, n - 1);
  centers.push_back(pts[first(rng)]);
  std::vector<double> d2(n);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, sqdist(pts[i], c));
      d2[i] = best;
      total += best;
    }
    int pick;
    if (total <= 0.0) {
      pick = first(rng);  // all points already covered exactly
    } else {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      double acc = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (r <= acc) {
          pick = i;
          break;
        }
      }
    }
    centers.push_back(pts[pick]);
  }

  std::vector<int> labels(n, 0);
  for (int it = 0; it < max_iter; ++it) {
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int c = 0; c < k; ++c) {
        double d = sqdist(pts[i], centers[c]);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      labels[i] = arg;
    }
    std::vector<std::vector<double>> next(k, std::vector<double>(pts[0].size(), 0.0));
    std::vector<int> count(k, 0);
    for (int i = 0; i < n; ++i) {
      ++count[labels[i]];
      for (size_t d = 0; d < pts[i].size(); ++d) next[labels[i]][d] += pts[i][d];
    }
    for (int c = 0; c < k; ++c) {
      if (count[c] == 0) {
        // revive an empty cluster with the point farthest from its center
        double worst = -1.0;
        int takeover = 0;
        for (int i = 0; i < n; ++i) {
          double d = sqdist(pts[i], centers[labels[i]]);
          if (d > worst) {
            worst = d;
            takeover = i;
          }
        }
        next[c] = pts[takeover];
        labels[takeover] = c;
        count[c] = 1;
      } else {
        for (double& v : next[c]) v /= count[c];
      }
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) shift = std::max(shift, std::sqrt(sqdist(centers[c], next[c])));
    centers = std::move(next);
    if (shift < tol) break;
  }

  KMeansRun run;
  run.labels.assign(n, 0);
  run.inertia = 0.0;
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int c = 0; c < k; ++c) {
      double d = sqdist(pts[i], centers[c]);
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    run.labels[i] = arg;
    run.inertia += best;
  }
  return run;
}

}  // namespace detail

// K-Means over the rows of the divergence matrix, k-means++ seeding, best of
// n_init restarts by inertia.
inline ClusterAssignment kmeans_on_gamma(const DivergenceMatrix& gamma, int k, uint64_t seed,
                                         const KMeansConfig& cfg = {}) {
  const int n = gamma.order;
  if (k < 2 || k > n)
    throw std::invalid_argument("kmeans_on_gamma: k must be in [2, n], got " + std::to_string(k));
  std::vector<std::vector<double>> pts = detail::gamma_rows(gamma);
  Rng rng = make_rng(seed, "engine/kmeans");
  detail::KMeansRun best;
  for (int rep = 0; rep < cfg.n_init; ++rep) {
    detail::KMeansRun run = detail::lloyd_once(pts, k, cfg.max_iter, cfg.tol, rng);
    if (run.inertia < best.inertia) best = run;
  }
  return make_assignment(gamma, best.labels, "kmeans");
}

}  // namespace ocfl
