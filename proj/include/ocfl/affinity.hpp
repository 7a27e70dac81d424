#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ocfl/cluster_types.hpp"
#include "ocfl/rng.hpp"

namespace ocfl {

struct AffinityConfig {
  double damping = 0.5;
  int max_iter = 200;
  int convergence_iter = 15;
  std::optional<double> preference;  // absent: median off-diagonal similarity
};

// Affinity propagation on similarities s = -gamma. Symmetric inputs can make
// the message dynamics oscillate, so a tiny seed-keyed jitter breaks the
// degeneracy deterministically.
inline ClusterAssignment affinity_propagation(const DivergenceMatrix& gamma,
                                              const AffinityConfig& cfg = {},
                                              uint64_t seed = 0x5eedu) {
  const int n = gamma.order;
  if (n < 2) throw std::invalid_argument("affinity_propagation: need at least 2 clients");
  if (!(cfg.damping >= 0.5 && cfg.damping < 1.0))
    throw std::invalid_argument("affinity_propagation: damping must be in [0.5, 1)");
  if (cfg.max_iter < 1 || cfg.convergence_iter < 1)
    throw std::invalid_argument("affinity_propagation: iteration counts must be >= 1");

  std::vector<std::vector<double>> s(n, std::vector<double>(n, 0.0));
  std::vector<double> off;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) {
        s[i][j] = -gamma.entries[static_cast<size_t>(i) * n + j];
        off.push_back(s[i][j]);
      }
  std::sort(off.begin(), off.end());
  double pref;
  if (cfg.preference.has_value()) {
    pref = *cfg.preference;
  } else {
    size_t m = off.size();
    pref = (m % 2 == 1) ? off[m / 2] : 0.5 * (off[m / 2 - 1] + off[m / 2]);
  }
  for (int i = 0; i < n; ++i) s[i][i] = pref;

  double lo = off.front(), hi = std::max(off.back(), pref);
  double scale = std::max(hi - std::min(lo, pref), 1.0);
  Rng jrng = make_rng(seed, "engine/affinity/jitter");
  std::uniform_real_distribution<double> ju(0.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s[i][j] += 1e-12 * scale * ju(jrng);

  std::vector<std::vector<double>> r(n, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<char> exemplar(n, 0), prev_exemplar(n, 0);
  int stable = 0;
  bool converged = false;

  for (int it = 0; it < cfg.max_iter; ++it) {
    // responsibilities
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) {
        double best = -std::numeric_limits<double>::infinity();
        for (int kp = 0; kp < n; ++kp) {
          if (kp == k) continue;
          best = std::max(best, a[i][kp] + s[i][kp]);
        }
        double fresh = s[i][k] - best;
        r[i][k] = cfg.damping * r[i][k] + (1.0 - cfg.damping) * fresh;
      }
    }
    // availabilities
    for (int k = 0; k < n; ++k) {
      double pos_sum = 0.0;
      for (int ip = 0; ip < n; ++ip)
        if (ip != k) pos_sum += std::max(0.0, r[ip][k]);
      for (int i = 0; i < n; ++i) {
        double fresh;
        if (i == k) {
          fresh = pos_sum;
        } else {
          double without_i = pos_sum - std::max(0.0, r[i][k]);
          fresh = std::min(0.0, r[k][k] + without_i);
        }
        a[i][k] = cfg.damping * a[i][k] + (1.0 - cfg.damping) * fresh;
      }
    }
    // exemplar set stability
    for (int k = 0; k < n; ++k) exemplar[k] = (r[k][k] + a[k][k] > 0.0) ? 1 : 0;
    bool any = false;
    for (int k = 0; k < n; ++k) any = any || exemplar[k];
    if (it > 0 && any && exemplar == prev_exemplar) {
      ++stable;
      if (stable >= cfg.convergence_iter) {
        converged = true;
        break;
      }
    } else {
      stable = 0;
    }
    prev_exemplar = exemplar;
  }

  std::vector<int> exemplars;
  for (int k = 0; k < n; ++k)
    if (r[k][k] + a[k][k] > 0.0) exemplars.push_back(k);
  if (exemplars.empty()) {
    // fall back to the strongest self-evidence so the labeling stays total
    int arg = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k)
      if (r[k][k] + a[k][k] > best) {
        best = r[k][k] + a[k][k];
        arg = k;
      }
    exemplars.push_back(arg);
  }

  std::vector<int> labels(n, 0);
  for (int i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    int arg = 0;
    for (size_t e = 0; e < exemplars.size(); ++e) {
      int k = exemplars[e];
      double v = (i == k) ? std::numeric_limits<double>::infinity() : s[i][k];
      if (v > best) {
        best = v;
        arg = static_cast<int>(e);
      }
    }
    labels[i] = arg;
  }
  return make_assignment(gamma, labels, converged ? "affinity" : "affinity (non-converged)");
}

}  // namespace ocfl
