#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ocfl/tensor.hpp"

namespace ocfl {

// One client's parameter movement over a round of local training.
struct DeltaVector {
  ClientId client_id = 0;
  int round = 0;
  ParameterVector delta;
};

// Pairwise cosine distance of two flat vectors, in [0, 2].
// The cosine ratio is clamped to [-1, 1] before subtraction so accumulated
// rounding can never push a distance outside the geometric range.
inline double cosine_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw std::invalid_argument("cosine_distance: dimension mismatch");
  double uu = 0.0, vv = 0.0, uv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    uu += u[i] * u[i];
    vv += v[i] * v[i];
    uv += u[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0)
    throw std::invalid_argument("cosine_distance: zero-norm vector");
  double r = uv / (std::sqrt(uu) * std::sqrt(vv));
  r = std::clamp(r, -1.0, 1.0);
  return 1.0 - r;
}

inline double cosine_distance(const ParameterVector& u, const ParameterVector& v) {
  if (!(u.layout == v.layout))
    throw std::invalid_argument("cosine_distance: layout mismatch");
  return cosine_distance(std::span<const double>(u.values), std::span<const double>(v.values));
}

// Symmetric matrix of pairwise cosine distances between client deltas.
// client_index preserves the input order of the deltas.
struct DivergenceMatrix {
  int order = 0;
  std::vector<ClientId> client_index;
  std::vector<double> entries;  // row-major, order x order

  double at(int i, int j) const { return entries[static_cast<size_t>(i) * order + j]; }
  double& at(int i, int j) { return entries[static_cast<size_t>(i) * order + j]; }
};

inline DivergenceMatrix build_divergence_matrix(const std::vector<DeltaVector>& deltas) {
  if (deltas.size() < 2)
    throw std::invalid_argument("build_divergence_matrix: need at least 2 deltas");
  const Layout& ref = deltas.front().delta.layout;
  for (const auto& d : deltas) {
    if (!(d.delta.layout == ref))
      throw std::invalid_argument("build_divergence_matrix: layout mismatch for client " +
                                  std::to_string(d.client_id));
    double nn = 0.0;
    for (double x : d.delta.values) {
      if (!std::isfinite(x))
        throw std::invalid_argument("build_divergence_matrix: non-finite delta for client " +
                                    std::to_string(d.client_id));
      nn += x * x;
    }
    if (nn == 0.0)
      throw std::invalid_argument("build_divergence_matrix: zero-norm delta for client " +
                                  std::to_string(d.client_id));
  }
  int n = static_cast<int>(deltas.size());
  DivergenceMatrix g;
  g.order = n;
  g.entries.assign(static_cast<size_t>(n) * n, 0.0);
  for (const auto& d : deltas) g.client_index.push_back(d.client_id);
  // upper triangle only, mirrored: symmetry holds structurally
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double v = cosine_distance(std::span<const double>(deltas[i].delta.values),
                                 std::span<const double>(deltas[j].delta.values));
      g.at(i, j) = v;
      g.at(j, i) = v;
    }
  }
  return g;
}

// Entrywise p-norm over the full matrix (diagonal contributes zeros).
inline double matrix_p_norm(const DivergenceMatrix& g, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("matrix_p_norm: p must be >= 1");
  double s = 0.0;
  for (double x : g.entries) s += std::pow(std::abs(x), p);
  return std::pow(s, 1.0 / p);
}

// Largest attainable ||Gamma||_p for n clients: (n(n-1) 2^p)^(1/p).
inline double scaling_lambda(int n, double p) {
  if (n < 2) throw std::invalid_argument("scaling_lambda: n must be >= 2");
  if (!(p >= 1.0)) throw std::invalid_argument("scaling_lambda: p must be >= 1");
  double s = static_cast<double>(n) * (n - 1) * std::pow(2.0, p);
  return std::pow(s, 1.0 / p);
}

// Normalized divergence temperature in [0, 1].
inline double temperature(const DivergenceMatrix& g, double p) {
  if (g.order < 2) throw std::invalid_argument("temperature: matrix order must be >= 2");
  return matrix_p_norm(g, p) / scaling_lambda(g.order, p);
}

enum class TriggerMode {
  upturn,   // round 0 only records; first t >= 1 with T_t >= T_{t-1} fires
  literal,  // T_{-1} treated as -inf, so recording round 0 fires immediately
};

// Append-only temperature history with one-shot trigger detection.
// fired becomes true at most once and never reverts; ties (T_t == T_{t-1}) fire.
struct TemperatureTrace {
  double p = 2.0;
  TriggerMode mode = TriggerMode::upturn;
  std::vector<std::pair<int, double>> per_round;  // (round, temperature)
  std::optional<int> trigger_round;
  bool fired = false;
};

inline void update_trace(TemperatureTrace& tr, int round, double t_value) {
  if (!tr.per_round.empty() && round <= tr.per_round.back().first)
    throw std::invalid_argument("update_trace: non-monotone round index");
  if (!(t_value >= -1e-12 && t_value <= 1.0 + 1e-12))
    throw std::invalid_argument("update_trace: temperature outside [0, 1]");
  t_value = std::clamp(t_value, 0.0, 1.0);
  if (!tr.fired) {
    if (tr.mode == TriggerMode::literal && tr.per_round.empty()) {
      tr.fired = true;
      tr.trigger_round = round;
    } else if (!tr.per_round.empty() && round >= 1 && t_value >= tr.per_round.back().second) {
      tr.fired = true;
      tr.trigger_round = round;
    }
  }
  tr.per_round.emplace_back(round, t_value);
}

}  // namespace ocfl
