#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

namespace ocfl {

// Contingency table between two flat label vectors over the same clients.
struct ContingencyTable {
  int n = 0;
  std::vector<std::vector<long>> counts;  // rows: first labeling, cols: second
  std::vector<long> row_marginals;
  std::vector<long> col_marginals;

  static ContingencyTable from(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("contingency: length mismatch");
    if (a.empty()) throw std::invalid_argument("contingency: empty labelings");
    std::map<int, int> ra, rb;
    for (int x : a) ra.emplace(x, 0);
    for (int x : b) rb.emplace(x, 0);
    int i = 0;
    for (auto& [k, v] : ra) v = i++;
    i = 0;
    for (auto& [k, v] : rb) v = i++;
    ContingencyTable t;
    t.n = static_cast<int>(a.size());
    t.counts.assign(ra.size(), std::vector<long>(rb.size(), 0));
    t.row_marginals.assign(ra.size(), 0);
    t.col_marginals.assign(rb.size(), 0);
    for (size_t k = 0; k < a.size(); ++k) {
      int r = ra[a[k]], c = rb[b[k]];
      ++t.counts[r][c];
      ++t.row_marginals[r];
      ++t.col_marginals[c];
    }
    return t;
  }
};

namespace detail {

inline double comb2(double x) { return x * (x - 1.0) / 2.0; }

inline double entropy(const std::vector<long>& marginals, int n) {
  double h = 0.0;
  for (long a : marginals) {
    if (a == 0) continue;
    double p = static_cast<double>(a) / n;
    h -= p * std::log(p);
  }
  return h;
}

inline double mutual_information(const ContingencyTable& t) {
  double mi = 0.0;
  const double n = t.n;
  for (size_t i = 0; i < t.counts.size(); ++i) {
    for (size_t j = 0; j < t.counts[i].size(); ++j) {
      long nij = t.counts[i][j];
      if (nij == 0) continue;
      mi += (nij / n) * std::log(n * nij / (static_cast<double>(t.row_marginals[i]) *
                                            static_cast<double>(t.col_marginals[j])));
    }
  }
  return std::max(mi, 0.0);
}

// Expected MI under the fixed-marginal hypergeometric model (the permutation
// model): triple loop over cells and feasible cell counts, log-gamma terms.
inline double expected_mutual_information(const ContingencyTable& t) {
  const long n = t.n;
  double emi = 0.0;
  for (long ai : t.row_marginals) {
    for (long bj : t.col_marginals) {
      long lo = std::max(1l, ai + bj - n);
      long hi = std::min(ai, bj);
      for (long nij = lo; nij <= hi; ++nij) {
        double term1 = (static_cast<double>(nij) / n) *
                       std::log(static_cast<double>(n) * static_cast<double>(nij) /
                                (static_cast<double>(ai) * static_cast<double>(bj)));
        double logp = std::lgamma(ai + 1) + std::lgamma(bj + 1) + std::lgamma(n - ai + 1) +
                      std::lgamma(n - bj + 1) - std::lgamma(n + 1) - std::lgamma(nij + 1) -
                      std::lgamma(ai - nij + 1) - std::lgamma(bj - nij + 1) -
                      std::lgamma(n - ai - bj + nij + 1);
        emi += term1 * std::exp(logp);
      }
    }
  }
  return emi;
}

}  // namespace detail

// Adjusted Rand index: permutation-model-corrected pair agreement.
inline double adjusted_rand(const std::vector<int>& a, const std::vector<int>& b) {
  ContingencyTable t = ContingencyTable::from(a, b);
  double sum_ij = 0.0;
  for (const auto& row : t.counts)
    for (long nij : row) sum_ij += detail::comb2(static_cast<double>(nij));
  double sum_a = 0.0, sum_b = 0.0;
  for (long ai : t.row_marginals) sum_a += detail::comb2(static_cast<double>(ai));
  for (long bj : t.col_marginals) sum_b += detail::comb2(static_cast<double>(bj));
  double pairs = detail::comb2(static_cast<double>(t.n));
  if (pairs == 0.0) return 1.0;  // a single client: trivially identical grouping
  double expected = sum_a * sum_b / pairs;
  double maximum = 0.5 * (sum_a + sum_b);
  if (maximum == expected) return 1.0;  // both partitions trivial and identical
  return (sum_ij - expected) / (maximum - expected);
}

// Adjusted mutual information, arithmetic-mean normalizer (Vinh et al. model).
inline double adjusted_mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  ContingencyTable t = ContingencyTable::from(a, b);
  double hu = detail::entropy(t.row_marginals, t.n);
  double hv = detail::entropy(t.col_marginals, t.n);
  if (hu == 0.0 && hv == 0.0) return 1.0;  // both single-cluster
  double mi = detail::mutual_information(t);
  double emi = detail::expected_mutual_information(t);
  double normalizer = 0.5 * (hu + hv);
  double denom = normalizer - emi;
  // keep the sign but never divide by zero (mirrors common library practice)
  const double eps = 2.220446049250313e-16;
  if (denom >= 0.0)
    denom = std::max(denom, eps);
  else
    denom = std::min(denom, -eps);
  return (mi - emi) / denom;
}

// Completeness: every true class must land inside one predicted cluster.
// COM = MI / H(pred), defined as 1 when H(pred) = 0 (one big cluster keeps
// every true class intact).
inline double completeness(const std::vector<int>& truth, const std::vector<int>& pred) {
  ContingencyTable t = ContingencyTable::from(truth, pred);
  double h_pred = detail::entropy(t.col_marginals, t.n);
  if (h_pred == 0.0) return 1.0;
  return detail::mutual_information(t) / h_pred;
}

struct ScoreRecord {
  int round = 0;
  double rand = 0.0;
  double ami = 0.0;
  double completeness = 0.0;
};

struct ScoreSeries {
  std::vector<ScoreRecord> per_round;

  double mean_rand() const { return mean([](const ScoreRecord& r) { return r.rand; }); }
  double mean_ami() const { return mean([](const ScoreRecord& r) { return r.ami; }); }
  double mean_completeness() const {
    return mean([](const ScoreRecord& r) { return r.completeness; });
  }

  template <typename F>
  double mean(F f) const {
    if (per_round.empty()) throw std::invalid_argument("ScoreSeries: no records");
    double s = 0.0;
    for (const auto& r : per_round) s += f(r);
    return s / static_cast<double>(per_round.size());
  }
};

inline ScoreRecord score_round(int round, const std::vector<int>& truth,
                               const std::vector<int>& pred) {
  ScoreRecord r;
  r.round = round;
  r.rand = adjusted_rand(truth, pred);
  r.ami = adjusted_mutual_information(truth, pred);
  r.completeness = completeness(truth, pred);
  return r;
}

// Run-level personalization/generalization summary.
// PF1: mean local macro-F1 over every (client, round) pair.
// GF1: per round, the unweighted mean over cluster models' orchestrator F1,
//      then the mean over rounds. DIST = |PF1 - GF1|.
struct PerformanceLedger {
  double pf1 = 0.0;
  double gf1 = 0.0;
  double dist = 0.0;
};

inline PerformanceLedger performance_ledger(const std::vector<std::vector<double>>& local_f1,
                                            const std::vector<std::vector<double>>& global_f1) {
  if (local_f1.empty() || global_f1.empty() || local_f1.size() != global_f1.size())
    throw std::invalid_argument("performance_ledger: need matching non-empty per-round records");
  double pf_sum = 0.0;
  long pf_n = 0;
  double gf_sum = 0.0;
  for (size_t r = 0; r < local_f1.size(); ++r) {
    if (local_f1[r].empty() || global_f1[r].empty())
      throw std::invalid_argument("performance_ledger: empty round record");
    for (double v : local_f1[r]) {
      pf_sum += v;
      ++pf_n;
    }
    double g = 0.0;
    for (double v : global_f1[r]) g += v;
    gf_sum += g / static_cast<double>(global_f1[r].size());
  }
  PerformanceLedger led;
  led.pf1 = pf_sum / static_cast<double>(pf_n);
  led.gf1 = gf_sum / static_cast<double>(local_f1.size());
  led.dist = std::abs(led.pf1 - led.gf1);
  return led;
}

}  // namespace ocfl
