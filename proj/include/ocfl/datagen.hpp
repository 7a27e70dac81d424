#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocfl/data.hpp"
#include "ocfl/rng.hpp"

namespace ocfl {

enum class SplitKind {
  non_overlapping_balanced,
  overlapping_balanced,
  non_overlapping_imbalanced,
  overlapping_imbalanced,
};

inline bool split_is_overlapping(SplitKind k) {
  return k == SplitKind::overlapping_balanced || k == SplitKind::overlapping_imbalanced;
}
inline bool split_is_imbalanced(SplitKind k) {
  return k == SplitKind::non_overlapping_imbalanced || k == SplitKind::overlapping_imbalanced;
}

inline std::string split_kind_name(SplitKind k) {
  switch (k) {
    case SplitKind::non_overlapping_balanced: return "non_overlapping_balanced";
    case SplitKind::overlapping_balanced: return "overlapping_balanced";
    case SplitKind::non_overlapping_imbalanced: return "non_overlapping_imbalanced";
    case SplitKind::overlapping_imbalanced: return "overlapping_imbalanced";
  }
  throw std::logic_error("split_kind_name: bad kind");
}

inline SplitKind split_kind_from_name(const std::string& s) {
  if (s == "non_overlapping_balanced") return SplitKind::non_overlapping_balanced;
  if (s == "overlapping_balanced") return SplitKind::overlapping_balanced;
  if (s == "non_overlapping_imbalanced") return SplitKind::non_overlapping_imbalanced;
  if (s == "overlapping_imbalanced") return SplitKind::overlapping_imbalanced;
  throw std::invalid_argument("unknown split_kind: " + s);
}

struct ClassModel {
  std::vector<double> mean;
  double sigma = 0.35;
};

// One data-generating distribution Phi_j: a class support plus the class
// models for that support. Shared classes carry value-identical models.
struct DataGenDistribution {
  int dist_id = 0;
  std::vector<int> class_support;        // sorted class ids
  std::vector<ClassModel> class_models;  // parallel to class_support
};

struct DatagenConfig {
  int n_clients = 15;
  int n_clusters = 3;
  SplitKind kind = SplitKind::non_overlapping_balanced;
  double alpha = 1.0;
  int n_classes = 10;
  int feature_dim = 8;
  double sigma = 0.35;
  double mean_spread = 1.0;
  int shared_classes = 2;  // overlapping kinds: classes added to every support
  int train_per_client = 200;
  int test_per_client = 50;
  int orchestrator_test = 500;
  uint64_t seed = 0;

  void validate() const {
    if (n_clusters < 1) throw std::invalid_argument("datagen: n_clusters must be >= 1");
    if (n_clients < n_clusters)
      throw std::invalid_argument("datagen: n_clients must be >= n_clusters");
    if (n_classes < 2) throw std::invalid_argument("datagen: n_classes must be >= 2");
    if (n_classes < n_clusters)
      throw std::invalid_argument("datagen: n_classes must cover every cluster support");
    if (feature_dim < 1) throw std::invalid_argument("datagen: feature_dim must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("datagen: alpha must be > 0");
    if (!(sigma > 0.0)) throw std::invalid_argument("datagen: sigma must be > 0");
    if (!(mean_spread > 0.0)) throw std::invalid_argument("datagen: mean_spread must be > 0");
    if (train_per_client < 1 || test_per_client < 1)
      throw std::invalid_argument("datagen: per-client sample counts must be >= 1");
    if (orchestrator_test < n_classes)
      throw std::invalid_argument("datagen: orchestrator test needs at least one sample per class");
    if (split_is_overlapping(kind)) {
      if (n_clusters < 2)
        throw std::invalid_argument("datagen: overlapping kinds need n_clusters >= 2");
      if (shared_classes < 1)
        throw std::invalid_argument("datagen: overlapping kinds need shared_classes >= 1");
      if (shared_classes >= n_classes)
        throw std::invalid_argument("datagen: shared_classes must leave room for disjoint classes");
    }
  }
};

struct ClientPlanEntry {
  ClientId client_id = 0;
  int cluster = 0;
  int train_count = 0;
  int test_count = 0;
  std::vector<double> label_weights;  // parallel to the cluster's class support
};

struct PartitionPlan {
  SplitKind kind = SplitKind::non_overlapping_balanced;
  double alpha = 1.0;
  uint64_t seed = 0;
  int n_classes = 0;
  int feature_dim = 0;
  std::vector<DataGenDistribution> distributions;      // index doubles as cluster id
  std::vector<std::vector<ClientId>> clients_of_cluster;
  std::vector<int> cluster_of_client;
  std::vector<ClientPlanEntry> clients;

  // ground-truth partition labels, indexed by client id
  const std::vector<int>& truth() const { return cluster_of_client; }
};

struct GeneratedData {
  PartitionPlan plan;
  std::vector<ClientDataset> clients;
  OrchestratorTestSet orchestrator;
};

// Normalized Gamma(alpha, 1) draws: one Dirichlet(alpha) sample of length k.
inline std::vector<double> sample_dirichlet(double alpha, int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("sample_dirichlet: k must be >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("sample_dirichlet: alpha must be > 0");
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> w(k);
  double total = 0.0;
  for (double& x : w) {
    x = gamma(rng);
    total += x;
  }
  if (total <= 0.0) {  // vanishingly unlikely underflow guard
    std::fill(w.begin(), w.end(), 1.0 / k);
    return w;
  }
  for (double& x : w) x /= total;
  return w;
}

// Largest-remainder apportionment of n units by nonnegative shares.
inline std::vector<int> apportion(const std::vector<double>& shares, int n) {
  int k = static_cast<int>(shares.size());
  std::vector<int> out(k, 0);
  std::vector<std::pair<double, int>> rema(k);
  int used = 0;
  for (int i = 0; i < k; ++i) {
    double exact = shares[i] * n;
    out[i] = static_cast<int>(std::floor(exact));
    rema[i] = {exact - out[i], i};
    used += out[i];
  }
  // stable: biggest remainder first, ties to the lower index
  std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int j = 0; used < n; ++j, ++used) ++out[rema[j % k].second];
  return out;
}

inline int categorical(const std::vector<double>& weights, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  double acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;  // u landed in rounding slack
}

namespace detail {

// Class mean: seeded unit-hypersphere direction scaled by mean_spread.
// Depends only on (seed, class), never on the distribution, so shared classes
// reference the identical class model by construction.
inline std::vector<double> class_mean(uint64_t seed, int cls, int dim, double spread) {
  Rng rng = make_rng(seed, "datagen/mean/" + std::to_string(cls));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> m(dim);
  double nn = 0.0;
  for (double& x : m) {
    x = gauss(rng);
    nn += x * x;
  }
  if (nn == 0.0) {
    m[0] = 1.0;
    nn = 1.0;
  }
  double scale = spread / std::sqrt(nn);
  for (double& x : m) x *= scale;
  return m;
}

// Contiguous blocks over 0..n_classes-1, larger blocks first; overlapping
// kinds union the first shared_classes ids into every support.
inline std::vector<std::vector<int>> build_supports(const DatagenConfig& cfg) {
  std::vector<std::vector<int>> supports(cfg.n_clusters);
  int base = cfg.n_classes / cfg.n_clusters;
  int extra = cfg.n_classes % cfg.n_clusters;
  int next = 0;
  for (int c = 0; c < cfg.n_clusters; ++c) {
    int len = base + (c < extra ? 1 : 0);
    for (int j = 0; j < len; ++j) supports[c].push_back(next++);
  }
  if (split_is_overlapping(cfg.kind)) {
    for (auto& s : supports) {
      std::set<int> merged(s.begin(), s.end());
      for (int g = 0; g < cfg.shared_classes; ++g) merged.insert(g);
      s.assign(merged.begin(), merged.end());
    }
    bool any_shared = false;
    for (size_t a = 0; a < supports.size() && !any_shared; ++a)
      for (size_t b = a + 1; b < supports.size() && !any_shared; ++b)
        for (int cls : supports[a])
          if (std::find(supports[b].begin(), supports[b].end(), cls) != supports[b].end()) {
            any_shared = true;
            break;
          }
    if (!any_shared)
      throw std::invalid_argument("datagen: overlapping kind produced no shared class");
    for (size_t a = 0; a < supports.size(); ++a)
      for (size_t b = a + 1; b < supports.size(); ++b)
        if (supports[a] == supports[b])
          throw std::invalid_argument("datagen: two cluster supports are identical");
  }
  return supports;
}

inline std::vector<int> cluster_client_counts(const DatagenConfig& cfg) {
  std::vector<double> shares;
  if (!split_is_imbalanced(cfg.kind)) {
    shares.assign(cfg.n_clusters, 1.0 / cfg.n_clusters);
  } else if (cfg.n_clusters == 3) {
    shares = {0.20, 0.47, 0.33};
  } else if (cfg.n_clusters == 1) {
    shares = {1.0};
  } else {
    Rng rng = make_rng(cfg.seed, "datagen/cluster-shares");
    shares = sample_dirichlet(cfg.alpha, cfg.n_clusters, rng);
  }
  std::vector<int> counts = apportion(shares, cfg.n_clients);
  // every distribution must serve at least one client
  for (int c = 0; c < cfg.n_clusters; ++c) {
    while (counts[c] == 0) {
      int big = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      --counts[big];
      ++counts[c];
    }
  }
  return counts;
}

}  // namespace detail

// Draw n labeled samples from one distribution. label_weights is parallel to
// dist.class_support and must sum to ~1.
inline LabeledData synth_sample(const DataGenDistribution& dist,
                                const std::vector<double>& label_weights, int n, Rng& rng) {
  if (label_weights.size() != dist.class_support.size())
    throw std::invalid_argument("synth_sample: weight/support size mismatch");
  if (dist.class_models.empty()) throw std::invalid_argument("synth_sample: no class models");
  int dim = static_cast<int>(dist.class_models.front().mean.size());
  LabeledData out;
  out.dim = dim;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> x(dim);
  for (int i = 0; i < n; ++i) {
    int pick = categorical(label_weights, rng);
    const ClassModel& cm = dist.class_models[pick];
    for (int d = 0; d < dim; ++d) x[d] = cm.mean[d] + cm.sigma * gauss(rng);
    out.push_row(x, dist.class_support[pick]);
  }
  return out;
}

inline GeneratedData build_partition(const DatagenConfig& cfg) {
  cfg.validate();
  GeneratedData out;
  PartitionPlan& plan = out.plan;
  plan.kind = cfg.kind;
  plan.alpha = cfg.alpha;
  plan.seed = cfg.seed;
  plan.n_classes = cfg.n_classes;
  plan.feature_dim = cfg.feature_dim;

  auto supports = detail::build_supports(cfg);
  for (int c = 0; c < cfg.n_clusters; ++c) {
    DataGenDistribution dist;
    dist.dist_id = c;
    dist.class_support = supports[c];
    for (int cls : supports[c])
      dist.class_models.push_back(
          {detail::class_mean(cfg.seed, cls, cfg.feature_dim, cfg.mean_spread), cfg.sigma});
    plan.distributions.push_back(std::move(dist));
  }

  std::vector<int> counts = detail::cluster_client_counts(cfg);
  plan.clients_of_cluster.resize(cfg.n_clusters);
  plan.cluster_of_client.assign(cfg.n_clients, 0);
  ClientId next = 0;
  for (int c = 0; c < cfg.n_clusters; ++c) {
    for (int j = 0; j < counts[c]; ++j) {
      plan.clients_of_cluster[c].push_back(next);
      plan.cluster_of_client[next] = c;
      ++next;
    }
  }

  for (int c = 0; c < cfg.n_clusters; ++c) {
    const auto& members = plan.clients_of_cluster[c];
    int m = static_cast<int>(members.size());
    // quality skew: per-cluster Dirichlet weights scale the base sample counts
    std::vector<double> size_w(m, 1.0 / m);
    if (split_is_imbalanced(cfg.kind) && m > 1) {
      Rng rng = make_rng(cfg.seed, "datagen/sizes/cluster/" + std::to_string(c));
      size_w = sample_dirichlet(cfg.alpha, m, rng);
    }
    for (int j = 0; j < m; ++j) {
      ClientPlanEntry e;
      e.client_id = members[j];
      e.cluster = c;
      if (split_is_imbalanced(cfg.kind)) {
        e.train_count = std::max(8, static_cast<int>(std::lround(cfg.train_per_client * m * size_w[j])));
        e.test_count = std::max(4, static_cast<int>(std::lround(cfg.test_per_client * m * size_w[j])));
        Rng rng = make_rng(cfg.seed, "datagen/labels/client/" + std::to_string(members[j]));
        e.label_weights = sample_dirichlet(cfg.alpha, static_cast<int>(supports[c].size()), rng);
      } else {
        e.train_count = cfg.train_per_client;
        e.test_count = cfg.test_per_client;
        e.label_weights.assign(supports[c].size(), 1.0 / supports[c].size());
      }
      plan.clients.push_back(std::move(e));
    }
  }
  std::sort(plan.clients.begin(), plan.clients.end(),
            [](const ClientPlanEntry& a, const ClientPlanEntry& b) { return a.client_id < b.client_id; });

  for (const auto& e : plan.clients) {
    Rng rng = make_rng(cfg.seed, "datagen/samples/client/" + std::to_string(e.client_id));
    ClientDataset cd;
    cd.id = e.client_id;
    cd.source_dist = e.cluster;
    cd.train = synth_sample(plan.distributions[e.cluster], e.label_weights, e.train_count, rng);
    cd.test = synth_sample(plan.distributions[e.cluster], e.label_weights, e.test_count, rng);
    out.clients.push_back(std::move(cd));
  }

  // orchestrator set: uniform class histogram within +/-1 over the full pool
  {
    Rng rng = make_rng(cfg.seed, "datagen/orchestrator");
    std::vector<double> shares(cfg.n_classes, 1.0 / cfg.n_classes);
    std::vector<int> per_class = apportion(shares, cfg.orchestrator_test);
    LabeledData& od = out.orchestrator.data;
    od.dim = cfg.feature_dim;
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> x(cfg.feature_dim);
    for (int cls = 0; cls < cfg.n_classes; ++cls) {
      auto mean = detail::class_mean(cfg.seed, cls, cfg.feature_dim, cfg.mean_spread);
      for (int i = 0; i < per_class[cls]; ++i) {
        for (int d = 0; d < cfg.feature_dim; ++d) x[d] = mean[d] + cfg.sigma * gauss(rng);
        od.push_row(x, cls);
      }
    }
  }
  return out;
}

}  // namespace ocfl
