#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocfl/affinity.hpp"
#include "ocfl/agglomerative.hpp"
#include "ocfl/cluster_types.hpp"
#include "ocfl/datagen.hpp"
#include "ocfl/divergence.hpp"
#include "ocfl/hdbscan.hpp"
#include "ocfl/kmeans.hpp"
#include "ocfl/meanshift.hpp"
#include "ocfl/metrics.hpp"
#include "ocfl/model.hpp"
#include "ocfl/rng.hpp"
#include "ocfl/training.hpp"

namespace ocfl {

enum class Method { BNC, SCL, BCL, OCFL_KM, OCFL_AFF, OCFL_MS, OCFL_HDB };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::BNC: return "BNC";
    case Method::SCL: return "SCL";
    case Method::BCL: return "BCL";
    case Method::OCFL_KM: return "OCFL-KM";
    case Method::OCFL_AFF: return "OCFL-AFF";
    case Method::OCFL_MS: return "OCFL-MS";
    case Method::OCFL_HDB: return "OCFL-HDB";
  }
  throw std::logic_error("method_name: bad enum");
}

inline Method method_from_name(const std::string& s) {
  for (Method m : {Method::BNC, Method::SCL, Method::BCL, Method::OCFL_KM, Method::OCFL_AFF,
                   Method::OCFL_MS, Method::OCFL_HDB})
    if (s == method_name(m)) return m;
  throw std::invalid_argument("unknown method: " + s);
}

inline bool is_ocfl(Method m) {
  return m == Method::OCFL_KM || m == Method::OCFL_AFF || m == Method::OCFL_MS ||
         m == Method::OCFL_HDB;
}

struct MethodPolicy {
  Method method = Method::BNC;
  double p = 2.0;  // temperature norm order
  TriggerMode trigger_mode = TriggerMode::upturn;
  double eta_server = 1.0;
  // engine knobs
  KMeansConfig kmeans;  // kmeans.k == 0 takes the experiment's cluster count
  MeanShiftConfig meanshift;
  AffinityConfig affinity;
  double hdbscan_fraction = 0.2;
  // SCL gates
  double e1 = 0.35;
  double e2 = 0.35;
  int min_rounds = 1;
  // BCL schedule
  int clustering_round = 5;
  double distance_threshold = 0.2;

  void validate() const {
    if (!(p >= 1.0)) throw std::invalid_argument("policy.p must be >= 1");
    if (!(eta_server > 0.0)) throw std::invalid_argument("policy.eta_server must be > 0");
    if (!(hdbscan_fraction > 0.0 && hdbscan_fraction <= 1.0))
      throw std::invalid_argument("policy.hdbscan_fraction must be in (0, 1]");
    if (method == Method::SCL) {
      if (!(e1 > 0.0) || !(e2 > 0.0))
        throw std::invalid_argument("policy.e1 and policy.e2 must be > 0");
      if (min_rounds < 0) throw std::invalid_argument("policy.min_rounds must be >= 0");
    }
    if (method == Method::BCL) {
      if (clustering_round < 1)
        throw std::invalid_argument("policy.clustering_round must be >= 1");
      if (!(distance_threshold > 0.0))
        throw std::invalid_argument("policy.distance_threshold must be > 0");
    }
  }
};

struct ClusterState {
  std::vector<std::vector<ClientId>> clusters;
  std::vector<ParameterVector> models;  // parallel to clusters

  void validate(int n_clients) const {
    if (clusters.size() != models.size())
      throw std::logic_error("ClusterState: clusters and models disagree");
    std::vector<ClientId> all;
    for (const auto& c : clusters) {
      if (c.empty()) throw std::logic_error("ClusterState: empty cluster");
      all.insert(all.end(), c.begin(), c.end());
    }
    std::sort(all.begin(), all.end());
    if (static_cast<int>(all.size()) != n_clients)
      throw std::logic_error("ClusterState: clusters do not cover the population");
    for (size_t i = 1; i < all.size(); ++i)
      if (all[i] == all[i - 1]) throw std::logic_error("ClusterState: duplicated client");
  }
};

struct ClientRoundStat {
  ClientId client_id = 0;
  int cluster = 0;
  double train_loss = 0.0;
  double local_f1 = 0.0;
};

struct RoundRecord {
  int round = 0;
  std::optional<double> temperature;
  bool fired = false;
  std::vector<ClientRoundStat> clients;
  std::vector<int> cluster_sizes;
  ClusterAssignment assignment;  // snapshot after any clustering action
  std::vector<double> global_f1;  // per cluster model, orchestrator test set
  std::string error;
};

struct FederationState {
  ClusterState clusters;
  TemperatureTrace trace;
  bool bcl_done = false;
  int clustering_event_round = -1;  // first round the partition changed
};

namespace detail {

inline ClusterAssignment snapshot_assignment(const ClusterState& state, const std::string& tag) {
  std::vector<ClientId> ids;
  for (const auto& c : state.clusters) ids.insert(ids.end(), c.begin(), c.end());
  std::sort(ids.begin(), ids.end());
  ClusterAssignment a;
  a.order = ids;
  a.labels.resize(ids.size());
  for (size_t j = 0; j < state.clusters.size(); ++j)
    for (ClientId id : state.clusters[j]) {
      size_t row = std::lower_bound(ids.begin(), ids.end(), id) - ids.begin();
      a.labels[row] = static_cast<int>(j);
    }
  a.n_clusters = canonicalize_labels(a.labels);
  a.method = tag;
  return a;
}

inline ClusterAssignment invoke_engine(const MethodPolicy& policy, const DivergenceMatrix& gamma,
                                       int round, uint64_t root_seed, int k_hint) {
  uint64_t seed = derive_seed(root_seed, std::string("engine/") + method_name(policy.method) +
                                             "/r" + std::to_string(round));
  switch (policy.method) {
    case Method::OCFL_KM: {
      int k = policy.kmeans.k > 0 ? policy.kmeans.k : k_hint;
      return kmeans_on_gamma(gamma, k, seed, policy.kmeans);
    }
    case Method::OCFL_AFF:
      return affinity_propagation(gamma, policy.affinity, seed);
    case Method::OCFL_MS:
      return mean_shift(gamma, policy.meanshift);
    case Method::OCFL_HDB:
      return hdbscan(gamma, default_min_cluster_size(gamma.order, policy.hdbscan_fraction));
    default:
      throw std::logic_error("invoke_engine: not an OCFL method");
  }
}

// replace the cluster set; every new cohort inherits its parent's model
inline void apply_partition(ClusterState& state, const ClusterAssignment& a,
                            const std::vector<ParameterVector>& parent_of_client) {
  std::vector<std::vector<ClientId>> groups = a.groups();
  std::vector<ParameterVector> models;
  for (const auto& g : groups) {
    // all members shared one pre-split cohort model; take the first member's
    models.push_back(parent_of_client[g.front()]);
  }
  state.clusters = std::move(groups);
  state.models = std::move(models);
}

}  // namespace detail

// One split pass of the Sattler-style gate: a cohort splits when its mean
// delta has collapsed while some member still moves.
inline bool scl_controller(ClusterState& state, const std::vector<DeltaVector>& deltas, int round,
                           double e1, double e2, int min_rounds) {
  if (round < min_rounds) return false;
  auto delta_of = [&](ClientId id) -> const DeltaVector& {
    for (const auto& d : deltas)
      if (d.client_id == id) return d;
    throw std::logic_error("scl_controller: missing delta");
  };
  auto norm = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };

  bool changed = false;
  std::vector<std::vector<ClientId>> next_clusters;
  std::vector<ParameterVector> next_models;
  for (size_t j = 0; j < state.clusters.size(); ++j) {
    const auto& cohort = state.clusters[j];
    bool split = false;
    if (cohort.size() >= 2) {
      std::vector<double> mean(delta_of(cohort.front()).delta.values.size(), 0.0);
      double max_norm = 0.0;
      for (ClientId id : cohort) {
        const auto& d = delta_of(id).delta.values;
        for (size_t t = 0; t < mean.size(); ++t) mean[t] += d[t];
        max_norm = std::max(max_norm, norm(d));
      }
      for (double& x : mean) x /= static_cast<double>(cohort.size());
      if (norm(mean) < e1 && max_norm > e2) {
        std::vector<DeltaVector> cohort_deltas;
        for (ClientId id : cohort) cohort_deltas.push_back(delta_of(id));
        try {
          DivergenceMatrix gamma = build_divergence_matrix(cohort_deltas);
          auto [a, b] = cosine_bipartition(gamma);
          next_clusters.push_back(a);
          next_models.push_back(state.models[j]);
          next_clusters.push_back(b);
          next_models.push_back(state.models[j]);
          split = true;
          changed = true;
        } catch (const std::invalid_argument&) {
          // degenerate cohort deltas: leave the cohort alone this round
        }
      }
    }
    if (!split) {
      next_clusters.push_back(cohort);
      next_models.push_back(state.models[j]);
    }
  }
  state.clusters = std::move(next_clusters);
  state.models = std::move(next_models);
  return changed;
}

// Briggs-style one-time agglomerative split at a fixed round.
inline bool bcl_controller(ClusterState& state, const DivergenceMatrix& gamma, int round,
                           int clustering_round, double distance_threshold) {
  if (round != clustering_round) return false;
  ClusterAssignment a = agglomerative_average(gamma, distance_threshold);
  // BCL clusters exactly once, from the single founding cohort
  std::vector<ParameterVector> inherit(a.groups().size(), state.models.front());
  state.clusters = a.groups();
  state.models = std::move(inherit);
  return a.n_clusters > 1;
}

struct ExperimentSetup {
  DatagenConfig datagen;
  ModelKind model_kind = ModelKind::logreg;
  int hidden_units = 16;
  TrainConfig train;
  int rounds = 30;
  MethodPolicy policy;
  uint64_t seed = 0;
};

struct ExperimentResult {
  PartitionPlan plan;
  ModelSpec spec;
  std::vector<RoundRecord> records;
  TemperatureTrace trace;
  ScoreSeries scores;
  PerformanceLedger ledger;
  int trigger_round = -1;  // first clustering event, -1 when none happened
  int final_clusters = 1;
};

struct FederationContext {
  const GeneratedData& data;
  ModelSpec spec;
  TrainConfig train;
  MethodPolicy policy;
  uint64_t root_seed = 0;
  int k_hint = 3;
};

// One synchronous federated round: broadcast, local training, optional
// clustering action, then per-cohort aggregation and evaluation.
inline RoundRecord run_round(FederationState& fed, const FederationContext& ctx, int round) {
  const auto& clients = ctx.data.clients;
  const int n = static_cast<int>(clients.size());
  fed.clusters.validate(n);

  RoundRecord rec;
  rec.round = round;

  // local updates, gathered in client id order
  std::vector<DeltaVector> deltas;
  std::vector<LocalReport> reports(n);
  for (size_t j = 0; j < fed.clusters.clusters.size(); ++j) {
    for (ClientId id : fed.clusters.clusters[j]) {
      const ClientDataset& ds = clients.at(id);
      TrainConfig cfg = ctx.train;
      cfg.shuffle_seed = derive_seed(
          ctx.root_seed, "client/" + std::to_string(id) + "/round/" + std::to_string(round));
      LocalReport rep = local_update(fed.clusters.models[j], ctx.spec, ds, cfg, round);
      reports[id] = rep;
      ClientRoundStat stat;
      stat.client_id = id;
      stat.cluster = static_cast<int>(j);
      stat.train_loss = rep.train_loss;
      stat.local_f1 = rep.local_f1;
      rec.clients.push_back(stat);
    }
  }
  std::sort(rec.clients.begin(), rec.clients.end(),
            [](const ClientRoundStat& a, const ClientRoundStat& b) {
              return a.client_id < b.client_id;
            });
  for (int id = 0; id < n; ++id) deltas.push_back(reports[id].delta);

  // pooled divergence telemetry for every method
  std::optional<DivergenceMatrix> gamma;
  try {
    gamma = build_divergence_matrix(deltas);
    rec.temperature = temperature(*gamma, ctx.policy.p);
  } catch (const std::invalid_argument&) {
    gamma.reset();
  }

  // clustering actions happen between collection and aggregation
  if (is_ocfl(ctx.policy.method)) {
    if (!fed.trace.fired && rec.temperature.has_value()) {
      update_trace(fed.trace, round, *rec.temperature);
      if (fed.trace.fired) {
        try {
          ClusterAssignment a =
              detail::invoke_engine(ctx.policy, *gamma, round, ctx.root_seed, ctx.k_hint);
          std::vector<ParameterVector> parent_of_client(n);
          for (size_t j = 0; j < fed.clusters.clusters.size(); ++j)
            for (ClientId id : fed.clusters.clusters[j])
              parent_of_client[id] = fed.clusters.models[j];
          detail::apply_partition(fed.clusters, a, parent_of_client);
          fed.clustering_event_round = round;
        } catch (const std::exception& e) {
          rec.error = std::string("engine failure: ") + e.what();
        }
      }
    }
    rec.fired = fed.trace.fired;
  } else if (ctx.policy.method == Method::SCL) {
    if (scl_controller(fed.clusters, deltas, round, ctx.policy.e1, ctx.policy.e2,
                       ctx.policy.min_rounds) &&
        fed.clustering_event_round < 0)
      fed.clustering_event_round = round;
  } else if (ctx.policy.method == Method::BCL) {
    if (!fed.bcl_done && round == ctx.policy.clustering_round) {
      fed.bcl_done = true;
      if (gamma.has_value()) {
        bcl_controller(fed.clusters, *gamma, round, ctx.policy.clustering_round,
                       ctx.policy.distance_threshold);
        if (fed.clusters.clusters.size() > 1 && fed.clustering_event_round < 0)
          fed.clustering_event_round = round;
      } else {
        rec.error = "clustering skipped: divergence matrix unavailable";
      }
    }
  }

  // per-cohort aggregation, sequential in client id order
  for (size_t j = 0; j < fed.clusters.clusters.size(); ++j) {
    std::vector<ClientId> members = fed.clusters.clusters[j];
    std::sort(members.begin(), members.end());
    std::vector<double> mean(fed.clusters.models[j].values.size(), 0.0);
    for (ClientId id : members) {
      const auto& d = deltas[id].delta.values;
      for (size_t t = 0; t < mean.size(); ++t) mean[t] += d[t];
    }
    for (double& x : mean) x /= static_cast<double>(members.size());
    auto& theta = fed.clusters.models[j].values;
    for (size_t t = 0; t < theta.size(); ++t) theta[t] += ctx.policy.eta_server * mean[t];
  }

  // evaluation and snapshot
  rec.assignment = detail::snapshot_assignment(fed.clusters, method_name(ctx.policy.method));
  for (const auto& c : fed.clusters.clusters) rec.cluster_sizes.push_back(int(c.size()));
  for (const auto& model : fed.clusters.models) {
    std::vector<int> pred = predict(model, ctx.spec, ctx.data.orchestrator.data);
    rec.global_f1.push_back(macro_f1(pred, ctx.data.orchestrator.data.labels,
                                     ctx.spec.n_classes));
  }
  // re-index each client's cluster to the post-action labeling
  for (auto& stat : rec.clients) stat.cluster = rec.assignment.label_of(stat.client_id);
  return rec;
}

inline ExperimentResult run_experiment(const ExperimentSetup& setup) {
  DatagenConfig dg = setup.datagen;
  dg.seed = setup.seed;
  dg.validate();
  setup.policy.validate();
  if (setup.rounds < 0) throw std::invalid_argument("rounds must be >= 0");
  if (setup.train.local_epochs < 1 || setup.train.batch_size < 1)
    throw std::invalid_argument("train config invalid");

  GeneratedData data = build_partition(dg);

  ExperimentResult out;
  out.plan = data.plan;
  out.spec = ModelSpec{setup.model_kind, dg.feature_dim, dg.n_classes, setup.hidden_units,
                       derive_seed(setup.seed, "model/init")};

  FederationContext ctx{data, out.spec, setup.train, setup.policy, setup.seed, dg.n_clusters};
  FederationState fed;
  fed.trace.p = setup.policy.p;
  fed.trace.mode = setup.policy.trigger_mode;
  std::vector<ClientId> everyone;
  for (int i = 0; i < dg.n_clients; ++i) everyone.push_back(i);
  fed.clusters.clusters = {everyone};
  fed.clusters.models = {init_model(out.spec)};

  std::vector<int> truth = data.plan.truth();
  std::vector<std::vector<double>> local_f1_rounds, global_f1_rounds;
  for (int r = 0; r < setup.rounds; ++r) {
    RoundRecord rec = run_round(fed, ctx, r);
    out.scores.per_round.push_back(score_round(r, truth, rec.assignment.labels));
    std::vector<double> lf;
    for (const auto& c : rec.clients) lf.push_back(c.local_f1);
    local_f1_rounds.push_back(lf);
    global_f1_rounds.push_back(rec.global_f1);
    out.records.push_back(std::move(rec));
  }
  out.trace = fed.trace;
  out.trigger_round = fed.clustering_event_round;
  out.final_clusters = static_cast<int>(fed.clusters.clusters.size());
  if (!out.records.empty()) out.ledger = performance_ledger(local_f1_rounds, global_f1_rounds);
  return out;
}

}  // namespace ocfl
