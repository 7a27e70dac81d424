#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ocfl/config.hpp"
#include "ocfl/idx.hpp"
#include "ocfl/io.hpp"

namespace ocfl {

inline std::string method_dir_name(Method m) {
  std::string s = method_name(m);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

namespace detail {

// Splits an IDX image/label corpus across clients with the same plan geometry
// as the synthetic generator: identical supports, client counts, and weight
// draws, but samples come from per-class pools in file order.
inline GeneratedData partition_idx(const ExperimentConfig& cfg) {
  DatagenConfig dg = cfg.to_datagen();
  LabeledData train = load_idx(cfg.dataset.train_images, cfg.dataset.train_labels);
  LabeledData test = load_idx(cfg.dataset.test_images, cfg.dataset.test_labels);
  if (train.dim != test.dim)
    throw std::runtime_error("idx: train and test feature dims disagree");
  dg.feature_dim = train.dim;
  dg.validate();

  GeneratedData out;
  PartitionPlan& plan = out.plan;
  plan.kind = dg.kind;
  plan.alpha = dg.alpha;
  plan.seed = dg.seed;
  plan.n_classes = dg.n_classes;
  plan.feature_dim = dg.feature_dim;

  auto supports = build_supports(dg);
  for (int c = 0; c < dg.n_clusters; ++c) {
    DataGenDistribution dist;
    dist.dist_id = c;
    dist.class_support = supports[c];
    plan.distributions.push_back(std::move(dist));
  }

  std::vector<int> counts = cluster_client_counts(dg);
  plan.clients_of_cluster.resize(dg.n_clusters);
  plan.cluster_of_client.assign(dg.n_clients, 0);
  ClientId next = 0;
  for (int c = 0; c < dg.n_clusters; ++c)
    for (int j = 0; j < counts[c]; ++j) {
      plan.clients_of_cluster[c].push_back(next);
      plan.cluster_of_client[next] = c;
      ++next;
    }

  for (int c = 0; c < dg.n_clusters; ++c) {
    const auto& members = plan.clients_of_cluster[c];
    int m = static_cast<int>(members.size());
    std::vector<double> size_w(m, 1.0 / m);
    if (split_is_imbalanced(dg.kind) && m > 1) {
      Rng rng = make_rng(dg.seed, "datagen/sizes/cluster/" + std::to_string(c));
      size_w = sample_dirichlet(dg.alpha, m, rng);
    }
    for (int j = 0; j < m; ++j) {
      ClientPlanEntry e;
      e.client_id = members[j];
      e.cluster = c;
      if (split_is_imbalanced(dg.kind)) {
        e.train_count =
            std::max(8, static_cast<int>(std::lround(dg.train_per_client * m * size_w[j])));
        e.test_count =
            std::max(4, static_cast<int>(std::lround(dg.test_per_client * m * size_w[j])));
        Rng rng = make_rng(dg.seed, "datagen/labels/client/" + std::to_string(members[j]));
        e.label_weights = sample_dirichlet(dg.alpha, static_cast<int>(supports[c].size()), rng);
      } else {
        e.train_count = dg.train_per_client;
        e.test_count = dg.test_per_client;
        e.label_weights.assign(supports[c].size(), 1.0 / supports[c].size());
      }
      plan.clients.push_back(std::move(e));
    }
  }
  std::sort(plan.clients.begin(), plan.clients.end(),
            [](const ClientPlanEntry& a, const ClientPlanEntry& b) {
              return a.client_id < b.client_id;
            });

  // orchestrator set first: the head of the test corpus, any labels
  if (test.count < dg.orchestrator_test)
    throw std::runtime_error("idx: test corpus smaller than the orchestrator set");
  out.orchestrator.data.dim = test.dim;
  for (int i = 0; i < dg.orchestrator_test; ++i)
    out.orchestrator.data.push_row(test.row(i), test.labels[i]);

  // per-class pools over the remainder, consumed in file order
  auto build_pools = [&](const LabeledData& d, int skip) {
    std::vector<std::vector<int>> pools(dg.n_classes);
    for (int i = skip; i < d.count; ++i) {
      int lab = d.labels[i];
      if (lab < 0 || lab >= dg.n_classes)
        throw std::runtime_error("idx: label " + std::to_string(lab) +
                                 " outside the configured class pool");
      pools[lab].push_back(i);
    }
    return pools;
  };
  auto train_pools = build_pools(train, 0);
  auto test_pools = build_pools(test, dg.orchestrator_test);
  std::vector<size_t> train_cursor(dg.n_classes, 0), test_cursor(dg.n_classes, 0);

  auto draw = [&](const LabeledData& d, std::vector<std::vector<int>>& pools,
                  std::vector<size_t>& cursor, const std::vector<int>& support,
                  const std::vector<double>& weights, int count, Rng& rng, LabeledData& sink) {
    sink.dim = d.dim;
    for (int i = 0; i < count; ++i) {
      int cls = support[categorical(weights, rng)];
      if (cursor[cls] >= pools[cls].size())
        throw std::runtime_error("idx: class " + std::to_string(cls) +
                                 " pool exhausted; lower per-client counts");
      int row = pools[cls][cursor[cls]++];
      sink.push_row(d.row(row), d.labels[row]);
    }
  };

  for (const auto& e : plan.clients) {
    Rng rng = make_rng(dg.seed, "datagen/samples/client/" + std::to_string(e.client_id));
    ClientDataset cd;
    cd.id = e.client_id;
    cd.source_dist = e.cluster;
    const auto& support = plan.distributions[e.cluster].class_support;
    draw(train, train_pools, train_cursor, support, e.label_weights, e.train_count, rng,
         cd.train);
    draw(test, test_pools, test_cursor, support, e.label_weights, e.test_count, rng, cd.test);
    out.clients.push_back(std::move(cd));
  }
  return out;
}

}  // namespace detail

inline GeneratedData build_data(const ExperimentConfig& cfg) {
  if (cfg.dataset.source == "idx") return detail::partition_idx(cfg);
  return build_partition(cfg.to_datagen());
}

// run_experiment over prebuilt data, tracking enough state to flush partial
// telemetry when a round throws. Seeding matches run_experiment exactly.
struct DriveResult {
  std::vector<RoundRecord> records;
  TemperatureTrace trace;
  ScoreSeries scores;
  PerformanceLedger ledger;
  int trigger_round = -1;
  int final_clusters = 1;
  bool has_ledger = false;
  std::string error;
  int error_round = -1;
};

inline DriveResult drive(const GeneratedData& data, const ExperimentConfig& cfg,
                         const MethodPolicy& policy) {
  DriveResult out;
  ModelSpec spec{cfg.model_kind, data.plan.feature_dim, data.plan.n_classes, cfg.hidden_units,
                 derive_seed(cfg.seed, "model/init")};
  FederationContext ctx{data, spec, cfg.train, policy, cfg.seed, cfg.n_clusters};
  FederationState fed;
  fed.trace.p = policy.p;
  fed.trace.mode = policy.trigger_mode;
  std::vector<ClientId> everyone;
  for (int i = 0; i < cfg.n_clients; ++i) everyone.push_back(i);
  fed.clusters.clusters = {everyone};
  fed.clusters.models = {init_model(spec)};

  const std::vector<int>& truth = data.plan.truth();
  std::vector<std::vector<double>> local_f1_rounds, global_f1_rounds;
  for (int r = 0; r < cfg.rounds; ++r) {
    try {
      RoundRecord rec = run_round(fed, ctx, r);
      out.scores.per_round.push_back(score_round(r, truth, rec.assignment.labels));
      std::vector<double> lf;
      for (const auto& c : rec.clients) lf.push_back(c.local_f1);
      local_f1_rounds.push_back(lf);
      global_f1_rounds.push_back(rec.global_f1);
      out.records.push_back(std::move(rec));
    } catch (const std::exception& e) {
      out.error = e.what();
      out.error_round = r;
      break;
    }
  }
  out.trace = fed.trace;
  out.trigger_round = fed.clustering_event_round;
  out.final_clusters = static_cast<int>(fed.clusters.clusters.size());
  if (!out.records.empty() && out.error.empty()) {
    out.ledger = performance_ledger(local_f1_rounds, global_f1_rounds);
    out.has_ledger = true;
  }
  return out;
}

inline void write_run_artifacts(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                                const MethodPolicy& policy, const DriveResult& r) {
  std::filesystem::create_directories(dir);
  const std::string name = method_name(policy.method);
  write_rounds_csv(dir / "rounds.csv", r.records);
  write_clusters_csv(dir / "clusters.csv", r.records);
  write_temperature_csv(dir / "temperature.csv", r.records);
  write_clustering_csv(dir / "clustering.csv", r.scores);
  if (!r.error.empty()) {
    write_error_json(dir / "error.json", name, r.error_round, r.error);
    return;
  }
  ordered_json summary;
  summary["method"] = name;
  summary["seed"] = cfg.seed;
  summary["rounds"] = static_cast<int>(r.records.size());
  summary["n_clients"] = cfg.n_clients;
  summary["trigger_round"] = r.trigger_round;
  summary["fired"] = r.trace.fired;
  summary["n_clusters"] = r.final_clusters;
  if (!r.scores.per_round.empty()) {
    summary["mean_rand"] = r.scores.mean_rand();
    summary["mean_ami"] = r.scores.mean_ami();
    summary["mean_completeness"] = r.scores.mean_completeness();
  }
  write_json_file(dir / "summary.json", summary);
  if (r.has_ledger) write_ledger_json(dir / "ledger.json", name, r.ledger);
}

inline int cmd_partition(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  cfg.validate_methods();
  write_partition_artifacts(build_data(cfg), out_dir);
  return 0;
}

inline int cmd_run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  cfg.validate_methods();
  GeneratedData data = build_data(cfg);
  bool any_failed = false;
  for (const auto& policy : cfg.methods) {
    DriveResult r = drive(data, cfg, policy);
    write_run_artifacts(out_dir / method_dir_name(policy.method), cfg, policy, r);
    if (!r.error.empty()) {
      std::cerr << method_name(policy.method) << ": round " << r.error_round << ": " << r.error
                << "\n";
      any_failed = true;
    }
  }
  return any_failed ? 3 : 0;
}

// A sweep row counts as failed when the run errored or when a method that is
// supposed to re-cluster never produced a partition event.
inline bool sweep_row_failed(const MethodPolicy& policy, const DriveResult& r) {
  if (!r.error.empty() || !r.has_ledger) return true;
  if (is_ocfl(policy.method) && r.trigger_round < 0) return true;
  if (policy.method == Method::SCL && r.trigger_round < 0) return true;
  if (policy.method == Method::BCL) {
    for (const auto& rec : r.records)
      if (!rec.error.empty()) return true;
  }
  return false;
}

inline int cmd_sweep(const ExperimentConfig& cfg, const std::vector<std::string>& method_filter,
                     const std::filesystem::path& out_dir) {
  cfg.validate();
  // every method sees the same partition: one build, one datagen seed
  GeneratedData data = build_data(cfg);

  std::vector<MethodPolicy> policies;
  if (method_filter.empty()) {
    policies = cfg.methods;
  } else {
    for (const std::string& name : method_filter) {
      Method m;
      try {
        m = method_from_name(name);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("sweep methods: ") + e.what());
      }
      auto it = std::find_if(cfg.methods.begin(), cfg.methods.end(),
                             [&](const MethodPolicy& p) { return p.method == m; });
      if (it != cfg.methods.end()) {
        policies.push_back(*it);
      } else {
        MethodPolicy p;
        p.method = m;
        p.p = cfg.p;
        policies.push_back(p);
      }
    }
  }
  if (policies.empty()) throw ConfigError("sweep: no methods to run");

  std::vector<ComparisonRow> rows;
  for (const auto& policy : policies) {
    ComparisonRow row;
    row.method = method_name(policy.method);
    try {
      policy.validate();
      DriveResult r = drive(data, cfg, policy);
      write_run_artifacts(out_dir / method_dir_name(policy.method), cfg, policy, r);
      if (sweep_row_failed(policy, r)) {
        row.failed = true;
      } else {
        row.mean_rand = r.scores.mean_rand();
        row.mean_ami = r.scores.mean_ami();
        row.mean_com = r.scores.mean_completeness();
        row.pf1 = r.ledger.pf1;
        row.gf1 = r.ledger.gf1;
        row.dist = r.ledger.dist;
      }
    } catch (const std::exception& e) {
      std::cerr << row.method << ": " << e.what() << "\n";
      row.failed = true;
    }
    rows.push_back(row);
  }
  write_comparison_csv(out_dir / "comparison.csv", rows);
  return 0;
}

inline int cmd_plotdata(const std::filesystem::path& run_dir,
                        const std::filesystem::path& out_dir) {
  const std::vector<std::string> expected = {"rounds.csv", "clusters.csv", "temperature.csv",
                                             "clustering.csv", "ledger.json"};
  std::vector<std::string> missing;
  for (const auto& name : expected)
    if (!std::filesystem::exists(run_dir / name)) missing.push_back(name);
  if (!missing.empty()) {
    std::string msg = "plotdata: missing in " + run_dir.string() + ":";
    for (const auto& m : missing) msg += " " + m;
    throw IoError(msg);
  }
  CsvTable rounds = read_csv(run_dir / "rounds.csv");
  CsvTable clusters = read_csv(run_dir / "clusters.csv");
  CsvTable temperature = read_csv(run_dir / "temperature.csv");
  CsvTable clustering = read_csv(run_dir / "clustering.csv");
  ordered_json ledger = read_json_file(run_dir / "ledger.json");
  write_fig_temperature(out_dir / "fig_temperature.csv", temperature);
  write_fig_scores(out_dir / "fig_scores.csv", clustering, rounds, clusters);
  write_fig_ledger(out_dir / "fig_ledger.csv", ledger);
  return 0;
}

}  // namespace ocfl
