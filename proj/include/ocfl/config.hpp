#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ocfl/datagen.hpp"
#include "ocfl/federation.hpp"

namespace ocfl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dataset block of the experiment config. Synthetic knobs mirror DatagenConfig;
// the idx source reads IDX image/label files and partitions them by label
// according to the same split-kind semantics.
struct DatasetConfig {
  std::string source = "synthetic";  // "synthetic" | "idx"
  int n_classes = 10;
  int feature_dim = 8;
  double sigma = 0.35;
  double mean_spread = 1.0;
  int shared_classes = 2;
  int train_per_client = 200;
  int test_per_client = 50;
  int orchestrator_test = 500;
  std::string train_images, train_labels, test_images, test_labels;  // idx only
};

struct ExperimentConfig {
  uint64_t seed = 0;
  int n_clients = 15;
  int n_clusters = 3;
  SplitKind split_kind = SplitKind::non_overlapping_balanced;
  double alpha = 1.0;
  DatasetConfig dataset;
  ModelKind model_kind = ModelKind::logreg;
  int hidden_units = 16;
  TrainConfig train;
  int rounds = 30;
  double p = 2.0;  // applies to every method unless the entry overrides it
  std::vector<MethodPolicy> methods;
  std::string output_dir = "out";

  DatagenConfig to_datagen() const {
    DatagenConfig dg;
    dg.n_clients = n_clients;
    dg.n_clusters = n_clusters;
    dg.kind = split_kind;
    dg.alpha = alpha;
    dg.n_classes = dataset.n_classes;
    dg.feature_dim = dataset.feature_dim;
    dg.sigma = dataset.sigma;
    dg.mean_spread = dataset.mean_spread;
    dg.shared_classes = dataset.shared_classes;
    dg.train_per_client = dataset.train_per_client;
    dg.test_per_client = dataset.test_per_client;
    dg.orchestrator_test = dataset.orchestrator_test;
    dg.seed = seed;
    return dg;
  }

  void validate() const {
    if (dataset.source != "synthetic" && dataset.source != "idx")
      throw ConfigError("config.dataset.source: must be \"synthetic\" or \"idx\", got \"" +
                        dataset.source + "\"");
    if (dataset.source == "idx") {
      if (dataset.train_images.empty() || dataset.train_labels.empty())
        throw ConfigError("config.dataset: idx source needs train_images and train_labels");
      if (dataset.test_images.empty() || dataset.test_labels.empty())
        throw ConfigError("config.dataset: idx source needs test_images and test_labels");
    }
    try {
      to_datagen().validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    if (!(train.learning_rate > 0.0))
      throw ConfigError("config.train.learning_rate: must be > 0");
    if (train.local_epochs < 1) throw ConfigError("config.train.local_epochs: must be >= 1");
    if (train.batch_size < 1) throw ConfigError("config.train.batch_size: must be >= 1");
    if (rounds < 0) throw ConfigError("config.rounds: must be >= 0");
    if (!(p >= 1.0)) throw ConfigError("config.p: norm order must be >= 1");
    if (model_kind == ModelKind::mlp && hidden_units < 1)
      throw ConfigError("config.hidden_units: must be >= 1 for the mlp model");
    if (methods.empty()) throw ConfigError("config.methods: need at least one method");
  }

  // Per-policy preconditions live apart from validate() so a sweep can catch a
  // single bad method and keep the others running.
  void validate_methods() const {
    for (size_t i = 0; i < methods.size(); ++i) {
      try {
        methods[i].validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError("config.methods[" + std::to_string(i) + "]: " + e.what());
      }
    }
  }
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                           const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError(path + ": unknown field '" + it.key() + "'");
}

inline void expect_object(const json& v, const std::string& path) {
  if (!v.is_object()) throw ConfigError(path + ": expected an object");
}

inline double get_number(const json& obj, const std::string& key, const std::string& path,
                         double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return v.get<double>();
}

inline int get_int(const json& obj, const std::string& key, const std::string& path,
                   int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
  return v.get<int>();
}

inline uint64_t get_u64(const json& obj, const std::string& key, const std::string& path,
                        uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !v.is_number_integer())
    throw ConfigError(path + "." + key + ": expected a non-negative integer");
  if (v.is_number_integer() && v.get<int64_t>() < 0)
    throw ConfigError(path + "." + key + ": expected a non-negative integer");
  return v.get<uint64_t>();
}

inline std::string get_string(const json& obj, const std::string& key, const std::string& path,
                              const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline DatasetConfig parse_dataset(const json& j, const std::string& path) {
  expect_object(j, path);
  reject_unknown(j,
                 {"source", "n_classes", "feature_dim", "sigma", "mean_spread", "shared_classes",
                  "train_per_client", "test_per_client", "orchestrator_test", "train_images",
                  "train_labels", "test_images", "test_labels"},
                 path);
  DatasetConfig d;
  d.source = get_string(j, "source", path, d.source);
  d.n_classes = get_int(j, "n_classes", path, d.n_classes);
  d.feature_dim = get_int(j, "feature_dim", path, d.feature_dim);
  d.sigma = get_number(j, "sigma", path, d.sigma);
  d.mean_spread = get_number(j, "mean_spread", path, d.mean_spread);
  d.shared_classes = get_int(j, "shared_classes", path, d.shared_classes);
  d.train_per_client = get_int(j, "train_per_client", path, d.train_per_client);
  d.test_per_client = get_int(j, "test_per_client", path, d.test_per_client);
  d.orchestrator_test = get_int(j, "orchestrator_test", path, d.orchestrator_test);
  d.train_images = get_string(j, "train_images", path, "");
  d.train_labels = get_string(j, "train_labels", path, "");
  d.test_images = get_string(j, "test_images", path, "");
  d.test_labels = get_string(j, "test_labels", path, "");
  return d;
}

inline TrainConfig parse_train(const json& j, const std::string& path) {
  expect_object(j, path);
  reject_unknown(j, {"local_epochs", "batch_size", "learning_rate"}, path);
  TrainConfig t;
  t.local_epochs = get_int(j, "local_epochs", path, t.local_epochs);
  t.batch_size = get_int(j, "batch_size", path, t.batch_size);
  t.learning_rate = get_number(j, "learning_rate", path, t.learning_rate);
  return t;
}

inline MethodPolicy parse_method(const json& j, const std::string& path, double default_p) {
  expect_object(j, path);
  reject_unknown(j,
                 {"method", "p", "trigger_mode", "eta_server", "clustering_round", "kmeans",
                  "meanshift", "hdbscan", "affinity", "bipartition", "agglomerative"},
                 path);
  MethodPolicy pol;
  pol.p = default_p;
  if (!j.contains("method")) throw ConfigError(path + ".method: required");
  std::string name = get_string(j, "method", path, "");
  try {
    pol.method = method_from_name(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ".method: " + e.what());
  }
  pol.p = get_number(j, "p", path, pol.p);
  std::string mode = get_string(j, "trigger_mode", path, "upturn");
  if (mode == "upturn")
    pol.trigger_mode = TriggerMode::upturn;
  else if (mode == "literal")
    pol.trigger_mode = TriggerMode::literal;
  else
    throw ConfigError(path + ".trigger_mode: must be \"upturn\" or \"literal\"");
  pol.eta_server = get_number(j, "eta_server", path, pol.eta_server);
  pol.clustering_round = get_int(j, "clustering_round", path, pol.clustering_round);
  if (j.contains("kmeans")) {
    const json& k = j.at("kmeans");
    expect_object(k, path + ".kmeans");
    reject_unknown(k, {"k", "n_init", "max_iter"}, path + ".kmeans");
    pol.kmeans.k = get_int(k, "k", path + ".kmeans", pol.kmeans.k);
    pol.kmeans.n_init = get_int(k, "n_init", path + ".kmeans", pol.kmeans.n_init);
    pol.kmeans.max_iter = get_int(k, "max_iter", path + ".kmeans", pol.kmeans.max_iter);
  }
  if (j.contains("meanshift")) {
    const json& m = j.at("meanshift");
    expect_object(m, path + ".meanshift");
    reject_unknown(m, {"bandwidth"}, path + ".meanshift");
    if (m.contains("bandwidth"))
      pol.meanshift.bandwidth = get_number(m, "bandwidth", path + ".meanshift", 0.0);
  }
  if (j.contains("hdbscan")) {
    const json& h = j.at("hdbscan");
    expect_object(h, path + ".hdbscan");
    reject_unknown(h, {"min_cluster_size_fraction"}, path + ".hdbscan");
    pol.hdbscan_fraction =
        get_number(h, "min_cluster_size_fraction", path + ".hdbscan", pol.hdbscan_fraction);
  }
  if (j.contains("affinity")) {
    const json& a = j.at("affinity");
    expect_object(a, path + ".affinity");
    reject_unknown(a, {"damping", "max_iter", "convergence_iter", "preference"},
                   path + ".affinity");
    pol.affinity.damping = get_number(a, "damping", path + ".affinity", pol.affinity.damping);
    pol.affinity.max_iter = get_int(a, "max_iter", path + ".affinity", pol.affinity.max_iter);
    pol.affinity.convergence_iter =
        get_int(a, "convergence_iter", path + ".affinity", pol.affinity.convergence_iter);
    if (a.contains("preference"))
      pol.affinity.preference = get_number(a, "preference", path + ".affinity", 0.0);
  }
  if (j.contains("bipartition")) {
    const json& b = j.at("bipartition");
    expect_object(b, path + ".bipartition");
    reject_unknown(b, {"e1", "e2", "min_rounds"}, path + ".bipartition");
    pol.e1 = get_number(b, "e1", path + ".bipartition", pol.e1);
    pol.e2 = get_number(b, "e2", path + ".bipartition", pol.e2);
    pol.min_rounds = get_int(b, "min_rounds", path + ".bipartition", pol.min_rounds);
  }
  if (j.contains("agglomerative")) {
    const json& g = j.at("agglomerative");
    expect_object(g, path + ".agglomerative");
    reject_unknown(g, {"distance_threshold", "linkage"}, path + ".agglomerative");
    pol.distance_threshold =
        get_number(g, "distance_threshold", path + ".agglomerative", pol.distance_threshold);
    std::string linkage = get_string(g, "linkage", path + ".agglomerative", "average");
    if (linkage != "average")
      throw ConfigError(path + ".agglomerative.linkage: only \"average\" is supported");
  }
  return pol;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  detail::expect_object(j, "config");
  detail::reject_unknown(j,
                         {"seed", "n_clients", "n_clusters", "split_kind", "alpha", "dataset",
                          "model", "train", "rounds", "p", "methods", "output_dir"},
                         "config");
  ExperimentConfig c;
  c.seed = detail::get_u64(j, "seed", "config", c.seed);
  c.n_clients = detail::get_int(j, "n_clients", "config", c.n_clients);
  c.n_clusters = detail::get_int(j, "n_clusters", "config", c.n_clusters);
  if (j.contains("split_kind")) {
    std::string s = detail::get_string(j, "split_kind", "config", "");
    try {
      c.split_kind = split_kind_from_name(s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config.split_kind: ") + e.what());
    }
  }
  c.alpha = detail::get_number(j, "alpha", "config", c.alpha);
  if (j.contains("dataset")) c.dataset = detail::parse_dataset(j.at("dataset"), "config.dataset");
  if (j.contains("model")) {
    const nlohmann::json& m = j.at("model");
    detail::expect_object(m, "config.model");
    detail::reject_unknown(m, {"kind", "hidden_units"}, "config.model");
    std::string kind = detail::get_string(m, "kind", "config.model", "logreg");
    if (kind == "logreg")
      c.model_kind = ModelKind::logreg;
    else if (kind == "mlp")
      c.model_kind = ModelKind::mlp;
    else
      throw ConfigError("config.model.kind: must be \"logreg\" or \"mlp\"");
    c.hidden_units = detail::get_int(m, "hidden_units", "config.model", c.hidden_units);
  }
  if (j.contains("train")) c.train = detail::parse_train(j.at("train"), "config.train");
  c.rounds = detail::get_int(j, "rounds", "config", c.rounds);
  c.p = detail::get_number(j, "p", "config", c.p);
  if (j.contains("methods")) {
    const nlohmann::json& ms = j.at("methods");
    if (!ms.is_array()) throw ConfigError("config.methods: expected an array");
    for (size_t i = 0; i < ms.size(); ++i)
      c.methods.push_back(
          detail::parse_method(ms[i], "config.methods[" + std::to_string(i) + "]", c.p));
  }
  c.output_dir = detail::get_string(j, "output_dir", "config", c.output_dir);
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  return parse_config(j);
}

}  // namespace ocfl
