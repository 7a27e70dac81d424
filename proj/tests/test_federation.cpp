#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ocfl/federation.hpp"

using namespace ocfl;

namespace {

DatagenConfig small_datagen(int n_clients, int n_clusters) {
  DatagenConfig dg;
  dg.n_clients = n_clients;
  dg.n_clusters = n_clusters;
  dg.train_per_client = 60;
  dg.test_per_client = 20;
  dg.orchestrator_test = 100;
  return dg;
}

ExperimentSetup small_setup(Method m, int rounds, uint64_t seed) {
  ExperimentSetup s;
  s.datagen = small_datagen(15, 3);
  s.rounds = rounds;
  s.seed = seed;
  s.policy.method = m;
  return s;
}

ParameterVector flat(std::vector<double> v) {
  ParameterVector p;
  p.values = std::move(v);
  return p;
}

DeltaVector dvec(ClientId id, int round, std::vector<double> v) {
  DeltaVector d;
  d.client_id = id;
  d.round = round;
  d.delta = flat(std::move(v));
  return d;
}

bool same_doubles(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("one aggregated round reproduces the hand-rolled client average exactly") {
  DatagenConfig dg = small_datagen(6, 2);
  dg.seed = 91u;
  GeneratedData data = build_partition(dg);
  ModelSpec spec{ModelKind::logreg, dg.feature_dim, dg.n_classes, 0, derive_seed(91u, "model/init")};
  TrainConfig train;

  MethodPolicy policy;  // BNC
  FederationContext ctx{data, spec, train, policy, 91u, dg.n_clusters};
  FederationState fed;
  fed.clusters.clusters = {{0, 1, 2, 3, 4, 5}};
  fed.clusters.models = {init_model(spec)};

  ParameterVector manual = init_model(spec);
  for (int r = 0; r < 2; ++r) {
    RoundRecord rec = run_round(fed, ctx, r);
    std::vector<double> mean(manual.values.size(), 0.0);
    for (ClientId id = 0; id < 6; ++id) {
      TrainConfig cfg = train;
      cfg.shuffle_seed =
          derive_seed(91u, "client/" + std::to_string(id) + "/round/" + std::to_string(r));
      LocalReport rep = local_update(manual, spec, data.clients[id], cfg, r);
      for (size_t t = 0; t < mean.size(); ++t) mean[t] += rep.delta.delta.values[t];
      REQUIRE(rep.train_loss == rec.clients[id].train_loss);
      REQUIRE(rep.local_f1 == rec.clients[id].local_f1);
    }
    for (size_t t = 0; t < mean.size(); ++t) manual.values[t] += mean[t] / 6.0;
    REQUIRE(same_doubles(manual.values, fed.clusters.models[0].values));
    REQUIRE(rec.assignment.n_clusters == 1);
    REQUIRE(rec.temperature.has_value());
  }
}

TEST_CASE("server learning rate scales the aggregated step") {
  DatagenConfig dg = small_datagen(4, 2);
  dg.seed = 17u;
  GeneratedData data = build_partition(dg);
  ModelSpec spec{ModelKind::logreg, dg.feature_dim, dg.n_classes, 0, derive_seed(17u, "model/init")};
  TrainConfig train;

  MethodPolicy fast;
  fast.eta_server = 2.0;
  FederationContext ctx_fast{data, spec, train, fast, 17u, dg.n_clusters};
  MethodPolicy unit;
  FederationContext ctx_unit{data, spec, train, unit, 17u, dg.n_clusters};

  FederationState a, b;
  a.clusters.clusters = {{0, 1, 2, 3}};
  a.clusters.models = {init_model(spec)};
  b.clusters = a.clusters;

  ParameterVector start = a.clusters.models[0];
  run_round(a, ctx_fast, 0);
  run_round(b, ctx_unit, 0);
  for (size_t t = 0; t < start.values.size(); ++t) {
    double step_fast = a.clusters.models[0].values[t] - start.values[t];
    double step_unit = b.clusters.models[0].values[t] - start.values[t];
    REQUIRE(step_fast == Catch::Approx(2.0 * step_unit).margin(1e-15));
  }
}

TEST_CASE("the baseline keeps one cohort and scores zero against a real split") {
  ExperimentResult res = run_experiment(small_setup(Method::BNC, 4, 5u));
  REQUIRE(res.records.size() == 4);
  REQUIRE(res.trigger_round == -1);
  REQUIRE(res.final_clusters == 1);
  for (const auto& rec : res.records) {
    REQUIRE(rec.assignment.n_clusters == 1);
    REQUIRE(rec.cluster_sizes == std::vector<int>{15});
    REQUIRE_FALSE(rec.fired);
    REQUIRE(rec.temperature.has_value());
    REQUIRE(*rec.temperature >= 0.0);
    REQUIRE(*rec.temperature <= 1.0);
    REQUIRE(rec.global_f1.size() == 1);
    REQUIRE(rec.error.empty());
  }
  for (const auto& s : res.scores.per_round) {
    REQUIRE(s.rand == 0.0);
    REQUIRE(s.completeness == 1.0);
  }
}

TEST_CASE("a forced trigger invokes the engine once and the partition sticks") {
  ExperimentSetup s = small_setup(Method::OCFL_KM, 5, 23u);
  s.policy.trigger_mode = TriggerMode::literal;
  ExperimentResult res = run_experiment(s);

  REQUIRE(res.trigger_round == 0);
  REQUIRE(res.trace.fired);
  REQUIRE(res.trace.trigger_round.has_value());
  REQUIRE(*res.trace.trigger_round == 0);
  REQUIRE(res.final_clusters == 3);  // k falls back to the generator's cluster count
  for (const auto& rec : res.records) {
    REQUIRE(rec.fired);
    REQUIRE(rec.assignment.n_clusters == 3);
    REQUIRE(rec.assignment.labels == res.records[0].assignment.labels);
    REQUIRE(rec.global_f1.size() == 3);
  }
}

TEST_CASE("an engine failure aborts the action and is never retried") {
  ExperimentSetup s = small_setup(Method::OCFL_KM, 4, 29u);
  s.policy.trigger_mode = TriggerMode::literal;
  s.policy.kmeans.k = 25;  // more centers than clients
  ExperimentResult res = run_experiment(s);

  REQUIRE(res.records[0].error.find("engine failure") == 0);
  REQUIRE(res.records[0].fired);
  REQUIRE(res.records[0].assignment.n_clusters == 1);
  REQUIRE(res.trigger_round == -1);  // no clustering event ever happened
  REQUIRE(res.trace.fired);           // though the trigger itself did fire
  REQUIRE(res.final_clusters == 1);
  for (size_t r = 1; r < res.records.size(); ++r) {
    REQUIRE(res.records[r].error.empty());
    REQUIRE(res.records[r].assignment.n_clusters == 1);
    REQUIRE(res.records[r].fired);
  }
}

TEST_CASE("the delta-collapse gate splits an antipodal cohort on schedule") {
  std::vector<DeltaVector> deltas;
  for (ClientId id : {0, 2, 4}) deltas.push_back(dvec(id, 1, {1.0, 0.0, 0.0}));
  for (ClientId id : {1, 3, 5}) deltas.push_back(dvec(id, 1, {-1.0, 0.0, 0.0}));

  ClusterState state;
  state.clusters = {{0, 1, 2, 3, 4, 5}};
  state.models = {flat({7.0, 7.0, 7.0})};

  SECTION("too early: nothing moves") {
    REQUIRE_FALSE(scl_controller(state, deltas, 0, 0.35, 0.35, 1));
    REQUIRE(state.clusters.size() == 1);
  }

  SECTION("on time: exact halves, inherited models") {
    REQUIRE(scl_controller(state, deltas, 1, 0.35, 0.35, 1));
    REQUIRE(state.clusters.size() == 2);
    REQUIRE(state.clusters[0] == std::vector<ClientId>{0, 2, 4});
    REQUIRE(state.clusters[1] == std::vector<ClientId>{1, 3, 5});
    REQUIRE(same_doubles(state.models[0].values, {7.0, 7.0, 7.0}));
    REQUIRE(same_doubles(state.models[1].values, {7.0, 7.0, 7.0}));

    // children are now internally aligned, so they stay put
    REQUIRE_FALSE(scl_controller(state, deltas, 2, 0.35, 0.35, 1));
    REQUIRE(state.clusters.size() == 2);
  }
}

TEST_CASE("the delta-collapse gate demands real residual motion") {
  std::vector<DeltaVector> deltas;
  for (ClientId id : {0, 2}) deltas.push_back(dvec(id, 3, {0.2, 0.0}));
  for (ClientId id : {1, 3}) deltas.push_back(dvec(id, 3, {-0.2, 0.0}));
  ClusterState state;
  state.clusters = {{0, 1, 2, 3}};
  state.models = {flat({0.0, 0.0})};
  // mean norm 0 < e1 but the strongest member moves only 0.2 <= e2
  REQUIRE_FALSE(scl_controller(state, deltas, 3, 0.35, 0.35, 1));
  REQUIRE(state.clusters.size() == 1);

  // aligned cohort: mean norm equals member norm, first gate blocks
  std::vector<DeltaVector> aligned;
  for (ClientId id : {0, 1, 2, 3}) aligned.push_back(dvec(id, 4, {1.0, 0.0}));
  REQUIRE_FALSE(scl_controller(state, aligned, 4, 0.35, 0.35, 1));
  REQUIRE(state.clusters.size() == 1);
}

TEST_CASE("the delta-collapse gate recurses into children on later rounds") {
  ClusterState state;
  state.clusters = {{0, 1, 2, 3, 4, 5, 6, 7}};
  state.models = {flat({0.0, 0.0})};

  std::vector<DeltaVector> first;
  for (ClientId id : {0, 1, 2, 3}) first.push_back(dvec(id, 1, {1.0, 0.0}));
  for (ClientId id : {4, 5, 6, 7}) first.push_back(dvec(id, 1, {-1.0, 0.0}));
  REQUIRE(scl_controller(state, first, 1, 0.35, 0.35, 1));
  REQUIRE(state.clusters.size() == 2);

  std::vector<DeltaVector> second;
  for (ClientId id : {0, 1}) second.push_back(dvec(id, 2, {0.0, 1.0}));
  for (ClientId id : {2, 3}) second.push_back(dvec(id, 2, {0.0, -1.0}));
  for (ClientId id : {4, 5, 6, 7}) second.push_back(dvec(id, 2, {1.0, 0.0}));
  REQUIRE(scl_controller(state, second, 2, 0.35, 0.35, 1));
  REQUIRE(state.clusters.size() == 3);
  REQUIRE(state.clusters[0] == std::vector<ClientId>{0, 1});
  REQUIRE(state.clusters[1] == std::vector<ClientId>{2, 3});
  REQUIRE(state.clusters[2] == std::vector<ClientId>{4, 5, 6, 7});
}

TEST_CASE("the scheduled split happens exactly at its appointed round") {
  auto block = [](int i, int j) {
    // clients 0-4 vs 5-9: within 0.1, across 1.8
    bool same = (i < 5) == (j < 5);
    return i == j ? 0.0 : (same ? 0.1 : 1.8);
  };
  std::vector<DeltaVector> unused;
  DivergenceMatrix gamma;
  gamma.order = 10;
  for (int i = 0; i < 10; ++i) gamma.client_index.push_back(i);
  gamma.entries.resize(100);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) gamma.entries[i * 10 + j] = block(i, j);

  ClusterState state;
  std::vector<ClientId> all;
  for (int i = 0; i < 10; ++i) all.push_back(i);
  state.clusters = {all};
  state.models = {flat({3.0})};

  SECTION("wrong round: untouched") {
    REQUIRE_FALSE(bcl_controller(state, gamma, 4, 5, 0.3));
    REQUIRE(state.clusters.size() == 1);
  }

  SECTION("appointed round: blocks recovered, founding model inherited") {
    REQUIRE(bcl_controller(state, gamma, 5, 5, 0.3));
    REQUIRE(state.clusters.size() == 2);
    REQUIRE(state.clusters[0] == std::vector<ClientId>{0, 1, 2, 3, 4});
    REQUIRE(state.clusters[1] == std::vector<ClientId>{5, 6, 7, 8, 9});
    REQUIRE(same_doubles(state.models[0].values, {3.0}));
    REQUIRE(same_doubles(state.models[1].values, {3.0}));
  }

  SECTION("threshold above the diameter keeps one cohort") {
    REQUIRE_FALSE(bcl_controller(state, gamma, 5, 5, 2.01));
    REQUIRE(state.clusters.size() == 1);
  }
}

TEST_CASE("a swallowing threshold leaves the scheduled method as the baseline") {
  ExperimentSetup s = small_setup(Method::BCL, 4, 41u);
  s.policy.clustering_round = 2;
  s.policy.distance_threshold = 2.01;
  ExperimentResult res = run_experiment(s);
  REQUIRE(res.trigger_round == -1);
  REQUIRE(res.final_clusters == 1);
  for (const auto& rec : res.records) REQUIRE(rec.assignment.n_clusters == 1);
}

TEST_CASE("a foreign cohort's data cannot touch this cohort's trajectory") {
  DatagenConfig dg = small_datagen(8, 2);
  dg.seed = 77u;
  GeneratedData clean = build_partition(dg);
  GeneratedData dirty = clean;
  for (int& y : dirty.clients[6].train.labels) y = (y + 1) % dg.n_classes;

  ModelSpec spec{ModelKind::logreg, dg.feature_dim, dg.n_classes, 0, derive_seed(77u, "model/init")};
  TrainConfig train;
  MethodPolicy policy;  // baseline: no controller interferes with a manual split

  FederationState fa, fb;
  fa.clusters.clusters = {{0, 1, 2, 3}, {4, 5, 6, 7}};
  fa.clusters.models = {init_model(spec), init_model(spec)};
  fb.clusters = fa.clusters;

  FederationContext ca{clean, spec, train, policy, 77u, 2};
  FederationContext cb{dirty, spec, train, policy, 77u, 2};

  bool second_cohort_diverged = false;
  for (int r = 0; r < 3; ++r) {
    run_round(fa, ca, r);
    run_round(fb, cb, r);
    REQUIRE(same_doubles(fa.clusters.models[0].values, fb.clusters.models[0].values));
    if (!same_doubles(fa.clusters.models[1].values, fb.clusters.models[1].values))
      second_cohort_diverged = true;
  }
  REQUIRE(second_cohort_diverged);
}

TEST_CASE("identical setups reproduce identical telemetry") {
  ExperimentSetup s = small_setup(Method::OCFL_KM, 4, 101u);
  s.policy.trigger_mode = TriggerMode::literal;
  ExperimentResult a = run_experiment(s);
  ExperimentResult b = run_experiment(s);

  REQUIRE(a.records.size() == b.records.size());
  for (size_t r = 0; r < a.records.size(); ++r) {
    const auto& ra = a.records[r];
    const auto& rb = b.records[r];
    REQUIRE(ra.temperature.has_value() == rb.temperature.has_value());
    if (ra.temperature) REQUIRE(*ra.temperature == *rb.temperature);
    REQUIRE(ra.assignment.labels == rb.assignment.labels);
    REQUIRE(ra.cluster_sizes == rb.cluster_sizes);
    REQUIRE(same_doubles(ra.global_f1, rb.global_f1));
    for (size_t i = 0; i < ra.clients.size(); ++i) {
      REQUIRE(ra.clients[i].train_loss == rb.clients[i].train_loss);
      REQUIRE(ra.clients[i].local_f1 == rb.clients[i].local_f1);
      REQUIRE(ra.clients[i].cluster == rb.clients[i].cluster);
    }
  }
  REQUIRE(a.trigger_round == b.trigger_round);
  REQUIRE(a.trace.per_round == b.trace.per_round);
}

TEST_CASE("zero rounds yields an initialized but empty run") {
  ExperimentResult res = run_experiment(small_setup(Method::BNC, 0, 3u));
  REQUIRE(res.records.empty());
  REQUIRE(res.scores.per_round.empty());
  REQUIRE(res.trigger_round == -1);
  REQUIRE(res.final_clusters == 1);
  REQUIRE(res.plan.cluster_of_client.size() == 15);
}

TEST_CASE("a broken cluster state is rejected before any training") {
  DatagenConfig dg = small_datagen(4, 2);
  dg.seed = 7u;
  GeneratedData data = build_partition(dg);
  ModelSpec spec{ModelKind::logreg, dg.feature_dim, dg.n_classes, 0, 1u};
  TrainConfig train;
  MethodPolicy policy;
  FederationContext ctx{data, spec, train, policy, 7u, 2};

  FederationState missing;
  missing.clusters.clusters = {{0, 1, 2}};
  missing.clusters.models = {init_model(spec)};
  REQUIRE_THROWS_AS(run_round(missing, ctx, 0), std::logic_error);

  FederationState doubled;
  doubled.clusters.clusters = {{0, 1}, {1, 2, 3}};
  doubled.clusters.models = {init_model(spec), init_model(spec)};
  REQUIRE_THROWS_AS(run_round(doubled, ctx, 0), std::logic_error);
}

TEST_CASE("policy validation rejects nonsense knobs") {
  MethodPolicy p;
  p.p = 0.5;
  REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
  p = MethodPolicy{};
  p.eta_server = 0.0;
  REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
  p = MethodPolicy{};
  p.method = Method::SCL;
  p.e1 = 0.0;
  REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
  p = MethodPolicy{};
  p.method = Method::BCL;
  p.clustering_round = 0;
  REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
  REQUIRE(method_from_name("OCFL-HDB") == Method::OCFL_HDB);
  REQUIRE_THROWS_AS(method_from_name("ocfl-hdb"), std::invalid_argument);
}
