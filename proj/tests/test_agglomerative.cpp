#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "engine_test_util.hpp"
#include "ocfl/agglomerative.hpp"

using namespace ocfl;

namespace {

// direct UPGMA oracle: keeps explicit member lists and recomputes every
// linkage as the plain mean of raw pairwise entries
std::vector<int> upgma_direct(const DivergenceMatrix& g, double threshold) {
  int n = g.order;
  auto raw = [&](int i, int j) { return g.entries[size_t(i) * n + j]; };
  std::vector<std::vector<int>> clusters;
  for (int i = 0; i < n; ++i) clusters.push_back({i});
  for (;;) {
    if (clusters.size() == 1) break;
    double best = std::numeric_limits<double>::infinity();
    size_t ba = 0, bb = 0;
    for (size_t a = 0; a < clusters.size(); ++a)
      for (size_t b = a + 1; b < clusters.size(); ++b) {
        double s = 0.0;
        for (int i : clusters[a])
          for (int j : clusters[b]) s += raw(i, j);
        double mean = s / (double(clusters[a].size()) * double(clusters[b].size()));
        if (mean < best) {
          best = mean;
          ba = a;
          bb = b;
        }
      }
    if (best > threshold) break;
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    clusters.erase(clusters.begin() + bb);
  }
  std::vector<int> labels(n, -1);
  for (size_t c = 0; c < clusters.size(); ++c)
    for (int i : clusters[c]) labels[i] = int(c);
  return labels;
}

// exhaustive max-min-cross-distance bipartition value
double best_bipartition_value(const DivergenceMatrix& g) {
  int n = g.order;
  double best = -1.0;
  for (int mask = 1; mask < (1 << (n - 1)); ++mask) {
    double mincross = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        bool si = i > 0 && (mask & (1 << (i - 1)));
        bool sj = j > 0 && (mask & (1 << (j - 1)));
        if (si != sj) mincross = std::min(mincross, g.entries[size_t(i) * n + j]);
      }
    best = std::max(best, mincross);
  }
  return best;
}

double min_cross_of(const DivergenceMatrix& g, const std::vector<ClientId>& a,
                    const std::vector<ClientId>& b) {
  auto row_of = [&](ClientId id) {
    for (int i = 0; i < g.order; ++i)
      if (g.client_index[i] == id) return i;
    throw std::logic_error("unknown id");
  };
  double m = std::numeric_limits<double>::infinity();
  for (ClientId x : a)
    for (ClientId y : b) m = std::min(m, g.entries[size_t(row_of(x)) * g.order + row_of(y)]);
  return m;
}

}  // namespace

TEST_CASE("agglomerative threshold above the metric bound collapses everything") {
  std::mt19937_64 rng(12);
  DivergenceMatrix g = random_gamma(rng, 9, 0.1, 1.95);
  ClusterAssignment a = agglomerative_average(g, 2.01);
  REQUIRE(a.n_clusters == 1);
  REQUIRE(a.method == "agglomerative");
}

TEST_CASE("agglomerative threshold below every entry keeps singletons") {
  std::mt19937_64 rng(13);
  DivergenceMatrix g = random_gamma(rng, 8, 0.5, 1.9);
  ClusterAssignment a = agglomerative_average(g, 0.4);
  REQUIRE(a.n_clusters == 8);
  std::vector<int> want{0, 1, 2, 3, 4, 5, 6, 7};
  REQUIRE(a.labels == want);
}

TEST_CASE("agglomerative recovers blocks for thresholds between the scales") {
  DivergenceMatrix g = block_gamma({5, 4, 6}, 0.05, 1.8);
  ClusterAssignment a = agglomerative_average(g, 0.3);
  REQUIRE(a.n_clusters == 3);
  std::vector<int> want;
  for (int i = 0; i < 5; ++i) want.push_back(0);
  for (int i = 0; i < 4; ++i) want.push_back(1);
  for (int i = 0; i < 6; ++i) want.push_back(2);
  REQUIRE(a.labels == want);
}

TEST_CASE("agglomerative merge heights follow a worked four-point example") {
  // pairs (0,1) at 0.1 and (2,3) at 0.2; average cross linkage 1.05
  DivergenceMatrix g = gamma_from({{0.0, 0.1, 0.9, 1.0},
                                   {0.1, 0.0, 1.1, 1.2},
                                   {0.9, 1.1, 0.0, 0.2},
                                   {1.0, 1.2, 0.2, 0.0}});
  REQUIRE(agglomerative_average(g, 0.05).n_clusters == 4);
  ClusterAssignment two_pairs = agglomerative_average(g, 0.2);
  REQUIRE(two_pairs.n_clusters == 2);
  REQUIRE(two_pairs.labels == std::vector<int>{0, 0, 1, 1});
  // the pair merge at 0.2 happens, the cross merge needs (0.9+1.0+1.1+1.2)/4
  REQUIRE(agglomerative_average(g, 1.04).n_clusters == 2);
  REQUIRE(agglomerative_average(g, 1.05).n_clusters == 1);
}

TEST_CASE("agglomerative equals the direct recomputation oracle across thresholds") {
  std::mt19937_64 rng(7777);
  for (int rep = 0; rep < 10; ++rep) {
    DivergenceMatrix g = random_gamma(rng, 7, 0.05, 1.95);
    for (double threshold : {0.05, 0.2, 0.4, 0.7, 1.0, 1.3, 1.6, 1.9, 2.0}) {
      ClusterAssignment a = agglomerative_average(g, threshold);
      std::vector<int> oracle = upgma_direct(g, threshold);
      INFO("rep " << rep << " threshold " << threshold);
      REQUIRE(same_partition(a.labels, oracle));
    }
  }
}

TEST_CASE("agglomerative is deterministic and reorder-stable") {
  std::mt19937_64 rng(31);
  DivergenceMatrix g = random_gamma(rng, 11, 0.05, 1.95);
  ClusterAssignment a = agglomerative_average(g, 0.9);
  REQUIRE(agglomerative_average(g, 0.9).labels == a.labels);

  std::vector<int> perm(11);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  DivergenceMatrix gp = permute_gamma(g, perm);
  ClusterAssignment b = agglomerative_average(gp, 0.9);
  std::vector<int> by_id_a(11), by_id_b(11);
  for (int i = 0; i < 11; ++i) {
    by_id_a[a.order[i]] = a.labels[i];
    by_id_b[b.order[i]] = b.labels[i];
  }
  REQUIRE(same_partition(by_id_a, by_id_b));
}

TEST_CASE("agglomerative rejects a non-positive threshold") {
  DivergenceMatrix g = block_gamma({2, 2}, 0.1, 1.8);
  REQUIRE_THROWS_AS(agglomerative_average(g, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(agglomerative_average(g, -0.3), std::invalid_argument);
}

TEST_CASE("cosine_bipartition splits antipodal groups exactly") {
  DivergenceMatrix g = block_gamma({3, 4}, 0.0, 2.0);
  auto [a, b] = cosine_bipartition(g);
  REQUIRE(a == std::vector<ClientId>{0, 1, 2});
  REQUIRE(b == std::vector<ClientId>{3, 4, 5, 6});
}

TEST_CASE("cosine_bipartition on a cohort of two gives singletons") {
  DivergenceMatrix g = gamma_from({{0.0, 0.7}, {0.7, 0.0}});
  auto [a, b] = cosine_bipartition(g);
  REQUIRE(a == std::vector<ClientId>{0});
  REQUIRE(b == std::vector<ClientId>{1});
}

TEST_CASE("cosine_bipartition matches the exhaustive oracle") {
  std::mt19937_64 rng(5252);
  for (int rep = 0; rep < 25; ++rep) {
    DivergenceMatrix g = random_gamma(rng, 8, 0.05, 1.95);
    auto [a, b] = cosine_bipartition(g);
    REQUIRE(!a.empty());
    REQUIRE(!b.empty());
    REQUIRE(a.size() + b.size() == 8);
    double got = min_cross_of(g, a, b);
    double want = best_bipartition_value(g);
    INFO("rep " << rep);
    REQUIRE(got == Catch::Approx(want).margin(1e-15));
    REQUIRE(a[0] == 0);  // part with the lowest client id first
  }
}

TEST_CASE("cosine_bipartition rejects cohorts below two") {
  DivergenceMatrix g = gamma_from({{0.0}});
  REQUIRE_THROWS_AS(cosine_bipartition(g), std::invalid_argument);
}
