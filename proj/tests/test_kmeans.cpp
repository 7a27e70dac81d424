#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "engine_test_util.hpp"
#include "ocfl/kmeans.hpp"

using namespace ocfl;

namespace {

// inertia of a labeling over the matrix rows
double inertia_of(const DivergenceMatrix& g, const std::vector<int>& labels, int k) {
  int n = g.order;
  std::vector<std::vector<double>> centroid(k, std::vector<double>(n, 0.0));
  std::vector<int> count(k, 0);
  for (int i = 0; i < n; ++i) {
    ++count[labels[i]];
    for (int d = 0; d < n; ++d) centroid[labels[i]][d] += g.entries[size_t(i) * n + d];
  }
  for (int c = 0; c < k; ++c)
    for (double& v : centroid[c]) v /= count[c];
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < n; ++d) {
      double diff = g.entries[size_t(i) * n + d] - centroid[labels[i]][d];
      s += diff * diff;
    }
  return s;
}

}  // namespace

TEST_CASE("kmeans recovers perfect blocks") {
  DivergenceMatrix g = block_gamma({5, 6, 4}, 0.0, 2.0);
  ClusterAssignment a = kmeans_on_gamma(g, 3, 42);
  REQUIRE(a.n_clusters == 3);
  REQUIRE(a.method == "kmeans");
  std::vector<int> want;
  for (int b = 0; b < 3; ++b)
    for (int k = 0; k < (b == 0 ? 5 : b == 1 ? 6 : 4); ++k) want.push_back(b);
  REQUIRE(a.labels == want);  // canonical labels follow first appearance
}

TEST_CASE("kmeans with k equal to n gives singletons with zero inertia") {
  std::mt19937_64 rng(7);
  DivergenceMatrix g = random_gamma(rng, 6, 0.2, 1.8);
  ClusterAssignment a = kmeans_on_gamma(g, 6, 3);
  REQUIRE(a.n_clusters == 6);
  std::vector<int> want{0, 1, 2, 3, 4, 5};
  REQUIRE(a.labels == want);
  REQUIRE(inertia_of(g, a.labels, 6) == 0.0);
}

TEST_CASE("kmeans bipartition matches exhaustive inertia minimization") {
  std::mt19937_64 rng(2025);
  for (int rep = 0; rep < 20; ++rep) {
    DivergenceMatrix g = noisy_block_gamma(rng, {3, 3}, 0.15, 1.2, 1.8);
    ClusterAssignment a = kmeans_on_gamma(g, 2, 1000 + rep);

    // oracle: all 2^5 - 1 true bipartitions of 6 points, client 0 pinned to side 0
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_labels;
    for (int mask = 1; mask < 32; ++mask) {
      std::vector<int> lab(6, 0);
      for (int i = 0; i < 5; ++i)
        if (mask & (1 << i)) lab[i + 1] = 1;
      double v = inertia_of(g, lab, 2);
      if (v < best) {
        best = v;
        best_labels = lab;
      }
    }
    INFO("rep " << rep);
    REQUIRE(same_partition(a.labels, best_labels));
    REQUIRE(inertia_of(g, a.labels, 2) == Catch::Approx(best).margin(1e-12));
  }
}

TEST_CASE("kmeans rejects out-of-range k") {
  DivergenceMatrix g = block_gamma({3, 3}, 0.1, 1.9);
  REQUIRE_THROWS_AS(kmeans_on_gamma(g, 1, 5), std::invalid_argument);
  REQUIRE_THROWS_AS(kmeans_on_gamma(g, 7, 5), std::invalid_argument);
}

TEST_CASE("kmeans is deterministic for a fixed seed") {
  std::mt19937_64 rng(88);
  DivergenceMatrix g = random_gamma(rng, 12, 0.1, 1.9);
  ClusterAssignment a = kmeans_on_gamma(g, 3, 555);
  ClusterAssignment b = kmeans_on_gamma(g, 3, 555);
  REQUIRE(a.labels == b.labels);
}

TEST_CASE("kmeans partition is stable under client reordering") {
  std::mt19937_64 rng(31337);
  DivergenceMatrix g = noisy_block_gamma(rng, {4, 5, 6}, 0.05, 1.5, 1.9);
  ClusterAssignment a = kmeans_on_gamma(g, 3, 9);

  std::vector<int> perm(15);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  DivergenceMatrix gp = permute_gamma(g, perm);
  ClusterAssignment b = kmeans_on_gamma(gp, 3, 9);

  // align labels by client id and compare as partitions
  std::vector<int> by_id_a(15), by_id_b(15);
  for (int i = 0; i < 15; ++i) {
    by_id_a[a.order[i]] = a.labels[i];
    by_id_b[b.order[i]] = b.labels[i];
  }
  REQUIRE(same_partition(by_id_a, by_id_b));
}

TEST_CASE("kmeans labels are always total and contiguous") {
  std::mt19937_64 rng(404);
  for (int rep = 0; rep < 25; ++rep) {
    int n = 4 + int(rng() % 12);
    int k = 2 + int(rng() % (n - 1));
    DivergenceMatrix g = random_gamma(rng, n, 0.0, 2.0);
    ClusterAssignment a = kmeans_on_gamma(g, k, rep);
    REQUIRE(int(a.labels.size()) == n);
    REQUIRE(a.n_clusters >= 1);
    REQUIRE(a.n_clusters <= k);
    std::vector<bool> seen(a.n_clusters, false);
    for (int l : a.labels) {
      REQUIRE(l >= 0);
      REQUIRE(l < a.n_clusters);
      seen[l] = true;
    }
    REQUIRE(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
  }
}
