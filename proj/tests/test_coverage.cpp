#include <msample/coverage.hpp>
#include <msample/lmmaes.hpp>
#include <msample/problems.hpp>

#include <gtest/gtest.h>

#include <set>

using namespace msample;

namespace {

// Exhaustive search over a fixed grid of 2-d latents; first minimum wins.
LatentVector grid_search(const Objective& f, Eigen::Index dim, std::uint64_t) {
  EXPECT_EQ(dim, 2);
  LatentVector best;
  double best_f = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j) {
      const LatentVector z = Eigen::Vector2d(-0.5 + 0.1 * i, -0.5 + 0.1 * j);
      const double v = f(z);
      if (v < best_f) {
        best_f = v;
        best = z;
      }
    }
  return best;
}

MasterSearch short_lmmaes(std::size_t budget) {
  return [budget](const Objective& f, Eigen::Index dim, std::uint64_t seed) {
    LmMaEs es(LatentVector::Zero(dim), 0.3, seed);
    return run_lmmaes(es, f, budget).best.latent;
  };
}

IdentityDataset square_dataset() {
  IdentityDataset d;
  d.ids = {10, 11, 12, 13};
  d.embeddings = {Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 1)};
  return d;
}

}  // namespace

TEST(FindMatched, AgreesWithBruteForce) {
  const auto data = make_dataset(50, 12, 3, 0.5, 8);
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const EmbeddingVector q = random_unit_vector(rng, 12);
    for (double theta : {0.3, 0.6, 0.9}) {
      std::vector<IdentityId> brute;
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& e = data.embeddings[i];
        double dot = 0, nq = 0, ne = 0;
        for (int k = 0; k < 12; ++k) {
          dot += q[k] * e[k];
          nq += q[k] * q[k];
          ne += e[k] * e[k];
        }
        if (1.0 - dot / (std::sqrt(nq) * std::sqrt(ne)) < theta) brute.push_back(data.ids[i]);
      }
      ASSERT_EQ(find_matched(data, q, Metric::cosine, MatchThreshold(theta)), brute);
    }
  }
}

TEST(FindMatched, TinyThresholdMatchesNothingAndGrowsMonotonically) {
  const auto data = make_dataset(80, 8, 2, 0.5, 9);
  Rng rng(2);
  const EmbeddingVector q = random_unit_vector(rng, 8);
  EXPECT_TRUE(find_matched(data, q, Metric::cosine, MatchThreshold(1e-300)).empty());
  std::size_t prev = 0;
  for (double theta = 0.05; theta < 2.1; theta += 0.05) {
    const auto m = find_matched(data, q, Metric::cosine, MatchThreshold(theta));
    EXPECT_GE(m.size(), prev);
    prev = m.size();
  }
  EXPECT_EQ(prev, data.size());
}

TEST(GreedyCoverage, SingleIdentityIsFullyCovered) {
  IdentityDataset one;
  one.ids = {7};
  one.embeddings = {Eigen::Vector2d(0.2, 0.1)};
  const auto r = greedy_coverage(IdentityEmbedder{2}, one, Metric::euclidean, MatchThreshold(0.2), 5, grid_search, 0);
  EXPECT_EQ(r.cumulative_percent, 100.0);
  EXPECT_EQ(r.steps.size(), 1u);
  EXPECT_EQ(r.steps[0].matched, (std::vector<IdentityId>{7}));
}

TEST(GreedyCoverage, SquareToyMatchesHandGreedy) {
  const auto data = square_dataset();
  const MatchThreshold theta(0.6);
  const auto r = greedy_coverage(IdentityEmbedder{2}, data, Metric::euclidean, theta, 4, grid_search, 0);

  // Hand greedy on the same grid: pick the first grid point covering the most
  // uncovered corners.
  std::set<std::size_t> left{0, 1, 2, 3};
  std::vector<std::vector<IdentityId>> expected;
  while (!left.empty()) {
    std::size_t best = 0;
    std::vector<IdentityId> best_set;
    for (int i = 0; i <= 20; ++i)
      for (int j = 0; j <= 20; ++j) {
        const Eigen::Vector2d z(-0.5 + 0.1 * i, -0.5 + 0.1 * j);
        std::vector<IdentityId> hit;
        for (auto k : left)
          if ((z - data.embeddings[k]).norm() < 0.6) hit.push_back(data.ids[k]);
        if (hit.size() > best) {
          best = hit.size();
          best_set = hit;
        }
      }
    expected.push_back(best_set);
    for (auto id : best_set) left.erase(static_cast<std::size_t>(id - 10));
  }
  ASSERT_EQ(r.steps.size(), expected.size());
  for (std::size_t s = 0; s < expected.size(); ++s) EXPECT_EQ(r.steps[s].matched, expected[s]);
  EXPECT_EQ(r.steps.size(), 2u);
  EXPECT_EQ(r.cumulative_percent, 100.0);
  EXPECT_EQ(r.steps[0].msc_target, 50.0);
  EXPECT_EQ(r.steps[1].msc_target, 100.0);
  EXPECT_EQ(r.steps[1].msc_full, 50.0);
  EXPECT_TRUE(verify_coverage_report(r, IdentityEmbedder{2}, data, Metric::euclidean, theta));
}

TEST(GreedyCoverage, StopsAfterRepeatedZeroGain) {
  const auto data = square_dataset();
  // theta so small that the grid never lands on a corner within it
  const auto r = greedy_coverage(IdentityEmbedder{2}, data, Metric::euclidean, MatchThreshold(1e-9), 10,
                                 [](const Objective&, Eigen::Index, std::uint64_t) { return LatentVector(Eigen::Vector2d(0.5, 0.5)); },
                                 0);
  EXPECT_EQ(r.steps.size(), 2u);
  EXPECT_EQ(r.cumulative_percent, 0.0);
  EXPECT_FALSE(r.notes.empty());
}

TEST(GreedyCoverage, StepsAreDisjointAndVerified) {
  BenchmarkSpec spec;
  spec.n = 300;
  spec.d = 16;
  spec.e = 16;
  spec.q = 8;
  spec.clusters = 5;
  spec.far_target = 0.02;
  const auto b = make_benchmark(spec);
  const auto r = greedy_coverage(b.gen, b.dataset, b.metric, b.theta, 4, short_lmmaes(800), 3);
  std::set<IdentityId> seen;
  for (const auto& s : r.steps)
    for (auto id : s.matched) EXPECT_TRUE(seen.insert(id).second);
  EXPECT_EQ(seen.size(), r.covered_count());
  EXPECT_DOUBLE_EQ(r.cumulative_percent, 100.0 * static_cast<double>(seen.size()) / 300.0);
  EXPECT_TRUE(verify_coverage_report(r, b.gen, b.dataset, b.metric, b.theta));
  for (std::size_t i = 1; i < r.steps.size(); ++i)
    EXPECT_GE(r.steps[i].cumulative_percent, r.steps[i - 1].cumulative_percent);

  auto tampered = r;
  if (!tampered.steps.empty() && !tampered.steps[0].matched.empty()) {
    tampered.steps[0].matched.pop_back();
    EXPECT_FALSE(verify_coverage_report(tampered, b.gen, b.dataset, b.metric, b.theta));
  }
  const auto j = to_json(r);
  EXPECT_EQ(j.at("masters").size(), r.steps.size());
}

TEST(KMeans, OneCentroidPerPointCoversEverything) {
  const auto data = make_dataset(25, 6, 3, 0.5, 1);
  const auto bound = kmeans_coverage_bound(data, 25, Metric::euclidean, MatchThreshold(1e-6), 3, 0);
  EXPECT_EQ(bound.percent, 100.0);
  const auto same = make_dataset(10, 6, 1, 0.0, 1);
  EXPECT_EQ(kmeans_coverage_bound(same, 1, Metric::cosine, MatchThreshold(1e-9), 2, 0).percent, 100.0);
}

TEST(KMeans, BoundGrowsWithThreshold) {
  const auto data = make_dataset(200, 8, 4, 0.3, 2);
  double prev = 0;
  for (double theta : {0.05, 0.1, 0.2, 0.4, 0.8}) {
    const double p = kmeans_coverage_bound(data, 4, Metric::cosine, MatchThreshold(theta), 4, 5).percent;
    EXPECT_GE(p, prev);
    prev = p;
  }
}

TEST(ClusterCoverage, SingleClusterEqualsSingleRun) {
  BenchmarkSpec spec;
  spec.n = 200;
  spec.d = 12;
  spec.e = 10;
  spec.q = 6;
  spec.clusters = 3;
  spec.far_target = 0.05;
  const auto b = make_benchmark(spec);
  const auto search = short_lmmaes(600);
  const auto r = cluster_partition_coverage(b.gen, b.dataset, 1, b.metric, b.theta, search, 11);
  ASSERT_EQ(r.steps.size(), 1u);
  CoverageObjective<GeneratorEmbedder> obj(b.gen, b.dataset, b.metric, b.theta);
  const auto z = search(std::cref(obj), b.spec.d, derive_seed(11, "cluster", 0));
  EXPECT_EQ(r.steps[0].latent, z);
  EXPECT_EQ(r.steps[0].matched, find_matched(b.dataset, b.gen.embed(z), b.metric, b.theta));
  EXPECT_TRUE(verify_coverage_report(r, b.gen, b.dataset, b.metric, b.theta));
}

TEST(ClusterCoverage, CreditsEachIdentityOnce) {
  BenchmarkSpec spec;
  spec.n = 250;
  spec.d = 12;
  spec.e = 10;
  spec.q = 6;
  spec.clusters = 4;
  spec.far_target = 0.1;
  const auto b = make_benchmark(spec);
  const auto r = cluster_partition_coverage(b.gen, b.dataset, 4, b.metric, b.theta, short_lmmaes(400), 2);
  std::set<IdentityId> seen;
  for (const auto& s : r.steps)
    for (auto id : s.matched) EXPECT_TRUE(seen.insert(id).second);
  EXPECT_TRUE(verify_coverage_report(r, b.gen, b.dataset, b.metric, b.theta));
  EXPECT_LE(r.cumulative_percent, 100.0);
}
