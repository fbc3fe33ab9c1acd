#include <msample/problems.hpp>
#include <msample/random_search.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace msample;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(BenchmarkFunctions, OptimaAreZero) {
  for (int d : {1, 2, 10}) {
    EXPECT_EQ(evaluate_benchmark_function(BenchmarkKind::sphere, Eigen::VectorXd::Zero(d)), 0.0);
    EXPECT_EQ(evaluate_benchmark_function(BenchmarkKind::ellipsoid, Eigen::VectorXd::Zero(d)), 0.0);
    EXPECT_EQ(evaluate_benchmark_function(BenchmarkKind::rastrigin, Eigen::VectorXd::Zero(d)), 0.0);
    EXPECT_EQ(evaluate_benchmark_function(BenchmarkKind::rosenbrock, Eigen::VectorXd::Ones(d)), 0.0);
  }
  EXPECT_DOUBLE_EQ(evaluate_benchmark_function(BenchmarkKind::ellipsoid, Eigen::Vector3d(1, 1, 1)), 1 + 1e3 + 1e6);
  EXPECT_DOUBLE_EQ(evaluate_benchmark_function(BenchmarkKind::rosenbrock, Eigen::Vector2d(0, 0)), 1.0);
  EXPECT_NEAR(evaluate_benchmark_function(BenchmarkKind::rastrigin, Eigen::Vector2d(1, 1)), 2.0, 1e-12);
  EXPECT_THROW(parse_benchmark_kind("griewank"), Error);
}

TEST(Dataset, SkewedClusterSizes) {
  const auto s = skewed_cluster_sizes(5749, 20);
  EXPECT_EQ(std::accumulate(s.begin(), s.end(), std::size_t{0}), 5749u);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LE(s[i], s[i - 1]);
  EXPECT_GE(s.back(), 1u);
  EXPECT_GT(s.front(), 5 * s.back());
  EXPECT_EQ(skewed_cluster_sizes(3, 3), (std::vector<std::size_t>{1, 1, 1}));
}

TEST(Dataset, SingleClusterWithoutSpreadIsIdentical) {
  const auto data = make_dataset(30, 16, 1, 0.0, 3);
  ASSERT_EQ(data.size(), 30u);
  for (const auto& e : data.embeddings) {
    EXPECT_EQ(e, data.embeddings[0]);
    EXPECT_NEAR(e.norm(), 1.0, 1e-12);
  }
}

TEST(Dataset, ClustersAreTighterThanTheWhole) {
  std::vector<std::size_t> cluster;
  const auto data = make_dataset(600, 32, 6, 0.25, 1, &cluster);
  std::vector<double> within, across;
  for (std::size_t i = 0; i < data.size(); i += 3)
    for (std::size_t j = i + 1; j < data.size(); j += 5)
      (cluster[i] == cluster[j] ? within : across)
          .push_back(distance(data.embeddings[i], data.embeddings[j], Metric::cosine));
  ASSERT_FALSE(within.empty());
  EXPECT_LT(median(within), median(across));
  data.validate();
}

TEST(Generator, DeterministicAndUnitNorm) {
  const auto data = make_dataset(200, 24, 4, 0.3, 2);
  const auto g1 = make_generator(data, 40, 8, 5);
  const auto g2 = make_generator(data, 40, 8, 5);
  Rng rng(0);
  for (int t = 0; t < 100; ++t) {
    const auto z = standard_normal(rng, 40);
    const auto a = g1.embed(z);
    EXPECT_EQ(a, g2.embed(z));
    EXPECT_NEAR(a.norm(), 1.0, 1e-12);
    EXPECT_EQ(a.size(), 24);
  }
  EXPECT_THROW(g1.embed(Eigen::VectorXd::Zero(39)), Error);
  static_assert(Embedder<GeneratorEmbedder>);
}

TEST(Calibration, FalseAcceptRateNearTarget) {
  BenchmarkSpec spec;
  const auto b = make_benchmark(spec);
  const double far = measure_far(b.dataset, b.metric, b.theta, 200000, 12345);
  EXPECT_GE(far, 0.0005);
  EXPECT_LE(far, 0.002);
}

TEST(Calibration, FarOneMatchesEveryPair) {
  const auto data = make_dataset(20, 8, 3, 0.4, 4);
  const auto theta = calibrate_theta(data, Metric::euclidean, 1.0, 20000, 0);
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = 0; j < data.size(); ++j)
      EXPECT_TRUE(matches(data.embeddings[i], data.embeddings[j], Metric::euclidean, theta));
}

TEST(Calibration, ThetaGrowsWithTarget) {
  const auto data = make_dataset(400, 16, 5, 0.3, 6);
  double prev = 0.0;
  for (double far : {0.0005, 0.001, 0.01, 0.1, 0.5, 1.0}) {
    const double t = calibrate_theta(data, Metric::cosine, far, 50000, 1).value();
    EXPECT_GE(t, prev);
    prev = t;
  }
  EXPECT_THROW(calibrate_theta(data, Metric::cosine, 0.0, 100, 1), Error);
  EXPECT_THROW(calibrate_theta(make_dataset(5, 4, 1, 0.0, 0), Metric::cosine, 0.1, 100, 1), Error);
}

TEST(Benchmark, RandomSearchFindsSomeCoverage) {
  const auto b = make_benchmark(BenchmarkSpec{});
  const auto train = b.train();
  CoverageObjective<GeneratorEmbedder> objective(b.gen, train, b.metric, b.theta);
  RandomSearch rs(b.spec.d, 1);
  const auto r = run_random_search(rs, std::cref(objective), 5000, 5000);
  EXPECT_GT(100.0 * (1.0 - *r.best.fitness), 0.0);
}

TEST(Benchmark, SplitIsDisjointAndExhaustive) {
  const auto b = make_benchmark(BenchmarkSpec{});
  EXPECT_EQ(b.train_ids.size(), static_cast<std::size_t>(std::floor(0.7 * 5749)));
  std::set<IdentityId> all(b.train_ids.begin(), b.train_ids.end());
  for (auto id : b.test_ids) EXPECT_TRUE(all.insert(id).second);
  EXPECT_EQ(all.size(), b.dataset.size());
  EXPECT_EQ(b.train().size() + b.test().size(), 5749u);
}

TEST(Benchmark, ReproducibleFromSpec) {
  BenchmarkSpec spec;
  spec.n = 500;
  spec.d = 32;
  spec.seed = 17;
  const auto a = make_benchmark(spec), b = make_benchmark(spec);
  EXPECT_EQ(a.theta.value(), b.theta.value());
  EXPECT_EQ(a.dataset.embeddings, b.dataset.embeddings);
  EXPECT_EQ(a.gen.projection(), b.gen.projection());
  EXPECT_EQ(a.train_ids, b.train_ids);
  spec.seed = 18;
  EXPECT_NE(make_benchmark(spec).dataset.embeddings, a.dataset.embeddings);
}

TEST(BenchmarkSpecJson, RoundTripAndErrors) {
  BenchmarkSpec spec;
  spec.n = 123;
  spec.metric = Metric::euclidean;
  spec.theta = 0.4;
  const auto back = benchmark_spec_from_json(to_json(spec));
  EXPECT_EQ(to_json(back), to_json(spec));

  std::vector<std::string> errors;
  benchmark_spec_from_json(nlohmann::json{{"n", 1}, {"colour", "red"}, {"far_target", 2.0}, {"metric", "manhattan"}},
                           errors);
  ASSERT_EQ(errors.size(), 5u);  // clusters (default 20) > n as well
  auto has = [&](const std::string& s) {
    return std::any_of(errors.begin(), errors.end(), [&](const auto& e) { return e.find(s) != std::string::npos; });
  };
  EXPECT_TRUE(has("problem.colour"));
  EXPECT_TRUE(has("problem.n"));
  EXPECT_TRUE(has("problem.far_target"));
  EXPECT_TRUE(has("problem.metric"));
  EXPECT_THROW(benchmark_spec_from_json(nlohmann::json{{"colour", 1}}), Error);
}
