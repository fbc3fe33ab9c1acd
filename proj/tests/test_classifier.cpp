#include <msample/classifier.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace msample;

namespace {

using DClassifier = SuccessClassifier<double>;

Eigen::MatrixXd random_batch(Eigen::Index d, Eigen::Index b, Rng& rng) {
  Eigen::MatrixXd x(d, b);
  for (Eigen::Index j = 0; j < b; ++j) x.col(j) = standard_normal(rng, d);
  return x;
}

// Same loss written from scratch on top of forward(): mean BCE of the
// train-mode probabilities.
double bce(const DClassifier& c, const Eigen::MatrixXd& x, const Eigen::RowVectorXd& y) {
  const auto p = c.forward(x, Mode::train);
  double s = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) s -= y(i) * std::log(p(i)) + (1 - y(i)) * std::log(1 - p(i));
  return s / static_cast<double>(y.size());
}

}  // namespace

TEST(Classifier, ZeroParametersGiveOneHalf) {
  Rng rng(0);
  DClassifier c(6, rng);
  c.mutable_params().for_each([](const char*, double* p, Eigen::Index n) { std::fill(p, p + n, 0.0); });
  Rng data(1);
  const auto x = random_batch(6, 7, data);
  for (auto mode : {Mode::train, Mode::infer}) {
    const auto p = c.forward(x, mode);
    for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_EQ(p(i), 0.5);
  }
}

TEST(Classifier, ShapesAndInitialization) {
  Rng rng(2);
  SuccessClassifier<float> c(512, rng);
  const auto& p = c.params();
  EXPECT_EQ(p.w1.rows(), 256);
  EXPECT_EQ(p.w1.cols(), 512);
  EXPECT_EQ(p.w2.rows(), 128);
  EXPECT_EQ(p.w2.cols(), 256);
  EXPECT_EQ(p.w3.rows(), 1);
  EXPECT_EQ(p.w3.cols(), 128);
  EXPECT_LE(p.w1.cwiseAbs().maxCoeff(), std::sqrt(6.0f / 512.0f));
  EXPECT_LE(p.w2.cwiseAbs().maxCoeff(), std::sqrt(6.0f / 256.0f));
  EXPECT_EQ(p.b1.squaredNorm() + p.b2.squaredNorm() + p.b3.squaredNorm() + p.beta.squaredNorm(), 0.0f);
  EXPECT_EQ(p.gamma, Eigen::VectorXf::Ones(256));
  EXPECT_THROW(c.predict(Eigen::VectorXd::Zero(10)), Error);
}

TEST(Classifier, OutputsLieStrictlyInsideUnitInterval) {
  Rng rng(3);
  SuccessClassifier<float> c(32, rng);
  Rng data(4);
  for (int t = 0; t < 200; ++t) {
    const float p = c.predict(standard_normal(data, 32));
    ASSERT_GT(p, 0.0f);
    ASSERT_LT(p, 1.0f);
  }
}

TEST(Classifier, GradientMatchesCentralDifferences) {
  Rng rng(5);
  DClassifier c(8, rng);
  Rng data(6);
  const auto x = random_batch(8, 10, data);
  Eigen::RowVectorXd y(10);
  y << 1, 0, 0, 1, 0, 1, 1, 0, 0, 0;
  // Move biases and batchnorm parameters off their initial values so every
  // tensor takes part.
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  c.mutable_params().for_each([&](const char* name, double* p, Eigen::Index n) {
    if (name[0] != 'w')
      for (Eigen::Index i = 0; i < n; ++i) p[i] += jitter(data);
  });

  auto grad = c.params().zeros_like();
  const double loss = c.loss_and_gradient(x, y, grad);
  EXPECT_NEAR(loss, bce(c, x, y), 1e-12);

  std::vector<double*> analytic;
  grad.for_each([&](const char*, double* p, Eigen::Index) { analytic.push_back(p); });
  const double h = 1e-5;
  std::size_t t = 0;
  c.mutable_params().for_each([&](const char* name, double* p, Eigen::Index n) {
    // Check at most 150 entries per tensor, spread across it.
    const Eigen::Index stride = std::max<Eigen::Index>(1, n / 150);
    std::vector<double> a, fd;
    for (Eigen::Index i = 0; i < n; i += stride) {
      const double saved = p[i];
      p[i] = saved + h;
      const double up = bce(c, x, y);
      p[i] = saved - h;
      const double down = bce(c, x, y);
      p[i] = saved;
      fd.push_back((up - down) / (2 * h));
      a.push_back(analytic[t][i]);
    }
    double diff = 0, na = 0, nf = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      diff += (a[k] - fd[k]) * (a[k] - fd[k]);
      na += a[k] * a[k];
      nf += fd[k] * fd[k];
    }
    diff = std::sqrt(diff);
    const double scale = std::max(std::sqrt(na), std::sqrt(nf));
    if (scale < 1e-8) {
      // The bias in front of batchnorm cancels out of a train-mode forward
      // pass; both gradients are zero up to rounding.
      EXPECT_LT(diff, 1e-8) << name;
    } else {
      EXPECT_LT(diff / scale, 1e-4) << name;
    }
    ++t;
  });
  EXPECT_EQ(t, 8u);
}

TEST(Classifier, SeparatesTwoPoints) {
  Rng rng(7);
  SuccessClassifier<float> c(8, rng);
  CandidateMemory mem(10);
  Rng mrng(0);
  Candidate good, bad;
  good.latent = Eigen::VectorXd::Constant(8, 1.0);
  good.fitness = 0.0;
  bad.latent = Eigen::VectorXd::Constant(8, -1.0);
  bad.fitness = 1.0;
  mem.insert(good, mrng);
  mem.insert(bad, mrng);
  const std::vector<std::uint8_t> labels{1, 0};
  Rng train(8);
  std::vector<double> losses;
  for (int e = 0; e < 50; ++e) losses.push_back(c.train_epoch(mem, labels, train));
  EXPECT_LT(losses.back(), 0.05);
  EXPECT_LT(losses.back(), losses.front());
  EXPECT_GT(c.predict(good.latent), 0.5f);
  EXPECT_LT(c.predict(bad.latent), 0.5f);
}

TEST(Classifier, AllNegativeLabelsPushOutputDown) {
  Rng rng(9);
  SuccessClassifier<float> c(16, rng);
  CandidateMemory mem(200);
  Rng data(10);
  for (int i = 0; i < 100; ++i) {
    Candidate k;
    k.latent = standard_normal(data, 16);
    k.fitness = 1.0;
    mem.insert(k, data);
  }
  const std::vector<std::uint8_t> labels(100, 0);
  for (int e = 0; e < 20; ++e) c.train_epoch(mem, labels, data);
  double mean = 0;
  for (const auto& e : mem.entries()) mean += c.predict(e.latent);
  EXPECT_LT(mean / 100.0, 0.2);
  EXPECT_EQ(c.adam_step(), 20 * 4);
}

TEST(Classifier, RunningStatisticsFollowMomentumRule) {
  Rng rng(11);
  DClassifier c(4, rng);
  Rng data(12);
  const auto x = random_batch(4, 5, data);
  Eigen::MatrixXd a1 = c.params().w1 * x;
  a1.colwise() += c.params().b1;
  const Eigen::VectorXd mean = a1.rowwise().mean();
  Eigen::VectorXd var(a1.rows());
  for (Eigen::Index r = 0; r < a1.rows(); ++r) var(r) = (a1.row(r).array() - mean(r)).square().sum() / 4.0;
  c.train_batch(x, Eigen::RowVectorXd::Zero(5));
  EXPECT_LT((c.running_mean() - 0.1 * mean).norm(), 1e-12);
  EXPECT_LT((c.running_var() - (0.9 * Eigen::VectorXd::Ones(a1.rows()) + 0.1 * var)).norm(), 1e-12);

  const Eigen::VectorXd before = c.running_mean();
  c.train_batch(x.col(0), Eigen::RowVectorXd::Zero(1));
  EXPECT_EQ(c.running_mean(), before);
}

TEST(Classifier, TrainingIsDeterministic) {
  auto run = [] {
    Rng rng(13);
    SuccessClassifier<float> c(12, rng);
    CandidateMemory mem(100);
    Rng data(14);
    for (int i = 0; i < 70; ++i) {
      Candidate k;
      k.latent = standard_normal(data, 12);
      k.fitness = k.latent.sum();
      mem.insert(k, data);
    }
    const auto labels = label_memory(mem, 20.0);
    for (int e = 0; e < 5; ++e) c.train_epoch(mem, labels, data);
    return c;
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.params().w1, b.params().w1);
  EXPECT_EQ(a.params().w3, b.params().w3);
  EXPECT_EQ(a.running_var(), b.running_var());
}

TEST(Classifier, ReinitializeResetsOptimizerState) {
  Rng rng(15);
  SuccessClassifier<float> c(4, rng);
  c.train_batch(Eigen::MatrixXf::Random(4, 3), Eigen::RowVectorXf::Ones(3));
  EXPECT_EQ(c.adam_step(), 1);
  c.reinitialize(rng);
  EXPECT_EQ(c.adam_step(), 0);
  EXPECT_EQ(c.running_mean(), Eigen::VectorXf::Zero(256));
}
