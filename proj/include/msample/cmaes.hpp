#ifndef MSAMPLE_CMAES_HPP
#define MSAMPLE_CMAES_HPP

// (mu/mu_w, lambda)-CMA-ES with cumulative step-size adaptation, rank-one and
// rank-mu covariance updates, default strategy parameters.

#include <msample/optimize.hpp>
#include <msample/rng.hpp>
#include <msample/lmmaes.hpp>  // default_lambda, log_rank_weights

#include <Eigen/Dense>

#include <iostream>
#include <numeric>

namespace msample {

struct CmaEsOptions {
  std::optional<int> lambda;
  std::optional<int> eigen_interval;  // default max(1, floor(dim / 10))
  double eigenvalue_floor = 1e-20;
  bool warn_large_dim = true;
};

struct CmaEsOffspring {
  LatentVector x;
  Eigen::VectorXd y;  // B D z, x = mean + sigma * y
  std::optional<double> fitness;
};

class CmaEs {
 public:
  static constexpr Eigen::Index kLargeDim = 1000;

  CmaEs(const LatentVector& x0, double sigma0, std::uint64_t seed, CmaEsOptions options = {})
      : n_(x0.size()), mean_(x0), sigma_(sigma0), rng_(seed), options_(options) {
    require(n_ >= 1, "CMA-ES needs a nonempty start point");
    require(std::isfinite(sigma0) && sigma0 > 0.0, "sigma0 must be finite and > 0");
    if (options.warn_large_dim && n_ > kLargeDim)
      std::cerr << "warning: CMA-ES in dimension " << n_
                << " stores a dense covariance; time and memory grow quadratically\n";
    lambda_ = options.lambda.value_or(default_lambda(n_));
    require(lambda_ >= 2, "lambda must be >= 2");
    mu_ = lambda_ / 2;
    weights_ = log_rank_weights(mu_);
    mu_eff_ = 1.0 / weights_.squaredNorm();
    eigen_interval_ = options.eigen_interval.value_or(std::max<int>(1, static_cast<int>(n_ / 10)));
    require(eigen_interval_ >= 1, "eigen interval must be >= 1");

    const double n = static_cast<double>(n_);
    cc_ = (4.0 + mu_eff_ / n) / (n + 4.0 + 2.0 * mu_eff_ / n);
    cs_ = (mu_eff_ + 2.0) / (n + mu_eff_ + 5.0);
    c1_ = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff_);
    cmu_ = std::min(1.0 - c1_, 2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) / ((n + 2.0) * (n + 2.0) + mu_eff_));
    damps_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (n + 1.0)) - 1.0) + cs_;
    chi_n_ = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

    ps_ = Eigen::VectorXd::Zero(n_);
    pc_ = Eigen::VectorXd::Zero(n_);
    C_ = Eigen::MatrixXd::Identity(n_, n_);
    B_ = Eigen::MatrixXd::Identity(n_, n_);
    D_ = Eigen::VectorXd::Ones(n_);
    inv_sqrt_C_ = Eigen::MatrixXd::Identity(n_, n_);
  }

  Eigen::Index dim() const { return n_; }
  int lambda() const { return lambda_; }
  int mu() const { return mu_; }
  const LatentVector& mean() const { return mean_; }
  double sigma() const { return sigma_; }
  const Eigen::MatrixXd& covariance() const { return C_; }
  std::size_t iteration() const { return iteration_; }

  std::vector<CmaEsOffspring> ask(int count) {
    require(count >= 1, "ask needs count >= 1");
    std::vector<CmaEsOffspring> out(count);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n_);
    for (auto& o : out) {
      for (Eigen::Index j = 0; j < n_; ++j) z[j] = normal(rng_);
      o.y = B_ * D_.cwiseProduct(z);
      o.x = mean_ + sigma_ * o.y;
    }
    return out;
  }

  void tell(std::span<const CmaEsOffspring> evaluated) {
    require(static_cast<int>(evaluated.size()) == lambda_,
            "tell expects exactly lambda=" + std::to_string(lambda_) + " candidates");
    for (const auto& o : evaluated) require(o.fitness.has_value(), "tell requires fitness values");
    std::vector<std::size_t> order(evaluated.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return *evaluated[a].fitness < *evaluated[b].fitness;
    });

    Eigen::MatrixXd Y(n_, mu_);
    for (int i = 0; i < mu_; ++i) Y.col(i) = evaluated[order[i]].y;
    const Eigen::VectorXd y_w = Y * weights_;
    mean_ += sigma_ * y_w;

    ++iteration_;
    ps_ = (1.0 - cs_) * ps_ + std::sqrt(cs_ * (2.0 - cs_) * mu_eff_) * (inv_sqrt_C_ * y_w);
    const double n = static_cast<double>(n_);
    const double ps_norm = ps_.norm();
    const double correction = std::sqrt(1.0 - std::pow(1.0 - cs_, 2.0 * static_cast<double>(iteration_)));
    const bool hsig = ps_norm / correction / chi_n_ < 1.4 + 2.0 / (n + 1.0);
    pc_ = (1.0 - cc_) * pc_;
    if (hsig) pc_ += std::sqrt(cc_ * (2.0 - cc_) * mu_eff_) * y_w;

    const double old_scale = 1.0 - c1_ - cmu_ + (hsig ? 0.0 : c1_ * cc_ * (2.0 - cc_));
    C_ *= old_scale;
    C_.noalias() += c1_ * pc_ * pc_.transpose();
    C_.noalias() += cmu_ * Y * weights_.asDiagonal() * Y.transpose();
    C_ = 0.5 * (C_ + C_.transpose()).eval();

    sigma_ *= std::exp((cs_ / damps_) * (ps_norm / chi_n_ - 1.0));
    if (!(std::isfinite(sigma_) && sigma_ > 0.0))
      throw std::runtime_error("CMA-ES step size left (0, inf)");

    if (iteration_ % static_cast<std::size_t>(eigen_interval_) == 0) decompose();
  }

 private:
  void decompose() {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C_);
    if (eig.info() != Eigen::Success || !eig.eigenvalues().allFinite())
      throw std::runtime_error("CMA-ES covariance eigendecomposition failed");
    Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(options_.eigenvalue_floor);
    B_ = eig.eigenvectors();
    D_ = ev.cwiseSqrt();
    C_ = B_ * ev.asDiagonal() * B_.transpose();
    C_ = 0.5 * (C_ + C_.transpose()).eval();
    inv_sqrt_C_ = B_ * D_.cwiseInverse().asDiagonal() * B_.transpose();
  }

  Eigen::Index n_;
  LatentVector mean_;
  double sigma_;
  Rng rng_;
  CmaEsOptions options_;
  int lambda_ = 0;
  int mu_ = 0;
  int eigen_interval_ = 1;
  Eigen::VectorXd weights_;
  double mu_eff_ = 0.0, cc_ = 0.0, cs_ = 0.0, c1_ = 0.0, cmu_ = 0.0, damps_ = 0.0, chi_n_ = 0.0;
  Eigen::VectorXd ps_, pc_, D_;
  Eigen::MatrixXd C_, B_, inv_sqrt_C_;
  std::size_t iteration_ = 0;
};

inline OptimizeResult run_cmaes(CmaEs& es, const Objective& objective, std::size_t budget,
                                const StopCheck& stop = never_stop()) {
  require(budget >= static_cast<std::size_t>(es.lambda()), "budget is smaller than lambda");
  OptimizeResult result;
  BestTracker best;
  const auto lambda = static_cast<std::size_t>(es.lambda());
  while (result.evaluations + lambda <= budget) {
    if (stop()) {
      result.truncated = true;
      break;
    }
    auto pop = es.ask(es.lambda());
    for (auto& o : pop) {
      o.fitness = objective(o.x);
      best.offer(o.x, *o.fitness);
    }
    result.evaluations += lambda;
    es.tell(pop);
    result.trace.push_back({es.iteration(), result.evaluations, best.fitness(), {}, {}, false});
  }
  result.best = best.best();
  return result;
}

}  // namespace msample

#endif  // MSAMPLE_CMAES_HPP
