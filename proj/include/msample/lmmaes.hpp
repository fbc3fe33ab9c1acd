#ifndef MSAMPLE_LMMAES_HPP
#define MSAMPLE_LMMAES_HPP

// Limited-Memory Matrix Adaptation Evolution Strategy.
//
// Instead of a full covariance matrix the strategy keeps m direction vectors
// M_1..M_m. A standard normal draw z is turned into a search step d by
//
//   d <- (1 - c_d,i) d + c_d,i M_i (M_i^T d),    i = 1..min(t, m)
//
// and candidates are x = mean + sigma * d. Selection recombines the mu best
// steps into the mean; the recombined z drives both the step-size path and
// every direction vector, with learning rates c_c,i = lambda / (4^(i-1) n)
// and c_d,i = 1 / (1.5^(i-1) n). Cost per sample is O(m n).

#include <msample/optimize.hpp>
#include <msample/rng.hpp>
#include <msample/types.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace msample {

/// Population size rule 4 + floor(3 ln d).
inline int default_lambda(long long dim) {
  require(dim >= 1, "dimension must be >= 1");
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dim))));
}

/// Positive log-rank recombination weights, non-increasing, summing to 1.
inline Eigen::VectorXd log_rank_weights(int mu) {
  require(mu >= 1, "mu must be >= 1");
  Eigen::VectorXd w(mu);
  for (int i = 0; i < mu; ++i) w[i] = std::log(mu + 0.5) - std::log(i + 1.0);
  return w / w.sum();
}

struct LmMaEsOptions {
  std::optional<int> lambda;   // default: default_lambda(dim)
  std::optional<int> memory;   // number of direction vectors m; default: lambda
  bool adapt_sigma = true;
  bool adapt_directions = true;
};

/// A sampled candidate together with the draws that produced it.
struct LmMaEsOffspring {
  LatentVector x;
  Eigen::VectorXd z;  // raw standard-normal draw
  Eigen::VectorXd d;  // transformed step, x = mean + sigma * d
  std::optional<double> fitness;
};

class LmMaEs {
 public:
  LmMaEs(const LatentVector& x0, double sigma0, std::uint64_t seed, LmMaEsOptions options = {})
      : dim_(x0.size()), mean_(x0), sigma_(sigma0), rng_(seed), options_(options) {
    require(dim_ >= 1, "LM-MA-ES needs a nonempty start point");
    require(x0.allFinite(), "start point must be finite");
    require(std::isfinite(sigma0) && sigma0 > 0.0, "sigma0 must be finite and > 0");
    lambda_ = options.lambda.value_or(default_lambda(dim_));
    require(lambda_ >= 2, "lambda must be >= 2");
    mu_ = lambda_ / 2;
    const int m = options.memory.value_or(lambda_);
    require(m >= 0, "memory size must be >= 0");
    weights_ = log_rank_weights(mu_);
    mu_eff_ = 1.0 / weights_.squaredNorm();

    const double n = static_cast<double>(dim_);
    c_sigma_ = clamp_rate(2.0 * lambda_ / n);
    c_d_.resize(m);
    c_c_.resize(m);
    for (int i = 0; i < m; ++i) {
      c_d_[i] = clamp_rate(1.0 / (std::pow(1.5, i) * n));
      c_c_[i] = clamp_rate(lambda_ / (std::pow(4.0, i) * n));
    }
    dirs_.assign(m, Eigen::VectorXd::Zero(dim_));
    path_sigma_ = Eigen::VectorXd::Zero(dim_);
  }

  Eigen::Index dim() const { return dim_; }
  int lambda() const { return lambda_; }
  int mu() const { return mu_; }
  int memory() const { return static_cast<int>(dirs_.size()); }
  const Eigen::VectorXd& weights() const { return weights_; }
  double mu_eff() const { return mu_eff_; }
  const LatentVector& mean() const { return mean_; }
  double sigma() const { return sigma_; }
  const std::vector<Eigen::VectorXd>& directions() const { return dirs_; }
  const Eigen::VectorXd& path_sigma() const { return path_sigma_; }
  std::size_t iteration() const { return iteration_; }
  int active_directions() const {
    if (!options_.adapt_directions) return 0;
    return static_cast<int>(std::min<std::size_t>(iteration_, dirs_.size()));
  }

  /// Applies the direction-vector transform to a raw draw.
  Eigen::VectorXd transform(const Eigen::VectorXd& z) const {
    Eigen::VectorXd d = z;
    const int active = active_directions();
    for (int i = 0; i < active; ++i) {
      const double proj = dirs_[i].dot(d);
      d = (1.0 - c_d_[i]) * d + (c_d_[i] * proj) * dirs_[i];
    }
    return d;
  }

  std::vector<LmMaEsOffspring> ask(int count) {
    require(count >= 1, "ask needs count >= 1");
    std::vector<LmMaEsOffspring> out;
    out.reserve(count);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k < count; ++k) {
      LmMaEsOffspring o;
      o.z.resize(dim_);
      for (Eigen::Index j = 0; j < dim_; ++j) o.z[j] = normal(rng_);
      o.d = transform(o.z);
      o.x = mean_ + sigma_ * o.d;
      out.push_back(std::move(o));
    }
    return out;
  }

  void tell(std::span<const LmMaEsOffspring> evaluated) {
    require(static_cast<int>(evaluated.size()) == lambda_,
            "tell expects exactly lambda=" + std::to_string(lambda_) + " candidates, got " +
                std::to_string(evaluated.size()));
    for (const auto& o : evaluated) {
      require(o.fitness.has_value(), "tell requires every candidate to carry a fitness");
      require(o.z.size() == dim_ && o.d.size() == dim_, "candidate draws have wrong length");
    }
    std::vector<std::size_t> order(evaluated.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return *evaluated[a].fitness < *evaluated[b].fitness;
    });

    Eigen::VectorXd z_w = Eigen::VectorXd::Zero(dim_);
    Eigen::VectorXd d_w = Eigen::VectorXd::Zero(dim_);
    for (int i = 0; i < mu_; ++i) {
      z_w += weights_[i] * evaluated[order[i]].z;
      d_w += weights_[i] * evaluated[order[i]].d;
    }

    mean_ += sigma_ * d_w;
    path_sigma_ = (1.0 - c_sigma_) * path_sigma_ +
                  std::sqrt(mu_eff_ * c_sigma_ * (2.0 - c_sigma_)) * z_w;
    if (options_.adapt_directions) {
      for (std::size_t i = 0; i < dirs_.size(); ++i) {
        dirs_[i] = (1.0 - c_c_[i]) * dirs_[i] +
                   std::sqrt(mu_eff_ * c_c_[i] * (2.0 - c_c_[i])) * z_w;
      }
    }
    if (options_.adapt_sigma) {
      const double n = static_cast<double>(dim_);
      sigma_ *= std::exp(0.5 * c_sigma_ * (path_sigma_.squaredNorm() / n - 1.0));
    }
    if (!(std::isfinite(sigma_) && sigma_ > 0.0))
      throw std::runtime_error("LM-MA-ES step size left (0, inf)");
    ++iteration_;
  }

  /// Versioned snapshot of the complete state, including the RNG.
  nlohmann::json to_json() const {
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    nlohmann::json dirs = nlohmann::json::array();
    for (const auto& m : dirs_) dirs.push_back(vec(m));
    return {{"format", "lmmaes-state"},
            {"version", 1},
            {"dim", dim_},
            {"lambda", lambda_},
            {"mu", mu_},
            {"weights", vec(weights_)},
            {"mean", vec(mean_)},
            {"sigma", sigma_},
            {"dirs", dirs},
            {"path_sigma", vec(path_sigma_)},
            {"iteration", iteration_},
            {"adapt_sigma", options_.adapt_sigma},
            {"adapt_directions", options_.adapt_directions},
            {"rng", rng_state(rng_)}};
  }

  static LmMaEs from_json(const nlohmann::json& j) {
    require(j.value("format", "") == "lmmaes-state", "not an LM-MA-ES state snapshot");
    require(j.at("version").get<int>() == 1, "unsupported LM-MA-ES snapshot version");
    auto vec = [](const nlohmann::json& a) {
      const auto v = a.get<std::vector<double>>();
      return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    LmMaEsOptions opts;
    opts.lambda = j.at("lambda").get<int>();
    opts.memory = static_cast<int>(j.at("dirs").size());
    opts.adapt_sigma = j.at("adapt_sigma").get<bool>();
    opts.adapt_directions = j.at("adapt_directions").get<bool>();
    LmMaEs es(vec(j.at("mean")), j.at("sigma").get<double>(), 0, opts);
    require(es.dim_ == j.at("dim").get<Eigen::Index>(), "snapshot dimension mismatch");
    for (std::size_t i = 0; i < es.dirs_.size(); ++i) es.dirs_[i] = vec(j.at("dirs")[i]);
    es.path_sigma_ = vec(j.at("path_sigma"));
    es.iteration_ = j.at("iteration").get<std::size_t>();
    es.rng_ = rng_from_state(j.at("rng").get<std::string>());
    return es;
  }

 private:
  static double clamp_rate(double c) { return std::clamp(c, 0.0, 1.0); }

  Eigen::Index dim_;
  int lambda_ = 0;
  int mu_ = 0;
  Eigen::VectorXd weights_;
  double mu_eff_ = 0.0;
  double c_sigma_ = 0.0;
  std::vector<double> c_d_;
  std::vector<double> c_c_;
  LatentVector mean_;
  double sigma_;
  std::vector<Eigen::VectorXd> dirs_;
  Eigen::VectorXd path_sigma_;
  std::size_t iteration_ = 0;
  Rng rng_;
  LmMaEsOptions options_;
};

/// Plain ask/evaluate/tell loop under an evaluation budget. Only whole
/// populations are evaluated, so at most lambda - 1 evaluations go unused.
inline OptimizeResult run_lmmaes(LmMaEs& es, const Objective& objective, std::size_t budget,
                                 const StopCheck& stop = never_stop(),
                                 OptimizeResult resume_from = {}) {
  require(budget >= static_cast<std::size_t>(es.lambda()),
          "budget " + std::to_string(budget) + " is smaller than lambda=" + std::to_string(es.lambda()));
  OptimizeResult result = std::move(resume_from);
  BestTracker best;
  if (result.best.fitness) best.restore(result.best);
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
    TraceRow row;
    row.iteration = es.iteration();
    row.evaluations = result.evaluations;
    row.best_fitness = best.fitness();
    result.trace.push_back(row);
  }
  result.best = best.best();
  return result;
}

}  // namespace msample

#endif  // MSAMPLE_LMMAES_HPP
