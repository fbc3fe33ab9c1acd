#ifndef MSAMPLE_SUCCESS_PREDICTOR_HPP
#define MSAMPLE_SUCCESS_PREDICTOR_HPP

// Classifier-assisted LM-MA-ES.
//
// Every evaluated candidate goes into a finite memory. After each memory
// update the memory is relabeled (1 = fitness strictly below the p-th
// percentile of the memory) and the classifier is trained for one epoch.
// After a warm-up, each iteration samples lambda' > lambda candidates, scores
// them with the classifier, turns the scores into a softmax distribution and
// draws lambda distinct candidates from it; only those are evaluated and
// handed to the strategy. An accuracy monitor re-initializes the classifier
// after T consecutive iterations whose prediction accuracy is below tau_acc.

#include <msample/classifier.hpp>
#include <msample/lmmaes.hpp>
#include <msample/memory.hpp>
#include <msample/optimize.hpp>

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace msample {

struct PredictorConfig {
  double percentile = 5.0;
  int lambda_prime = 1000;
  std::size_t capacity = 5000;
  double warmup_fraction = 0.05;
  double tau_acc = 0.6;
  int patience = 20;  // T
  double sigma0 = 0.3;
  ClassifierOptions classifier;

  void validate(int lambda) const {
    require(percentile > 0.0 && percentile < 100.0, "percentile must lie in (0, 100)");
    require(lambda_prime > lambda, "lambda_prime must exceed lambda=" + std::to_string(lambda));
    require(capacity >= 1, "memory capacity must be >= 1");
    require(warmup_fraction >= 0.0 && warmup_fraction < 1.0, "warmup_fraction must lie in [0, 1)");
    require(tau_acc >= 0.0 && tau_acc <= 1.0, "tau_acc must lie in [0, 1]");
    require(patience >= 1, "patience T must be >= 1");
    require(sigma0 > 0.0, "sigma0 must be > 0");
  }
};

/// Draws `count` distinct indices, each draw proportional to the softmax of
/// the remaining scores. Returned in selection order.
inline std::vector<std::size_t> softmax_sample(std::span<const double> scores, std::size_t count,
                                               Rng& rng) {
  require(count <= scores.size(), "cannot select " + std::to_string(count) + " of " +
                                      std::to_string(scores.size()) + " candidates");
  if (count == 0) return {};
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> weight(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) weight[i] = std::exp(scores[i] - top);
  std::vector<std::size_t> chosen;
  chosen.reserve(count);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < count; ++k) {
    double total = 0.0;
    for (double w : weight) total += w;
    const double target = unit(rng) * total;
    double acc = 0.0;
    std::size_t pick = scores.size();
    std::size_t last_live = scores.size();
    for (std::size_t i = 0; i < weight.size(); ++i) {
      if (weight[i] <= 0.0) continue;
      last_live = i;
      acc += weight[i];
      if (target < acc) {
        pick = i;
        break;
      }
    }
    if (pick == scores.size()) pick = last_live;  // rounding at the top end
    chosen.push_back(pick);
    weight[pick] = 0.0;
  }
  return chosen;
}

/// Tracks consecutive low-accuracy iterations.
class AccuracyMonitor {
 public:
  AccuracyMonitor(double tau_acc, int patience) : tau_acc_(tau_acc), patience_(patience) {
    require(patience >= 1, "patience must be >= 1");
  }

  struct Update {
    double accuracy;
    bool reinit;
  };

  /// A prediction is correct when (score > 0.5) agrees with
  /// (fitness < threshold).
  Update update(std::span<const double> scores, std::span<const double> fitness, double threshold) {
    require(!scores.empty() && scores.size() == fitness.size(),
            "monitor needs one score per evaluated candidate");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      require(std::isfinite(scores[i]) && std::isfinite(fitness[i]),
              "monitor needs finite scores and fitness values");
      if ((scores[i] > 0.5) == (fitness[i] < threshold)) ++correct;
    }
    const double accuracy = static_cast<double>(correct) / static_cast<double>(scores.size());
    return record(accuracy);
  }

  Update record(double accuracy) {
    if (accuracy < tau_acc_) {
      ++consecutive_low_;
    } else {
      consecutive_low_ = 0;
    }
    bool reinit = false;
    if (consecutive_low_ >= patience_) {
      reinit = true;
      consecutive_low_ = 0;
    }
    return {accuracy, reinit};
  }

  int consecutive_low() const { return consecutive_low_; }
  double tau_acc() const { return tau_acc_; }
  int patience() const { return patience_; }

 private:
  double tau_acc_;
  int patience_;
  int consecutive_low_ = 0;
};

/// Memory, classifier and monitor with their random streams.
class SuccessPredictor {
 public:
  using Classifier = SuccessClassifier<float>;

  SuccessPredictor(Eigen::Index dim, const PredictorConfig& config, std::uint64_t seed)
      : config_(config),
        memory_(config.capacity),
        init_rng_(make_rng(seed, "classifier-init")),
        train_rng_(make_rng(seed, "classifier-train")),
        memory_rng_(make_rng(seed, "memory")),
        filter_rng_(make_rng(seed, "filter")),
        classifier_(dim, init_rng_, config.classifier),
        monitor_(config.tau_acc, config.patience) {}

  const CandidateMemory& memory() const { return memory_; }
  const Classifier& classifier() const { return classifier_; }
  const AccuracyMonitor& monitor() const { return monitor_; }

  void remember(std::span<const Candidate> evaluated) { memory_.insert(evaluated, memory_rng_); }

  double threshold() const { return percentile_threshold(memory_, config_.percentile); }

  double train() {
    const auto labels = label_memory(memory_, config_.percentile);
    return classifier_.train_epoch(memory_, labels, train_rng_);
  }

  /// Inference-mode success probabilities for a pool of latents.
  std::vector<double> score(std::span<const LatentVector> pool) const {
    if (pool.empty()) return {};
    Classifier::Mat x(classifier_.input_dim(), static_cast<Eigen::Index>(pool.size()));
    for (std::size_t i = 0; i < pool.size(); ++i) x.col(static_cast<Eigen::Index>(i)) = pool[i].cast<float>();
    const auto p = classifier_.forward(x, Mode::infer);
    return std::vector<double>(p.data(), p.data() + p.size());
  }

  struct Selection {
    std::vector<std::size_t> indices;  // into the pool, in selection order
    std::vector<double> scores;        // all pool scores
  };

  /// Scores the pool and samples `lambda` distinct members from softmax(scores).
  Selection filter(std::span<const LatentVector> pool, int lambda) {
    require(lambda >= 1 && pool.size() >= static_cast<std::size_t>(lambda),
            "filter needs lambda' >= lambda");
    Selection s;
    s.scores = score(pool);
    s.indices = softmax_sample(s.scores, static_cast<std::size_t>(lambda), filter_rng_);
    return s;
  }

  /// Judges earlier predictions against the true fitness; on the T-th
  /// consecutive low-accuracy iteration the classifier is re-initialized
  /// (memory is kept).
  AccuracyMonitor::Update monitor_update(std::span<const double> scores,
                                         std::span<const double> fitness, double threshold) {
    auto u = monitor_.update(scores, fitness, threshold);
    if (u.reinit) classifier_.reinitialize(init_rng_);
    return u;
  }

 private:
  PredictorConfig config_;
  CandidateMemory memory_;
  Rng init_rng_;
  Rng train_rng_;
  Rng memory_rng_;
  Rng filter_rng_;
  Classifier classifier_;
  AccuracyMonitor monitor_;
};

struct AssistedSchedule {
  std::size_t iterations;
  std::size_t warmup_iterations;
};

inline AssistedSchedule assisted_schedule(std::size_t budget, int lambda, double warmup_fraction) {
  require(lambda >= 1 && budget >= static_cast<std::size_t>(lambda),
          "budget " + std::to_string(budget) + " is smaller than lambda=" + std::to_string(lambda));
  const std::size_t iterations = budget / static_cast<std::size_t>(lambda);
  const auto warmup =
      static_cast<std::size_t>(std::floor(warmup_fraction * static_cast<double>(iterations)));
  return {iterations, warmup};
}

/// LM-MA-ES with success-predictor filtering. Starts at the origin with step
/// size config.sigma0; every true fitness evaluation counts against `budget`.
inline OptimizeResult assisted_optimize(const Objective& objective, Eigen::Index dim,
                                        std::size_t budget, const PredictorConfig& config,
                                        std::uint64_t seed, LmMaEsOptions es_options = {},
                                        const StopCheck& stop = never_stop()) {
  LmMaEs es(LatentVector::Zero(dim), config.sigma0, derive_seed(seed, "optimizer"), es_options);
  config.validate(es.lambda());
  const auto schedule = assisted_schedule(budget, es.lambda(), config.warmup_fraction);
  SuccessPredictor predictor(dim, config, derive_seed(seed, "predictor"));

  OptimizeResult result;
  BestTracker best;
  const auto lambda = static_cast<std::size_t>(es.lambda());
  std::vector<Candidate> evaluated(lambda);
  for (std::size_t it = 0; it < schedule.iterations; ++it) {
    if (stop()) {
      result.truncated = true;
      break;
    }
    TraceRow row;
    std::vector<LmMaEsOffspring> population;
    std::vector<double> chosen_scores;
    const bool filtering = it >= schedule.warmup_iterations;
    if (!filtering) {
      population = es.ask(es.lambda());
    } else {
      auto pool = es.ask(config.lambda_prime);
      std::vector<LatentVector> latents;
      latents.reserve(pool.size());
      for (const auto& o : pool) latents.push_back(o.x);
      const auto sel = predictor.filter(latents, es.lambda());
      row.mean_pool_score =
          std::accumulate(sel.scores.begin(), sel.scores.end(), 0.0) / static_cast<double>(sel.scores.size());
      population.reserve(lambda);
      for (auto idx : sel.indices) {
        population.push_back(std::move(pool[idx]));
        chosen_scores.push_back(sel.scores[idx]);
      }
    }

    std::vector<double> fitness(lambda);
    for (std::size_t k = 0; k < lambda; ++k) {
      const double f = objective(population[k].x);
      population[k].fitness = f;
      fitness[k] = f;
      best.offer(population[k].x, f);
      evaluated[k].latent = population[k].x;
      evaluated[k].fitness = f;
    }
    result.evaluations += lambda;

    // Predictions are judged against the memory they were made from.
    const double threshold = filtering ? predictor.threshold() : 0.0;
    predictor.remember(evaluated);
    es.tell(population);
    if (filtering) {
      const auto u = predictor.monitor_update(chosen_scores, fitness, threshold);
      row.monitor_accuracy = u.accuracy;
      row.reinit = u.reinit;
    }
    predictor.train();

    row.iteration = es.iteration();
    row.evaluations = result.evaluations;
    row.best_fitness = best.fitness();
    result.trace.push_back(row);
  }
  result.best = best.best();
  return result;
}

}  // namespace msample

#endif  // MSAMPLE_SUCCESS_PREDICTOR_HPP
