#ifndef MSAMPLE_DIFFERENTIAL_EVOLUTION_HPP
#define MSAMPLE_DIFFERENTIAL_EVOLUTION_HPP

// Classic DE/rand/1/bin with generation-synchronous greedy replacement.

#include <msample/optimize.hpp>
#include <msample/rng.hpp>

#include <vector>

namespace msample {

struct DeOptions {
  int population = 40;
  double f = 0.5;
  double cr = 0.9;
  double init_scale = 1.0;  // members start at center + init_scale * N(0, I)
};

class DifferentialEvolution {
 public:
  DifferentialEvolution(const LatentVector& center, std::uint64_t seed, DeOptions options = {})
      : center_(center), options_(options), rng_(seed) {
    require(options.population >= 4, "DE needs a population of at least 4");
    require(options.cr >= 0.0 && options.cr <= 1.0, "DE crossover rate must lie in [0, 1]");
    require(std::isfinite(options.f) && options.f >= 0.0, "DE differential weight must be >= 0");
    require(center.size() >= 1, "DE needs dim >= 1");
  }

  bool initialized() const { return !fitness_.empty(); }

  /// Samples and evaluates the initial population (population() evaluations).
  void initialize(const Objective& objective) {
    require(!initialized(), "DE population already initialized");
    members_.clear();
    for (int i = 0; i < options_.population; ++i) {
      LatentVector x = center_ + options_.init_scale * standard_normal(rng_, center_.size());
      const double f = objective(x);
      best_.offer(x, f);
      members_.push_back(std::move(x));
      fitness_.push_back(f);
      ++evaluations_;
    }
  }

  /// One generation; evaluates at most `max_evals` trials. Members whose trial
  /// was not evaluated are carried over unchanged.
  void step(const Objective& objective, std::size_t max_evals = SIZE_MAX) {
    require(initialized(), "DE step before initialize");
    const int np = options_.population;
    const Eigen::Index dim = center_.size();
    std::uniform_int_distribution<int> pick(0, np - 1);
    std::uniform_int_distribution<Eigen::Index> pick_dim(0, dim - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<LatentVector> next = members_;
    std::vector<double> next_fitness = fitness_;
    std::size_t used = 0;
    for (int i = 0; i < np && used < max_evals; ++i) {
      int r1, r2, r3;
      do { r1 = pick(rng_); } while (r1 == i);
      do { r2 = pick(rng_); } while (r2 == i || r2 == r1);
      do { r3 = pick(rng_); } while (r3 == i || r3 == r1 || r3 == r2);
      const LatentVector mutant = members_[r1] + options_.f * (members_[r2] - members_[r3]);
      LatentVector trial = members_[i];
      const Eigen::Index forced = pick_dim(rng_);
      for (Eigen::Index j = 0; j < dim; ++j)
        if (j == forced || unit(rng_) < options_.cr) trial[j] = mutant[j];
      const double f = objective(trial);
      ++used;
      ++evaluations_;
      best_.offer(trial, f);
      if (f <= fitness_[i]) {
        next[i] = std::move(trial);
        next_fitness[i] = f;
      }
    }
    members_ = std::move(next);
    fitness_ = std::move(next_fitness);
    ++generation_;
  }

  const std::vector<LatentVector>& members() const { return members_; }
  const std::vector<double>& fitness() const { return fitness_; }
  const Candidate& best() const { return best_.best(); }
  std::size_t evaluations() const { return evaluations_; }
  std::size_t generation() const { return generation_; }
  const DeOptions& options() const { return options_; }

 private:
  LatentVector center_;
  DeOptions options_;
  Rng rng_;
  std::vector<LatentVector> members_;
  std::vector<double> fitness_;
  BestTracker best_;
  std::size_t evaluations_ = 0;
  std::size_t generation_ = 0;
};

inline OptimizeResult run_de(DifferentialEvolution& de, const Objective& objective,
                             std::size_t budget, const StopCheck& stop = never_stop()) {
  require(budget >= static_cast<std::size_t>(de.options().population),
          "budget must cover the initial DE population");
  OptimizeResult result;
  de.initialize(objective);
  result.trace.push_back({0, de.evaluations(), *de.best().fitness, {}, {}, false});
  while (de.evaluations() < budget) {
    if (stop()) {
      result.truncated = true;
      break;
    }
    de.step(objective, budget - de.evaluations());
    result.trace.push_back({de.generation(), de.evaluations(), *de.best().fitness, {}, {}, false});
  }
  result.evaluations = de.evaluations();
  result.best = de.best();
  return result;
}

}  // namespace msample

#endif  // MSAMPLE_DIFFERENTIAL_EVOLUTION_HPP
