#ifndef MSAMPLE_RANDOM_SEARCH_HPP
#define MSAMPLE_RANDOM_SEARCH_HPP

#include <msample/optimize.hpp>
#include <msample/rng.hpp>

namespace msample {

/// Independent draws from the latent prior N(0, I); keeps the best.
class RandomSearch {
 public:
  RandomSearch(Eigen::Index dim, std::uint64_t seed) : dim_(dim), rng_(seed) {
    require(dim >= 1, "random search needs dim >= 1");
  }

  void step(const Objective& objective) {
    LatentVector x = standard_normal(rng_, dim_);
    const double f = objective(x);
    best_.offer(x, f);
    ++evaluations_;
  }

  const Candidate& best() const { return best_.best(); }
  std::size_t evaluations() const { return evaluations_; }
  Eigen::Index dim() const { return dim_; }

 private:
  Eigen::Index dim_;
  Rng rng_;
  BestTracker best_;
  std::size_t evaluations_ = 0;
};

/// One trace row per `log_every` samples (and one for the final sample).
inline OptimizeResult run_random_search(RandomSearch& rs, const Objective& objective,
                                        std::size_t budget, std::size_t log_every = 1,
                                        const StopCheck& stop = never_stop()) {
  require(budget >= 1, "budget must be >= 1");
  require(log_every >= 1, "log_every must be >= 1");
  OptimizeResult result;
  while (rs.evaluations() < budget) {
    if (stop()) {
      result.truncated = true;
      break;
    }
    rs.step(objective);
    if (rs.evaluations() % log_every == 0 || rs.evaluations() == budget) {
      TraceRow row;
      row.iteration = rs.evaluations();
      row.evaluations = rs.evaluations();
      row.best_fitness = *rs.best().fitness;
      result.trace.push_back(row);
    }
  }
  result.evaluations = rs.evaluations();
  result.best = rs.best();
  return result;
}

}  // namespace msample

#endif  // MSAMPLE_RANDOM_SEARCH_HPP
