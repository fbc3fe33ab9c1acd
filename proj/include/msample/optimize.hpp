#ifndef MSAMPLE_OPTIMIZE_HPP
#define MSAMPLE_OPTIMIZE_HPP

#include <msample/types.hpp>

#include <chrono>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace msample {

/// One row of a per-iteration optimizer trace.
struct TraceRow {
  std::size_t iteration = 0;
  std::size_t evaluations = 0;
  double best_fitness = std::numeric_limits<double>::infinity();
  std::optional<double> mean_pool_score;
  std::optional<double> monitor_accuracy;
  bool reinit = false;
};

struct OptimizeResult {
  Candidate best;
  std::vector<TraceRow> trace;
  std::size_t evaluations = 0;
  bool truncated = false;  // stopped early by a wall-clock guard
};

/// Best-so-far bookkeeping. Only a strictly better fitness replaces the
/// incumbent, so the earliest of equal candidates wins.
class BestTracker {
 public:
  bool offer(const LatentVector& latent, double fitness) {
    if (!best_.fitness || fitness < *best_.fitness) {
      best_.latent = latent;
      best_.fitness = fitness;
      return true;
    }
    return false;
  }
  const Candidate& best() const { return best_; }
  double fitness() const {
    return best_.fitness.value_or(std::numeric_limits<double>::infinity());
  }
  void restore(Candidate c) { best_ = std::move(c); }

 private:
  Candidate best_;
};

/// Cooperative stop flag polled between iterations.
using StopCheck = std::function<bool()>;

inline StopCheck never_stop() {
  return [] { return false; };
}

inline StopCheck stop_after_seconds(double seconds) {
  if (!(seconds > 0.0)) return never_stop();
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(seconds));
  return [deadline] { return std::chrono::steady_clock::now() >= deadline; };
}

}  // namespace msample

#endif  // MSAMPLE_OPTIMIZE_HPP
