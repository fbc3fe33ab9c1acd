#ifndef MSAMPLE_MEMORY_HPP
#define MSAMPLE_MEMORY_HPP

#include <msample/rng.hpp>
#include <msample/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace msample {

struct MemoryEntry {
  LatentVector latent;
  double fitness;
};

/// Finite store of evaluated candidates. When over capacity, uniformly random
/// entries other than the current best are evicted.
class CandidateMemory {
 public:
  explicit CandidateMemory(std::size_t capacity) : capacity_(capacity) {
    require(capacity >= 1, "memory capacity must be >= 1");
  }

  void insert(std::span<const Candidate> candidates, Rng& rng) {
    for (const auto& c : candidates)
      require(c.fitness.has_value(), "memory accepts evaluated candidates only");
    for (const auto& c : candidates) {
      entries_.push_back({c.latent, *c.fitness});
      const std::size_t idx = entries_.size() - 1;
      if (entries_.size() == 1 || *c.fitness < entries_[best_].fitness) best_ = idx;
    }
    while (entries_.size() > capacity_) evict_one(rng);
  }

  void insert(const Candidate& c, Rng& rng) { insert(std::span<const Candidate>(&c, 1), rng); }

  const std::vector<MemoryEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t best_index() const {
    require(!empty(), "empty memory has no best entry");
    return best_;
  }
  const MemoryEntry& best() const { return entries_[best_index()]; }

 private:
  // Swap-remove of a uniformly chosen non-best entry.
  void evict_one(Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, entries_.size() - 2);
    std::size_t victim = pick(rng);
    if (victim >= best_) ++victim;
    const std::size_t last = entries_.size() - 1;
    if (victim != last) {
      std::swap(entries_[victim], entries_[last]);
      if (best_ == last) best_ = victim;
    }
    entries_.pop_back();
  }

  std::size_t capacity_;
  std::vector<MemoryEntry> entries_;
  std::size_t best_ = 0;
};

/// Nearest-rank percentile: the k-th smallest value, k = ceil(p/100 * N).
inline double nearest_rank_percentile(std::vector<double> values, double p) {
  require(!values.empty(), "percentile of an empty set");
  require(p > 0.0 && p <= 100.0, "percentile must lie in (0, 100]");
  const auto n = values.size();
  auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) / 100.0));
  k = std::clamp<std::size_t>(k, 1, n);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1), values.end());
  return values[k - 1];
}

inline double percentile_threshold(const CandidateMemory& mem, double p) {
  require(!mem.empty(), "percentile threshold of an empty memory");
  std::vector<double> f;
  f.reserve(mem.size());
  for (const auto& e : mem.entries()) f.push_back(e.fitness);
  return nearest_rank_percentile(std::move(f), p);
}

/// Labels aligned with mem.entries(): 1 iff fitness is strictly below the
/// p-th percentile of the memory.
inline std::vector<std::uint8_t> label_memory(const CandidateMemory& mem, double p) {
  const double threshold = percentile_threshold(mem, p);
  std::vector<std::uint8_t> labels;
  labels.reserve(mem.size());
  for (const auto& e : mem.entries()) labels.push_back(e.fitness < threshold ? 1 : 0);
  return labels;
}

}  // namespace msample

#endif  // MSAMPLE_MEMORY_HPP
