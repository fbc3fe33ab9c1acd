#ifndef MSAMPLE_RNG_HPP
#define MSAMPLE_RNG_HPP

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace msample {

using Rng = std::mt19937_64;

// Seed derivation
// ---------------
//
// Every random stream in a run is derived from the run's root seed and a
// textual tag naming the consumer ("optimizer", "memory", "filter", ...) plus
// an optional counter (greedy iteration, cluster index). The derived seed is
//
//   splitmix64(splitmix64(root ^ fnv1a64(tag)) + index)
//
// so streams are independent of the order in which components are created,
// and parallel evaluation of a population cannot perturb any stream.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                    std::uint64_t index = 0) {
  return splitmix64(splitmix64(root ^ fnv1a64(tag)) + index);
}

inline Rng make_rng(std::uint64_t root, std::string_view tag, std::uint64_t index = 0) {
  return Rng(derive_seed(root, tag, index));
}

inline Eigen::VectorXd standard_normal(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline std::string rng_state(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

inline Rng rng_from_state(const std::string& state) {
  Rng rng;
  std::istringstream in(state);
  in >> rng;
  return rng;
}

}  // namespace msample

#endif  // MSAMPLE_RNG_HPP
