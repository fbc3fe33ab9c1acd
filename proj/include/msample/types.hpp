#ifndef MSAMPLE_TYPES_HPP
#define MSAMPLE_TYPES_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

namespace msample {

/// A point in the optimizer's search space (the generator's latent input).
using LatentVector = Eigen::VectorXd;

/// A point in the matcher's embedding space.
using EmbeddingVector = Eigen::VectorXd;

/// Scalar objective over latent vectors; lower is better.
using Objective = std::function<double(const LatentVector&)>;

using IdentityId = std::int64_t;

/// Raised for violated preconditions on user-supplied values.
class Error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A latent vector with an optional evaluated fitness.
struct Candidate {
  LatentVector latent;
  std::optional<double> fitness;

  bool evaluated() const { return fitness.has_value(); }
};

inline bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(message);
}

}  // namespace msample

#endif  // MSAMPLE_TYPES_HPP
