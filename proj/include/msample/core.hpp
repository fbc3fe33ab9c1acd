#ifndef MSAMPLE_CORE_HPP
#define MSAMPLE_CORE_HPP

#include <msample/types.hpp>

#include <algorithm>
#include <concepts>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace msample {

enum class Metric { cosine, euclidean };

inline std::string_view to_string(Metric m) {
  return m == Metric::cosine ? "cosine" : "euclidean";
}

inline Metric parse_metric(std::string_view name) {
  if (name == "cosine") return Metric::cosine;
  if (name == "euclidean") return Metric::euclidean;
  throw Error("unknown metric '" + std::string(name) + "' (expected cosine|euclidean)");
}

/// Distance below which two embeddings are considered the same identity.
class MatchThreshold {
 public:
  explicit MatchThreshold(double theta) : theta_(theta) {
    require(std::isfinite(theta) && theta > 0.0, "match threshold must be finite and > 0");
  }
  double value() const { return theta_; }

 private:
  double theta_;
};

namespace detail {

// Both the pairwise and the bulk paths funnel through these so that a match
// decision never depends on which path computed it.
inline double cosine_distance(const Eigen::VectorXd& a, double norm_a, const Eigen::VectorXd& b,
                              double norm_b) {
  return 1.0 - a.dot(b) / (norm_a * norm_b);
}

inline double euclidean_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm();
}

}  // namespace detail

inline double distance(const EmbeddingVector& a, const EmbeddingVector& b, Metric metric) {
  require(a.size() == b.size(), "embedding dimension mismatch: " + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()));
  if (metric == Metric::euclidean) return detail::euclidean_distance(a, b);
  const double na = a.norm();
  const double nb = b.norm();
  require(na > 0.0 && nb > 0.0, "cosine distance is undefined for a zero vector");
  return detail::cosine_distance(a, na, b, nb);
}

/// True iff distance(a, b) < theta.
inline bool matches(const EmbeddingVector& a, const EmbeddingVector& b, Metric metric,
                    MatchThreshold theta) {
  return distance(a, b, metric) < theta.value();
}

/// Embedded identities, one embedding per identity.
struct IdentityDataset {
  std::vector<IdentityId> ids;
  std::vector<EmbeddingVector> embeddings;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  Eigen::Index dim() const { return embeddings.empty() ? 0 : embeddings.front().size(); }

  void validate() const {
    require(ids.size() == embeddings.size(), "dataset ids and embeddings differ in length");
    std::unordered_set<IdentityId> seen;
    seen.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      require(seen.insert(ids[i]).second, "duplicate identity id " + std::to_string(ids[i]));
      require(embeddings[i].size() == dim(), "identity " + std::to_string(ids[i]) +
                                                 " has embedding length " +
                                                 std::to_string(embeddings[i].size()));
      require(embeddings[i].allFinite(), "identity " + std::to_string(ids[i]) +
                                             " has a non-finite embedding");
    }
  }

  /// Identities whose id is in `keep`, preserving this dataset's order.
  IdentityDataset subset(std::span<const IdentityId> keep) const {
    std::unordered_set<IdentityId> wanted(keep.begin(), keep.end());
    IdentityDataset out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (wanted.count(ids[i])) {
        out.ids.push_back(ids[i]);
        out.embeddings.push_back(embeddings[i]);
      }
    }
    return out;
  }

  /// Identities whose id is not in `drop`.
  IdentityDataset without(std::span<const IdentityId> drop) const {
    std::unordered_set<IdentityId> removed(drop.begin(), drop.end());
    IdentityDataset out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!removed.count(ids[i])) {
        out.ids.push_back(ids[i]);
        out.embeddings.push_back(embeddings[i]);
      }
    }
    return out;
  }
};

/// Maps a latent vector to an embedding. The composite generator + face
/// descriptor of a real attack collapses to one of these.
template <class G>
concept Embedder = requires(const G& g, const LatentVector& z) {
  { g.embed(z) } -> std::convertible_to<EmbeddingVector>;
  { g.latent_dim() } -> std::convertible_to<Eigen::Index>;
  { g.embedding_dim() } -> std::convertible_to<Eigen::Index>;
};

/// Bulk matcher over a fixed dataset. Caches the dataset norms; every match
/// decision is bit-identical to `matches()` on the same pair.
class Matcher {
 public:
  Matcher(const IdentityDataset& data, Metric metric, MatchThreshold theta)
      : data_(&data), metric_(metric), theta_(theta) {
    if (metric_ == Metric::cosine) {
      norms_.reserve(data.size());
      for (const auto& e : data.embeddings) {
        const double n = e.norm();
        require(n > 0.0, "cosine matching requires nonzero dataset embeddings");
        norms_.push_back(n);
      }
    }
  }

  const IdentityDataset& data() const { return *data_; }
  Metric metric() const { return metric_; }
  MatchThreshold theta() const { return theta_; }

  template <class Visit>
  void for_each_match(const EmbeddingVector& query, Visit&& visit) const {
    require(query.size() == data_->dim(), "query embedding has length " +
                                              std::to_string(query.size()) + ", dataset uses " +
                                              std::to_string(data_->dim()));
    const auto& emb = data_->embeddings;
    const double theta = theta_.value();
    if (metric_ == Metric::cosine) {
      const double nq = query.norm();
      require(nq > 0.0, "cosine distance is undefined for a zero vector");
      for (std::size_t i = 0; i < emb.size(); ++i)
        if (detail::cosine_distance(query, nq, emb[i], norms_[i]) < theta) visit(i);
    } else {
      for (std::size_t i = 0; i < emb.size(); ++i)
        if (detail::euclidean_distance(query, emb[i]) < theta) visit(i);
    }
  }

  std::size_t count(const EmbeddingVector& query) const {
    std::size_t n = 0;
    for_each_match(query, [&](std::size_t) { ++n; });
    return n;
  }

  /// Matched identity ids in ascending order.
  std::vector<IdentityId> matched_ids(const EmbeddingVector& query) const {
    std::vector<IdentityId> out;
    for_each_match(query, [&](std::size_t i) { out.push_back(data_->ids[i]); });
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  const IdentityDataset* data_;
  Metric metric_;
  MatchThreshold theta_;
  std::vector<double> norms_;
};

/// Fraction of identities NOT matched by the embedding: 0 is full coverage.
/// Counts are integers divided once at the end.
inline double unmatched_fraction(std::size_t matched, std::size_t n) {
  return static_cast<double>(n - matched) / static_cast<double>(n);
}

inline double msc_from_count(std::size_t matched, std::size_t n) {
  return 100.0 * static_cast<double>(matched) / static_cast<double>(n);
}

template <Embedder G>
double coverage_fitness(const LatentVector& z, const G& gen, const IdentityDataset& data,
                        Metric metric, MatchThreshold theta) {
  require(!data.empty(), "coverage fitness needs a nonempty dataset");
  require(z.size() == gen.latent_dim(), "latent length does not match the generator input");
  Matcher matcher(data, metric, theta);
  return unmatched_fraction(matcher.count(gen.embed(z)), data.size());
}

/// Percentage of identities falsely accepted for `emb`.
inline double msc_score(const EmbeddingVector& emb, const IdentityDataset& data, Metric metric,
                        MatchThreshold theta) {
  require(!data.empty(), "MSC needs a nonempty dataset");
  Matcher matcher(data, metric, theta);
  return msc_from_count(matcher.count(emb), data.size());
}

/// Reusable coverage objective over a fixed dataset; the fitness that the
/// optimizers minimize.
template <Embedder G>
class CoverageObjective {
 public:
  CoverageObjective(const G& gen, const IdentityDataset& data, Metric metric,
                    MatchThreshold theta)
      : gen_(&gen), matcher_(data, metric, theta) {
    require(!data.empty(), "coverage fitness needs a nonempty dataset");
    require(gen.embedding_dim() == data.dim(), "generator output dimension " +
                                                   std::to_string(gen.embedding_dim()) +
                                                   " does not match dataset dimension " +
                                                   std::to_string(data.dim()));
  }

  double operator()(const LatentVector& z) const {
    require(z.size() == gen_->latent_dim(), "latent length does not match the generator input");
    return unmatched_fraction(matcher_.count(gen_->embed(z)), matcher_.data().size());
  }

  const Matcher& matcher() const { return matcher_; }

 private:
  const G* gen_;
  Matcher matcher_;
};

/// Identity map for d = e toy problems.
struct IdentityEmbedder {
  Eigen::Index dim;
  EmbeddingVector embed(const LatentVector& z) const { return z; }
  Eigen::Index latent_dim() const { return dim; }
  Eigen::Index embedding_dim() const { return dim; }
};

}  // namespace msample

#endif  // MSAMPLE_CORE_HPP
