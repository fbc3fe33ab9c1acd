#ifndef MSAMPLE_COVERAGE_HPP
#define MSAMPLE_COVERAGE_HPP

// Multi-master dataset coverage.
//
// greedy_coverage repeats a single-master search against the identities not
// yet covered, so each master is credited only with identities that no
// earlier master matched. cluster_partition_coverage is the per-cluster
// baseline, and kmeans_coverage_bound measures how much of the dataset k
// unconstrained embedding-space centroids could cover.

#include <msample/core.hpp>
#include <msample/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <vector>

namespace msample {

/// Ids in `data` matched by `emb`, ascending.
inline std::vector<IdentityId> find_matched(const IdentityDataset& data, const EmbeddingVector& emb,
                                            Metric metric, MatchThreshold theta) {
  require(!data.empty(), "find_matched needs a nonempty dataset");
  return Matcher(data, metric, theta).matched_ids(emb);
}

/// Single-master search: minimizes `objective` over latents of length `dim`
/// using the given seed and returns the best latent found.
using MasterSearch =
    std::function<LatentVector(const Objective& objective, Eigen::Index dim, std::uint64_t seed)>;

struct CoverageStep {
  LatentVector latent;
  EmbeddingVector embedding;
  std::vector<IdentityId> matched;  // newly covered ids, ascending
  std::size_t target_size = 0;      // identities the search optimized against
  double msc_target = 0.0;          // 100 * |matched| / target_size
  double msc_full = 0.0;            // 100 * |matched| / n
  double cumulative_percent = 0.0;  // after this step
};

struct CoverageReport {
  std::string mode;
  std::size_t dataset_size = 0;
  std::vector<CoverageStep> steps;
  double cumulative_percent = 0.0;
  std::vector<std::string> notes;

  std::size_t covered_count() const {
    std::size_t c = 0;
    for (const auto& s : steps) c += s.matched.size();
    return c;
  }
};

inline nlohmann::json to_json(const CoverageReport& r) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& s = r.steps[i];
    steps.push_back({{"iteration", i + 1},
                     {"latent", vec(s.latent)},
                     {"embedding", vec(s.embedding)},
                     {"matched_ids", s.matched},
                     {"target_size", s.target_size},
                     {"msc_target", s.msc_target},
                     {"msc_full", s.msc_full},
                     {"cumulative_percent", s.cumulative_percent}});
  }
  return {{"format", "coverage-report"},
          {"version", 1},
          {"mode", r.mode},
          {"dataset_size", r.dataset_size},
          {"cumulative_percent", r.cumulative_percent},
          {"notes", r.notes},
          {"masters", steps}};
}

template <Embedder G>
CoverageReport greedy_coverage(const G& gen, const IdentityDataset& data, Metric metric,
                               MatchThreshold theta, std::size_t max_iter,
                               const MasterSearch& search, std::uint64_t seed,
                               std::size_t zero_gain_patience = 2) {
  require(!data.empty(), "greedy coverage needs a nonempty dataset");
  require(max_iter >= 1, "max_iter must be >= 1");
  CoverageReport report;
  report.mode = "greedy";
  report.dataset_size = data.size();
  IdentityDataset remaining = data;
  std::size_t covered = 0;
  std::size_t zero_streak = 0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    if (remaining.empty()) {
      report.notes.push_back("dataset fully covered after " + std::to_string(it) + " iterations");
      break;
    }
    CoverageObjective<G> objective(gen, remaining, metric, theta);
    const LatentVector z = search(std::cref(objective), gen.latent_dim(), derive_seed(seed, "greedy", it));
    CoverageStep step;
    step.latent = z;
    step.embedding = gen.embed(z);
    step.matched = find_matched(remaining, step.embedding, metric, theta);
    step.target_size = remaining.size();
    step.msc_target = msc_from_count(step.matched.size(), remaining.size());
    step.msc_full = msc_from_count(step.matched.size(), data.size());
    covered += step.matched.size();
    step.cumulative_percent = msc_from_count(covered, data.size());
    remaining = remaining.without(step.matched);
    const bool zero_gain = step.matched.empty();
    report.steps.push_back(std::move(step));
    zero_streak = zero_gain ? zero_streak + 1 : 0;
    if (zero_gain_patience > 0 && zero_streak >= zero_gain_patience) {
      const std::string note = "stopped after " + std::to_string(it + 1) + " iterations: " +
                               std::to_string(zero_streak) + " consecutive iterations covered nothing new";
      std::clog << "greedy coverage: " << note << '\n';
      report.notes.push_back(note);
      break;
    }
  }
  report.cumulative_percent = msc_from_count(covered, data.size());
  return report;
}

// ---------------------------------------------------------------------------
// KMeans (Lloyd iterations, k-means++ seeding, best of several restarts).

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 300;
  double tolerance = 1e-6;  // relative inertia change
};

struct KMeansResult {
  std::vector<EmbeddingVector> centroids;
  std::vector<std::size_t> assignment;
  double inertia = 0.0;
};

namespace detail {

inline std::pair<std::size_t, double> nearest_centroid(const EmbeddingVector& x,
                                                       const std::vector<EmbeddingVector>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = (x - centroids[c]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return {best, best_d};
}

inline std::vector<EmbeddingVector> kmeans_pp_seed(const std::vector<EmbeddingVector>& points,
                                                   std::size_t k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<EmbeddingVector> centroids;
  std::vector<bool> chosen(n, false);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t idx = first(rng);
  centroids.push_back(points[idx]);
  chosen[idx] = true;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = (points[i] - centroids[0]).squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        acc += d2[i];
        if (target < acc) {
          pick = i;
          break;
        }
      }
    }
    if (pick == n) {
      // Remaining points coincide with centroids (or rounding at the top end):
      // take the first unchosen point with the largest distance.
      double best = -1.0;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i] && d2[i] > best) {
          best = d2[i];
          pick = i;
        }
    }
    chosen[pick] = true;
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (points[i] - centroids.back()).squaredNorm());
  }
  return centroids;
}

inline KMeansResult lloyd(const std::vector<EmbeddingVector>& points, std::vector<EmbeddingVector> centroids,
                          const KMeansOptions& options) {
  const std::size_t n = points.size();
  const Eigen::Index dim = points.front().size();
  KMeansResult r;
  r.assignment.assign(n, 0);
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iterations; ++it) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto [c, d] = nearest_centroid(points[i], centroids);
      r.assignment[i] = c;
      inertia += d;
    }
    std::vector<EmbeddingVector> sums(centroids.size(), EmbeddingVector::Zero(dim));
    std::vector<std::size_t> counts(centroids.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[r.assignment[i]] += points[i];
      ++counts[r.assignment[i]];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c)
      if (counts[c] > 0) centroids[c] = sums[c] / static_cast<double>(counts[c]);
    const bool converged = previous - inertia <= options.tolerance * std::max(previous, 1e-300) ||
                           inertia == 0.0;
    previous = inertia;
    if (converged && it > 0) break;
  }
  r.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto [c, d] = nearest_centroid(points[i], centroids);
    r.assignment[i] = c;
    r.inertia += d;
  }
  r.centroids = std::move(centroids);
  return r;
}

}  // namespace detail

/// Euclidean KMeans on the embeddings (unit-normalized first under the cosine
/// metric); keeps the restart with the lowest inertia.
inline KMeansResult kmeans(const IdentityDataset& data, std::size_t k, Metric metric, std::uint64_t seed,
                           const KMeansOptions& options = {}) {
  require(!data.empty(), "kmeans needs a nonempty dataset");
  require(k >= 1 && k <= data.size(), "kmeans needs 1 <= k <= n (k=" + std::to_string(k) +
                                          ", n=" + std::to_string(data.size()) + ")");
  require(options.restarts >= 1 && options.max_iterations >= 1, "kmeans needs restarts, iterations >= 1");
  std::vector<EmbeddingVector> points = data.embeddings;
  if (metric == Metric::cosine)
    for (auto& p : points) {
      const double norm = p.norm();
      require(norm > 0.0, "cosine clustering needs nonzero embeddings");
      p /= norm;
    }
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.restarts; ++r) {
    Rng rng = make_rng(seed, "kmeans", static_cast<std::uint64_t>(r));
    auto result = detail::lloyd(points, detail::kmeans_pp_seed(points, k, rng), options);
    if (result.inertia < best.inertia) best = std::move(result);
  }
  return best;
}

/// Percent of identities within distance < theta of at least one centroid.
inline double centroid_coverage(const IdentityDataset& data, const std::vector<EmbeddingVector>& centroids,
                                Metric metric, MatchThreshold theta) {
  require(!data.empty(), "coverage of an empty dataset");
  Matcher matcher(data, metric, theta);
  std::vector<bool> hit(data.size(), false);
  for (const auto& c : centroids) matcher.for_each_match(c, [&](std::size_t i) { hit[i] = true; });
  return msc_from_count(static_cast<std::size_t>(std::count(hit.begin(), hit.end(), true)), data.size());
}

struct KMeansBound {
  std::vector<EmbeddingVector> centroids;
  double percent = 0.0;
};

inline KMeansBound kmeans_coverage_bound(const IdentityDataset& data, std::size_t k, Metric metric,
                                         MatchThreshold theta, int restarts, std::uint64_t seed) {
  KMeansOptions options;
  options.restarts = restarts;
  auto km = kmeans(data, k, metric, seed, options);
  return {km.centroids, centroid_coverage(data, km.centroids, metric, theta)};
}

/// One master per KMeans cluster, each optimized against its own members;
/// coverage is the union over the full dataset, each identity credited once.
template <Embedder G>
CoverageReport cluster_partition_coverage(const G& gen, const IdentityDataset& data, std::size_t k,
                                          Metric metric, MatchThreshold theta, const MasterSearch& search,
                                          std::uint64_t seed, int restarts = 10) {
  require(!data.empty(), "cluster coverage needs a nonempty dataset");
  KMeansOptions options;
  options.restarts = restarts;
  const auto km = kmeans(data, k, metric, derive_seed(seed, "partition"), options);
  CoverageReport report;
  report.mode = "cluster-partition";
  report.dataset_size = data.size();
  IdentityDataset uncovered = data;
  std::size_t covered = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<IdentityId> members;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (km.assignment[i] == c) members.push_back(data.ids[i]);
    if (members.empty()) {
      const std::string note = "cluster " + std::to_string(c) + " is empty; skipped";
      std::clog << "warning: " << note << '\n';
      report.notes.push_back(note);
      continue;
    }
    const IdentityDataset cluster = data.subset(members);
    CoverageObjective<G> objective(gen, cluster, metric, theta);
    const LatentVector z = search(std::cref(objective), gen.latent_dim(), derive_seed(seed, "cluster", c));
    CoverageStep step;
    step.latent = z;
    step.embedding = gen.embed(z);
    step.target_size = cluster.size();
    step.msc_target = msc_score(step.embedding, cluster, metric, theta);
    step.matched = uncovered.empty() ? std::vector<IdentityId>{}
                                     : find_matched(uncovered, step.embedding, metric, theta);
    step.msc_full = msc_from_count(step.matched.size(), data.size());
    covered += step.matched.size();
    step.cumulative_percent = msc_from_count(covered, data.size());
    uncovered = uncovered.without(step.matched);
    report.steps.push_back(std::move(step));
  }
  report.cumulative_percent = msc_from_count(covered, data.size());
  return report;
}

/// Recomputes every step's newly-covered set from scratch against the
/// dataset minus all earlier steps' sets. True iff all stored sets agree.
template <Embedder G>
bool verify_coverage_report(const CoverageReport& report, const G& gen, const IdentityDataset& data,
                            Metric metric, MatchThreshold theta) {
  IdentityDataset remaining = data;
  std::set<IdentityId> seen;
  std::size_t total = 0;
  for (const auto& step : report.steps) {
    if (gen.embed(step.latent) != step.embedding) return false;
    const auto recomputed =
        remaining.empty() ? std::vector<IdentityId>{} : find_matched(remaining, step.embedding, metric, theta);
    if (recomputed != step.matched) return false;
    for (auto id : step.matched)
      if (!seen.insert(id).second) return false;
    total += step.matched.size();
    remaining = remaining.without(step.matched);
  }
  return total == report.covered_count() &&
         report.cumulative_percent == msc_from_count(total, data.size());
}

}  // namespace msample

#endif  // MSAMPLE_COVERAGE_HPP
