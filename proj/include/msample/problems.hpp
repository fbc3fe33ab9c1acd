#ifndef MSAMPLE_PROBLEMS_HPP
#define MSAMPLE_PROBLEMS_HPP

#include <msample/core.hpp>
#include <msample/memory.hpp>  // nearest_rank_percentile
#include <msample/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace msample {

// ---------------------------------------------------------------------------
// Standard test functions, all with global minimum 0.

enum class BenchmarkKind { sphere, ellipsoid, rosenbrock, rastrigin };

inline std::string_view to_string(BenchmarkKind k) {
  switch (k) {
    case BenchmarkKind::sphere: return "sphere";
    case BenchmarkKind::ellipsoid: return "ellipsoid";
    case BenchmarkKind::rosenbrock: return "rosenbrock";
    case BenchmarkKind::rastrigin: return "rastrigin";
  }
  return "unknown";
}

inline BenchmarkKind parse_benchmark_kind(std::string_view name) {
  if (name == "sphere") return BenchmarkKind::sphere;
  if (name == "ellipsoid") return BenchmarkKind::ellipsoid;
  if (name == "rosenbrock") return BenchmarkKind::rosenbrock;
  if (name == "rastrigin") return BenchmarkKind::rastrigin;
  throw Error("unknown benchmark function '" + std::string(name) + "'");
}

inline double evaluate_benchmark_function(BenchmarkKind kind, const Eigen::VectorXd& x) {
  const Eigen::Index d = x.size();
  require(d >= 1, "benchmark function needs dim >= 1");
  switch (kind) {
    case BenchmarkKind::sphere:
      return x.squaredNorm();
    case BenchmarkKind::ellipsoid: {
      double s = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        const double e = d == 1 ? 0.0 : 6.0 * static_cast<double>(i) / static_cast<double>(d - 1);
        s += std::pow(10.0, e) * x[i] * x[i];
      }
      return s;
    }
    case BenchmarkKind::rosenbrock: {
      double s = 0.0;
      for (Eigen::Index i = 0; i + 1 < d; ++i) {
        const double a = x[i + 1] - x[i] * x[i];
        const double b = 1.0 - x[i];
        s += 100.0 * a * a + b * b;
      }
      return s;
    }
    case BenchmarkKind::rastrigin: {
      double s = 10.0 * static_cast<double>(d);
      for (Eigen::Index i = 0; i < d; ++i)
        s += x[i] * x[i] - 10.0 * std::cos(2.0 * std::numbers::pi * x[i]);
      return s;
    }
  }
  return 0.0;
}

inline Objective benchmark_objective(BenchmarkKind kind) {
  return [kind](const LatentVector& x) { return evaluate_benchmark_function(kind, x); };
}

// ---------------------------------------------------------------------------
// Synthetic identity embeddings.

/// Zipf-like cluster sizes (weight 1/rank), every cluster nonempty, summing
/// to n. Largest-remainder rounding.
inline std::vector<std::size_t> skewed_cluster_sizes(std::size_t n, std::size_t clusters) {
  require(clusters >= 1 && n >= clusters, "need n >= clusters >= 1");
  std::vector<double> w(clusters);
  for (std::size_t c = 0; c < clusters; ++c) w[c] = 1.0 / static_cast<double>(c + 1);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  const std::size_t spare = n - clusters;  // one identity per cluster is reserved
  std::vector<std::size_t> sizes(clusters, 1);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < clusters; ++c) {
    const double share = static_cast<double>(spare) * w[c] / total;
    const auto whole = static_cast<std::size_t>(std::floor(share));
    sizes[c] += whole;
    assigned += whole;
    remainders.emplace_back(share - static_cast<double>(whole), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < spare; ++k, ++assigned) sizes[remainders[k].second] += 1;
  return sizes;
}

inline EmbeddingVector random_unit_vector(Rng& rng, Eigen::Index dim) {
  EmbeddingVector v;
  do {
    v = standard_normal(rng, dim);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

/// Clustered unit-norm embeddings: identity = normalize(center + spread * noise)
/// with centers uniform on the sphere and skewed cluster sizes.
inline IdentityDataset make_dataset(std::size_t n, Eigen::Index e, std::size_t clusters,
                                    double spread, std::uint64_t seed,
                                    std::vector<std::size_t>* cluster_of = nullptr) {
  require(n >= 1 && clusters >= 1 && n >= clusters, "dataset needs n >= clusters >= 1");
  require(e >= 1, "embedding dimension must be >= 1");
  require(std::isfinite(spread) && spread >= 0.0, "spread must be finite and >= 0");
  Rng center_rng = make_rng(seed, "dataset-centers");
  Rng noise_rng = make_rng(seed, "dataset-noise");
  std::vector<EmbeddingVector> centers;
  for (std::size_t c = 0; c < clusters; ++c) centers.push_back(random_unit_vector(center_rng, e));
  const auto sizes = skewed_cluster_sizes(n, clusters);
  IdentityDataset data;
  data.ids.reserve(n);
  data.embeddings.reserve(n);
  if (cluster_of) cluster_of->clear();
  IdentityId next = 0;
  for (std::size_t c = 0; c < clusters; ++c) {
    for (std::size_t k = 0; k < sizes[c]; ++k) {
      EmbeddingVector v;
      do {
        v = centers[c] + spread * standard_normal(noise_rng, e);
      } while (v.norm() == 0.0);
      data.ids.push_back(next++);
      data.embeddings.push_back(v / v.norm());
      if (cluster_of) cluster_of->push_back(c);
    }
  }
  return data;
}

// ---------------------------------------------------------------------------
// Generator-embedder: a fixed smooth map from latent space onto the unit
// sphere whose range overlaps the identity region,
//
//   g(z) = normalize(A tanh(B z) + b0),
//
// A (e x q) holds scaled dataset embeddings as columns, B (q x d) and b0 are
// seeded Gaussians.

class GeneratorEmbedder {
 public:
  GeneratorEmbedder(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::VectorXd bias)
      : a_(std::move(a)), b_(std::move(b)), bias_(std::move(bias)) {
    require(a_.cols() == b_.rows(), "generator hidden dimensions disagree");
    require(bias_.size() == a_.rows(), "generator bias has the wrong length");
  }

  EmbeddingVector embed(const LatentVector& z) const {
    require(z.size() == b_.cols(), "latent length " + std::to_string(z.size()) +
                                       " does not match generator input " + std::to_string(b_.cols()));
    Eigen::VectorXd hidden = (b_ * z).array().tanh().matrix();
    EmbeddingVector out = a_ * hidden + bias_;
    const double norm = out.norm();
    if (norm == 0.0) {
      out = EmbeddingVector::Zero(out.size());
      out[0] = 1.0;
      return out;
    }
    return out / norm;
  }

  Eigen::Index latent_dim() const { return b_.cols(); }
  Eigen::Index embedding_dim() const { return a_.rows(); }
  Eigen::Index hidden_dim() const { return a_.cols(); }
  const Eigen::MatrixXd& mixing() const { return a_; }
  const Eigen::MatrixXd& projection() const { return b_; }
  const Eigen::VectorXd& bias() const { return bias_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd b_;
  Eigen::VectorXd bias_;
};

inline GeneratorEmbedder make_generator(const IdentityDataset& data, Eigen::Index d,
                                        Eigen::Index q, std::uint64_t seed,
                                        double bias_scale = 0.05) {
  require(!data.empty(), "generator needs a nonempty dataset");
  require(d >= 1 && q >= 1, "generator dimensions must be >= 1");
  const Eigen::Index e = data.dim();
  Rng rng = make_rng(seed, "generator");
  // q columns drawn without replacement while possible.
  std::vector<std::size_t> pool(data.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::shuffle(pool.begin(), pool.end(), rng);
  Eigen::MatrixXd a(e, q);
  const double column_scale = 1.0 / std::sqrt(static_cast<double>(q));
  for (Eigen::Index j = 0; j < q; ++j) {
    const auto& emb = data.embeddings[pool[static_cast<std::size_t>(j) % pool.size()]];
    a.col(j) = column_scale * emb / emb.norm();
  }
  Eigen::MatrixXd b(q, d);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < q; ++i) b(i, j) = normal(rng);
  Eigen::VectorXd bias = bias_scale / std::sqrt(static_cast<double>(e)) * standard_normal(rng, e);
  return GeneratorEmbedder(std::move(a), std::move(b), std::move(bias));
}

// ---------------------------------------------------------------------------
// Threshold calibration.

/// Distances of `pairs` uniformly sampled pairs of distinct identities.
inline std::vector<double> sample_pair_distances(const IdentityDataset& data, Metric metric,
                                                 std::size_t pairs, Rng& rng) {
  require(data.size() >= 2, "need at least two identities to sample pairs");
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  std::vector<double> out;
  out.reserve(pairs);
  for (std::size_t k = 0; k < pairs; ++k) {
    std::size_t i = pick(rng), j = pick(rng);
    while (j == i) j = pick(rng);
    out.push_back(distance(data.embeddings[i], data.embeddings[j], metric));
  }
  return out;
}

/// Threshold such that a random pair of distinct identities matches with
/// probability ~far_target: the smallest representable value above the
/// nearest-rank far_target-quantile of sampled pair distances, so exactly the
/// k smallest sampled pairs fall strictly below it.
inline MatchThreshold calibrate_theta(const IdentityDataset& data, Metric metric, double far_target,
                                      std::size_t sample_pairs, std::uint64_t seed) {
  require(far_target > 0.0 && far_target <= 1.0, "far_target must lie in (0, 1]");
  require(sample_pairs >= 1, "need at least one sampled pair");
  require(data.size() >= 2, "need at least two identities");
  bool all_identical = true;
  for (std::size_t i = 1; i < data.size() && all_identical; ++i)
    all_identical = data.embeddings[i] == data.embeddings[0];
  require(!all_identical, "cannot calibrate a threshold on a dataset of identical embeddings");
  Rng rng = make_rng(seed, "calibrate");
  auto dist = sample_pair_distances(data, metric, sample_pairs, rng);
  const double q = nearest_rank_percentile(std::move(dist), 100.0 * far_target);
  double theta = std::nextafter(q, std::numeric_limits<double>::infinity());
  if (theta <= 0.0) theta = std::numeric_limits<double>::min();
  return MatchThreshold(theta);
}

/// Fraction of sampled distinct pairs that match.
inline double measure_far(const IdentityDataset& data, Metric metric, MatchThreshold theta,
                          std::size_t sample_pairs, std::uint64_t seed) {
  Rng rng = make_rng(seed, "measure-far");
  const auto dist = sample_pair_distances(data, metric, sample_pairs, rng);
  const auto hits = std::count_if(dist.begin(), dist.end(), [&](double v) { return v < theta.value(); });
  return static_cast<double>(hits) / static_cast<double>(dist.size());
}

// ---------------------------------------------------------------------------
// Synthetic master-sample benchmark.

struct BenchmarkSpec {
  std::size_t n = 5749;
  Eigen::Index e = 128;
  Eigen::Index d = 512;
  Eigen::Index q = 64;
  std::size_t clusters = 20;
  double spread = 0.25;
  Metric metric = Metric::cosine;
  double far_target = 0.001;
  std::uint64_t seed = 0;
  std::size_t sample_pairs = 200000;
  std::optional<double> theta;  // fixed threshold instead of calibration
  double train_fraction = 0.7;
};

inline nlohmann::json to_json(const BenchmarkSpec& s) {
  nlohmann::json j = {{"n", s.n},
                      {"e", s.e},
                      {"d", s.d},
                      {"q", s.q},
                      {"clusters", s.clusters},
                      {"spread", s.spread},
                      {"metric", std::string(to_string(s.metric))},
                      {"far_target", s.far_target},
                      {"seed", s.seed},
                      {"sample_pairs", s.sample_pairs},
                      {"train_fraction", s.train_fraction}};
  if (s.theta) j["theta"] = *s.theta;
  return j;
}

/// Parses a benchmark spec. Unknown keys are collected into `errors`.
inline BenchmarkSpec benchmark_spec_from_json(const nlohmann::json& j, std::vector<std::string>& errors,
                                              const std::string& where = "problem") {
  BenchmarkSpec s;
  if (!j.is_object()) {
    errors.push_back(where + ": must be an object");
    return s;
  }
  static const std::set<std::string> known = {"n", "e", "d", "q", "clusters", "spread", "metric",
                                              "far_target", "seed", "sample_pairs", "theta",
                                              "train_fraction"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) errors.push_back(where + "." + key + ": unknown field");
  auto get = [&](const char* key, auto& out) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(out);
    } catch (const std::exception& ex) {
      errors.push_back(where + "." + key + ": " + ex.what());
    }
  };
  get("n", s.n);
  get("e", s.e);
  get("d", s.d);
  get("q", s.q);
  get("clusters", s.clusters);
  get("spread", s.spread);
  get("far_target", s.far_target);
  get("seed", s.seed);
  get("sample_pairs", s.sample_pairs);
  get("train_fraction", s.train_fraction);
  if (j.contains("theta")) {
    double t = 0.0;
    get("theta", t);
    s.theta = t;
  }
  if (j.contains("metric")) {
    try {
      s.metric = parse_metric(j.at("metric").get<std::string>());
    } catch (const std::exception& ex) {
      errors.push_back(where + ".metric: " + ex.what());
    }
  }
  if (s.n < 2) errors.push_back(where + ".n: must be >= 2");
  if (s.clusters < 1 || s.clusters > s.n) errors.push_back(where + ".clusters: must lie in [1, n]");
  if (s.e < 1) errors.push_back(where + ".e: must be >= 1");
  if (s.d < 1) errors.push_back(where + ".d: must be >= 1");
  if (s.q < 1) errors.push_back(where + ".q: must be >= 1");
  if (!(s.spread >= 0.0)) errors.push_back(where + ".spread: must be >= 0");
  if (!(s.far_target > 0.0 && s.far_target <= 1.0)) errors.push_back(where + ".far_target: must lie in (0, 1]");
  if (s.sample_pairs < 1) errors.push_back(where + ".sample_pairs: must be >= 1");
  if (s.theta && !(*s.theta > 0.0)) errors.push_back(where + ".theta: must be > 0");
  if (!(s.train_fraction > 0.0 && s.train_fraction < 1.0))
    errors.push_back(where + ".train_fraction: must lie in (0, 1)");
  return s;
}

inline BenchmarkSpec benchmark_spec_from_json(const nlohmann::json& j) {
  std::vector<std::string> errors;
  auto s = benchmark_spec_from_json(j, errors);
  if (!errors.empty()) {
    std::string msg = "invalid benchmark spec:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw Error(msg);
  }
  return s;
}

/// Dataset, generator, matcher settings and a seeded train/test split.
struct SyntheticBenchmark {
  BenchmarkSpec spec;
  IdentityDataset dataset;
  std::vector<std::size_t> cluster_of;
  GeneratorEmbedder gen;
  Metric metric;
  MatchThreshold theta;
  std::vector<IdentityId> train_ids;
  std::vector<IdentityId> test_ids;

  IdentityDataset train() const { return dataset.subset(train_ids); }
  IdentityDataset test() const { return dataset.subset(test_ids); }
};

/// Seeded permutation split; the first floor(fraction * n) ids (clamped to
/// [1, n-1]) form the training set. Both halves come back sorted.
inline std::pair<std::vector<IdentityId>, std::vector<IdentityId>> split_ids(
    const std::vector<IdentityId>& ids, double train_fraction, std::uint64_t seed) {
  require(ids.size() >= 2, "need at least two identities to split");
  std::vector<IdentityId> perm = ids;
  Rng rng = make_rng(seed, "split");
  std::shuffle(perm.begin(), perm.end(), rng);
  auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(ids.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, ids.size() - 1);
  std::vector<IdentityId> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<IdentityId> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

inline SyntheticBenchmark make_benchmark(const BenchmarkSpec& spec) {
  std::vector<std::size_t> cluster_of;
  auto data = make_dataset(spec.n, spec.e, spec.clusters, spec.spread, spec.seed, &cluster_of);
  auto gen = make_generator(data, spec.d, spec.q, spec.seed);
  const MatchThreshold theta = spec.theta ? MatchThreshold(*spec.theta)
                                          : calibrate_theta(data, spec.metric, spec.far_target,
                                                            spec.sample_pairs, spec.seed);
  auto [train, test] = split_ids(data.ids, spec.train_fraction, spec.seed);
  return SyntheticBenchmark{spec,  std::move(data), std::move(cluster_of), std::move(gen),
                            spec.metric, theta,     std::move(train),      std::move(test)};
}

}  // namespace msample

#endif  // MSAMPLE_PROBLEMS_HPP
