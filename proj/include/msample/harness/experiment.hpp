#ifndef MSAMPLE_HARNESS_EXPERIMENT_HPP
#define MSAMPLE_HARNESS_EXPERIMENT_HPP

// Experiment orchestration: single runs, multi-seed comparisons, coverage
// runs, threshold calibration and plots.
//
// Output layout under out_dir:
//   runs/<optimizer>/seed-<s>/trace.csv     per-iteration trace
//   runs/<optimizer>/seed-<s>/record.json   best latent, train/test MSC
//   runs/<optimizer>/seed-<s>/timing.json   wall time (excluded from the
//                                           byte-determinism guarantee)
//   summary.csv, summary.json, runs.csv     comparison tables
//   convergence.svg                         overlay of all traces
//   coverage/<mode>-seed-<s>.{json,csv,svg} coverage reports
//
// All files except timing.json are a pure function of (config, seed).

#include <msample/cmaes.hpp>
#include <msample/coverage.hpp>
#include <msample/differential_evolution.hpp>
#include <msample/harness/config.hpp>
#include <msample/harness/output.hpp>
#include <msample/lmmaes.hpp>
#include <msample/problems.hpp>
#include <msample/random_search.hpp>
#include <msample/success_predictor.hpp>

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>

namespace msample::harness {

namespace fs = std::filesystem;

/// A built problem. Holds the objective's referents, so it is not movable.
class Problem {
 public:
  explicit Problem(const ProblemConfig& config) : config_(config) {
    if (config.synthetic) {
      bench_ = std::make_unique<SyntheticBenchmark>(make_benchmark(*config.synthetic));
      train_ = bench_->train();
      test_ = bench_->test();
      full_ = bench_->dataset;
      objective_ = std::make_unique<CoverageObjective<GeneratorEmbedder>>(bench_->gen, train_, bench_->metric,
                                                                          bench_->theta);
    }
  }
  Problem(const Problem&) = delete;
  Problem& operator=(const Problem&) = delete;

  const ProblemConfig& config() const { return config_; }
  bool is_synthetic() const { return bench_ != nullptr; }
  Eigen::Index dim() const { return config_.latent_dim(); }
  const SyntheticBenchmark& benchmark() const {
    require(is_synthetic(), "not a synthetic master-sample problem");
    return *bench_;
  }
  const IdentityDataset& train() const { return train_; }
  const IdentityDataset& test() const { return test_; }
  const IdentityDataset& full() const { return full_; }

  /// Training objective (unmatched fraction of the training identities, or
  /// the test function).
  double evaluate(const LatentVector& z) const {
    if (objective_) return (*objective_)(z);
    return evaluate_benchmark_function(*config_.function, z);
  }

  std::optional<double> train_msc(const LatentVector& z) const {
    if (!bench_) return std::nullopt;
    return msc_score(bench_->gen.embed(z), train_, bench_->metric, bench_->theta);
  }
  std::optional<double> test_msc(const LatentVector& z) const {
    if (!bench_) return std::nullopt;
    return msc_score(bench_->gen.embed(z), test_, bench_->metric, bench_->theta);
  }

 private:
  ProblemConfig config_;
  std::unique_ptr<SyntheticBenchmark> bench_;
  IdentityDataset train_, test_, full_;
  std::unique_ptr<CoverageObjective<GeneratorEmbedder>> objective_;
};

struct RunRecord {
  std::string optimizer;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::size_t evaluations = 0;  // true objective calls
  bool truncated = false;       // stopped by the wall-clock guard
  std::vector<TraceRow> trace;
  LatentVector best_latent;
  double best_fitness = 0.0;
  std::optional<double> train_msc;
  std::optional<double> test_msc;
  double wall_seconds = 0.0;
};

inline nlohmann::json to_json(const RunRecord& r, const ProblemConfig& problem) {
  nlohmann::json j = {{"format", "run-record"},
                      {"version", 1},
                      {"optimizer", r.optimizer},
                      {"seed", r.seed},
                      {"budget", r.budget},
                      {"evaluations", r.evaluations},
                      {"truncated", r.truncated},
                      {"iterations", r.trace.size()},
                      {"best_fitness", r.best_fitness},
                      {"best_latent", std::vector<double>(r.best_latent.data(), r.best_latent.data() + r.best_latent.size())},
                      {"problem", to_json(problem)},
                      {"train_msc", nullptr},
                      {"test_msc", nullptr}};
  if (r.train_msc) j["train_msc"] = *r.train_msc;
  if (r.test_msc) j["test_msc"] = *r.test_msc;
  return j;
}

inline std::string slug(const std::string& optimizer) {
  std::string s = optimizer;
  std::replace(s.begin(), s.end(), '+', '-');
  return s;
}

inline fs::path run_dir(const fs::path& out_dir, const std::string& optimizer, std::uint64_t seed) {
  return out_dir / "runs" / slug(optimizer) / ("seed-" + std::to_string(seed));
}

struct RunOptions {
  StopCheck stop;       // overrides config.max_seconds when set
  bool resume = false;  // continue from checkpoint.json if present
  bool write_files = true;
};

namespace detail {

inline nlohmann::json result_to_json(const OptimizeResult& r) {
  return {{"evaluations", r.evaluations},
          {"best_latent", std::vector<double>(r.best.latent.data(), r.best.latent.data() + r.best.latent.size())},
          {"best_fitness", r.best.fitness ? nlohmann::json(*r.best.fitness) : nlohmann::json(nullptr)},
          {"trace", trace_to_json(r.trace)}};
}

inline OptimizeResult result_from_json(const nlohmann::json& j) {
  OptimizeResult r;
  r.evaluations = j.at("evaluations").get<std::size_t>();
  const auto v = j.at("best_latent").get<std::vector<double>>();
  r.best.latent = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  if (!j.at("best_fitness").is_null()) r.best.fitness = j.at("best_fitness").get<double>();
  r.trace = trace_from_json(j.at("trace"));
  return r;
}

}  // namespace detail

/// Runs one optimizer for one seed against the problem's training objective.
/// Optimizer streams derive from derive_seed(seed, "optimizer"), so
/// "lmmaes" and "lmmaes+predictor" share their sampling stream.
inline OptimizeResult optimize(const std::string& optimizer, const Objective& f, Eigen::Index dim,
                               std::size_t budget, std::uint64_t seed, const ExperimentConfig& config,
                               const StopCheck& stop, const fs::path& checkpoint = {}, bool resume = false) {
  const auto opt_seed = derive_seed(seed, "optimizer");
  if (optimizer == "random") {
    RandomSearch rs(dim, opt_seed);
    return run_random_search(rs, f, budget, static_cast<std::size_t>(default_lambda(dim)), stop);
  }
  if (optimizer == "de") {
    DifferentialEvolution de(LatentVector::Zero(dim), opt_seed, config.de);
    return run_de(de, f, budget, stop);
  }
  if (optimizer == "cmaes") {
    CmaEs es(LatentVector::Zero(dim), config.sigma0, opt_seed);
    return run_cmaes(es, f, budget, stop);
  }
  if (optimizer == "lmmaes") {
    std::optional<LmMaEs> es;
    OptimizeResult partial;
    if (resume && !checkpoint.empty() && fs::exists(checkpoint)) {
      const auto j = nlohmann::json::parse(read_text_file(checkpoint));
      require(j.value("format", "") == "checkpoint" && j.at("optimizer") == "lmmaes" &&
                  j.at("seed").get<std::uint64_t>() == seed,
              "checkpoint " + checkpoint.string() + " does not belong to this run");
      es.emplace(LmMaEs::from_json(j.at("state")));
      partial = detail::result_from_json(j.at("result"));
    } else {
      es.emplace(LatentVector::Zero(dim), config.sigma0, opt_seed);
    }
    auto r = run_lmmaes(*es, f, budget, stop, std::move(partial));
    if (!checkpoint.empty()) {
      if (r.truncated) {
        write_text_file(checkpoint, nlohmann::json{{"format", "checkpoint"},
                                                   {"optimizer", "lmmaes"},
                                                   {"seed", seed},
                                                   {"state", es->to_json()},
                                                   {"result", detail::result_to_json(r)}}
                                        .dump());
      } else if (fs::exists(checkpoint)) {
        fs::remove(checkpoint);
      }
    }
    return r;
  }
  if (optimizer == "lmmaes+predictor") {
    PredictorConfig pc = config.predictor;
    pc.sigma0 = config.sigma0;
    return assisted_optimize(f, dim, budget, pc, seed, {}, stop);
  }
  throw Error("unknown optimizer '" + optimizer + "'");
}

/// One optimizer, one seed: optimize to budget, score the best latent on the
/// train and test identities, and write trace.csv / record.json.
inline RunRecord run_single(const ExperimentConfig& config, const Problem& problem, const std::string& optimizer,
                            std::uint64_t seed, const fs::path& out_dir, const RunOptions& options = {}) {
  require(is_optimizer(optimizer), "unknown optimizer '" + optimizer + "'");
  const auto dir = run_dir(out_dir, optimizer, seed);
  const StopCheck stop = options.stop ? options.stop
                                      : (config.max_seconds ? stop_after_seconds(*config.max_seconds) : never_stop());
  std::size_t calls = 0;
  const Objective f = [&](const LatentVector& z) {
    ++calls;
    return problem.evaluate(z);
  };
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path checkpoint = options.write_files && optimizer == "lmmaes" ? dir / "checkpoint.json" : fs::path{};
  if (options.resume && !checkpoint.empty() && fs::exists(checkpoint)) {
    const auto j = nlohmann::json::parse(read_text_file(checkpoint));
    calls = j.at("result").at("evaluations").get<std::size_t>();
  }
  auto result = optimize(optimizer, f, problem.dim(), config.budget, seed, config, stop, checkpoint, options.resume);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunRecord rec;
  rec.optimizer = optimizer;
  rec.seed = seed;
  rec.budget = config.budget;
  rec.evaluations = calls;
  rec.truncated = result.truncated;
  rec.trace = std::move(result.trace);
  require(result.best.fitness.has_value(), "run produced no evaluated candidate");
  rec.best_latent = result.best.latent;
  rec.best_fitness = *result.best.fitness;
  rec.train_msc = problem.train_msc(rec.best_latent);
  rec.test_msc = problem.test_msc(rec.best_latent);
  rec.wall_seconds = wall;

  if (options.write_files) {
    if (config.wants("csv")) write_text_file(dir / "trace.csv", trace_csv(rec.trace));
    write_text_file(dir / "record.json", to_json(rec, problem.config()).dump(2) + "\n");
    write_text_file(dir / "timing.json", nlohmann::json{{"wall_seconds", wall}}.dump() + "\n");
    if (config.wants("svg") && !rec.trace.empty())
      write_text_file(dir / "convergence.svg",
                      convergence_svg({trace_series(optimizer + " seed " + std::to_string(seed), rec.trace)}));
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Comparison

struct RunOutcome {
  std::string optimizer;
  std::uint64_t seed = 0;
  std::optional<RunRecord> record;  // empty when the run failed
  std::string error;
};

struct SummaryRow {
  std::string optimizer;
  std::size_t seed_count = 0;  // successful seeds
  std::optional<std::uint64_t> champion_seed;
  std::optional<double> train_msc;  // champion's
  std::optional<double> test_msc;   // champion's
  std::optional<double> median_train_msc;
  std::optional<double> champion_best_fitness;
  std::optional<double> median_best_fitness;
  std::vector<std::uint64_t> failed_seeds;
};

struct Comparison {
  std::vector<RunOutcome> runs;
  std::vector<SummaryRow> summary;
};

inline double median_of(std::vector<double> v) {
  require(!v.empty(), "median of an empty set");
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Champion = highest train MSC (synthetic problems) or lowest best fitness
/// (test functions); the earliest seed wins ties. Test MSC never enters the
/// choice.
inline SummaryRow summarize(const std::string& optimizer, const std::vector<RunOutcome>& runs) {
  SummaryRow row;
  row.optimizer = optimizer;
  const RunRecord* champion = nullptr;
  std::vector<double> train, fitness;
  for (const auto& o : runs) {
    if (o.optimizer != optimizer) continue;
    if (!o.record) {
      row.failed_seeds.push_back(o.seed);
      continue;
    }
    const auto& r = *o.record;
    ++row.seed_count;
    fitness.push_back(r.best_fitness);
    if (r.train_msc) train.push_back(*r.train_msc);
    const bool better = !champion || (r.train_msc ? *r.train_msc > *champion->train_msc
                                                  : r.best_fitness < champion->best_fitness);
    if (better) champion = &r;
  }
  if (champion) {
    row.champion_seed = champion->seed;
    row.train_msc = champion->train_msc;
    row.test_msc = champion->test_msc;
    row.champion_best_fitness = champion->best_fitness;
    row.median_best_fitness = median_of(fitness);
    if (!train.empty()) row.median_train_msc = median_of(train);
  }
  return row;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string s = "optimizer,seed_count,train_msc,test_msc\n";
  for (const auto& r : rows) {
    if (r.seed_count > 0)
      s += csv_field(r.optimizer) + "," + std::to_string(r.seed_count) + "," + optional_number(r.train_msc) + "," +
           optional_number(r.test_msc) + "\n";
    for (auto seed : r.failed_seeds)
      s += csv_field(r.optimizer) + ",0,FAILED seed " + std::to_string(seed) + ",FAILED seed " +
           std::to_string(seed) + "\n";
  }
  return s;
}

inline std::string runs_csv(const std::vector<RunOutcome>& runs) {
  std::string s = "optimizer,seed,status,evaluations,iterations,best_fitness,train_msc,test_msc,error\n";
  for (const auto& o : runs) {
    s += csv_field(o.optimizer) + "," + std::to_string(o.seed) + ",";
    if (o.record) {
      const auto& r = *o.record;
      s += std::string(r.truncated ? "truncated" : "ok") + "," + std::to_string(r.evaluations) + "," +
           std::to_string(r.trace.size()) + "," + format_double(r.best_fitness) + "," +
           optional_number(r.train_msc) + "," + optional_number(r.test_msc) + ",\n";
    } else {
      s += "failed,,,,,," + csv_field(o.error) + "\n";
    }
  }
  return s;
}

inline nlohmann::json summary_json(const std::vector<SummaryRow>& rows) {
  nlohmann::json a = nlohmann::json::array();
  auto opt = [](const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  for (const auto& r : rows)
    a.push_back({{"optimizer", r.optimizer},
                 {"seed_count", r.seed_count},
                 {"champion_seed", opt(r.champion_seed)},
                 {"train_msc", opt(r.train_msc)},
                 {"test_msc", opt(r.test_msc)},
                 {"median_train_msc", opt(r.median_train_msc)},
                 {"champion_best_fitness", opt(r.champion_best_fitness)},
                 {"median_best_fitness", opt(r.median_best_fitness)},
                 {"failed_seeds", r.failed_seeds}});
  return {{"format", "comparison-summary"}, {"version", 1}, {"optimizers", a}};
}

/// Writes convergence.svg overlaying every record's trace.
inline void emit_plots(const std::vector<RunRecord>& records, const fs::path& out_dir,
                       const std::string& name = "convergence.svg") {
  require(!records.empty(), "no records to plot");
  std::vector<Series> series;
  for (const auto& r : records) {
    require(!r.trace.empty(), r.optimizer + " seed " + std::to_string(r.seed) + " has an empty trace");
    series.push_back(trace_series(r.optimizer + " seed " + std::to_string(r.seed), r.trace));
  }
  write_text_file(out_dir / name, convergence_svg(series));
}

/// Every configured optimizer on every seed. A failing run becomes a failure
/// row; the other runs still complete.
inline Comparison run_comparison(const ExperimentConfig& config, const Problem& problem, const fs::path& out_dir,
                                 const RunOptions& options = {}) {
  require(!config.seeds.empty(), "comparison needs at least one seed");
  Comparison cmp;
  for (const auto& name : config.optimizers) {
    for (auto seed : config.seeds) {
      RunOutcome o{name, seed, std::nullopt, {}};
      try {
        o.record = run_single(config, problem, name, seed, out_dir, options);
      } catch (const std::exception& ex) {
        o.error = ex.what();
        std::clog << "run " << name << " seed " << seed << " failed: " << ex.what() << '\n';
      }
      cmp.runs.push_back(std::move(o));
    }
    cmp.summary.push_back(summarize(name, cmp.runs));
  }
  if (options.write_files) {
    if (config.wants("csv")) {
      write_text_file(out_dir / "summary.csv", summary_csv(cmp.summary));
      write_text_file(out_dir / "runs.csv", runs_csv(cmp.runs));
    }
    if (config.wants("json")) write_text_file(out_dir / "summary.json", summary_json(cmp.summary).dump(2) + "\n");
    if (config.wants("svg")) {
      std::vector<RunRecord> recs;
      for (const auto& o : cmp.runs)
        if (o.record && !o.record->trace.empty()) recs.push_back(*o.record);
      if (!recs.empty()) emit_plots(recs, out_dir);
    }
  }
  return cmp;
}

// ---------------------------------------------------------------------------
// Coverage

/// Single-master search used inside coverage runs: the named optimizer with
/// the given per-master budget, started from the origin.
inline MasterSearch make_master_search(const ExperimentConfig& config, const std::string& optimizer,
                                       std::size_t budget) {
  return [config, optimizer, budget](const Objective& f, Eigen::Index dim, std::uint64_t seed) {
    auto r = optimize(optimizer, f, dim, budget, seed, config, never_stop());
    require(r.best.fitness.has_value(), "master search produced no candidate");
    return r.best.latent;
  };
}

struct CoverageOutcome {
  std::string mode;
  std::optional<CoverageReport> report;  // greedy / cluster
  std::optional<KMeansBound> bound;      // kmeans-bound
  double percent = 0.0;
};

inline nlohmann::json to_json(const CoverageOutcome& c, std::size_t k, std::uint64_t seed) {
  if (c.report) {
    auto j = to_json(*c.report);
    j["k"] = k;
    j["seed"] = seed;
    return j;
  }
  nlohmann::json centroids = nlohmann::json::array();
  for (const auto& v : c.bound->centroids) centroids.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  return {{"format", "coverage-bound"}, {"version", 1},       {"mode", c.mode},
          {"k", k},                      {"seed", seed},       {"percent", c.percent},
          {"centroids", centroids}};
}

/// Coverage of the full dataset: greedy (k iterations), cluster (k KMeans
/// clusters, one master each) or kmeans-bound (k unconstrained centroids).
inline CoverageOutcome run_coverage(const ExperimentConfig& config, const Problem& problem, const std::string& mode,
                                    std::size_t k, std::uint64_t seed, const fs::path& out_dir,
                                    bool write_files = true) {
  const auto& b = problem.benchmark();
  require(k >= 1, "k must be >= 1");
  CoverageOutcome out;
  out.mode = mode;
  const auto search = make_master_search(config, config.coverage.optimizer, config.coverage_budget());
  if (mode == "greedy") {
    out.report = greedy_coverage(b.gen, b.dataset, b.metric, b.theta, k, search, seed,
                                 config.coverage.zero_gain_patience);
    out.percent = out.report->cumulative_percent;
  } else if (mode == "cluster" || mode == "cluster-partition") {
    out.mode = "cluster";
    out.report = cluster_partition_coverage(b.gen, b.dataset, k, b.metric, b.theta, search, seed,
                                            config.coverage.restarts);
    out.percent = out.report->cumulative_percent;
  } else if (mode == "kmeans-bound") {
    out.bound = kmeans_coverage_bound(b.dataset, k, b.metric, b.theta, config.coverage.restarts, seed);
    out.percent = out.bound->percent;
  } else {
    throw Error("unknown coverage mode '" + mode + "' (greedy, cluster, kmeans-bound)");
  }
  if (write_files) {
    const auto stem = out_dir / "coverage" / (out.mode + "-seed-" + std::to_string(seed));
    if (config.wants("json")) write_text_file(stem.string() + ".json", to_json(out, k, seed).dump(2) + "\n");
    if (config.wants("csv")) {
      if (out.report) {
        write_text_file(stem.string() + ".csv", coverage_csv(*out.report));
      } else {
        write_text_file(stem.string() + ".csv", "k,percent\n" + std::to_string(k) + "," + format_double(out.percent) + "\n");
      }
    }
    if (config.wants("svg") && out.report && !out.report->steps.empty())
      write_text_file(stem.string() + ".svg", coverage_svg(*out.report));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Calibration

struct Calibration {
  double theta = 0.0;
  double far_target = 0.0;
  double measured_far = 0.0;  // on pairs sampled independently of calibration
  std::size_t sample_pairs = 0;
};

inline Calibration calibrate(const ExperimentConfig& config) {
  require(config.problem.is_synthetic(), "calibration needs a synthetic master-sample problem");
  auto spec = *config.problem.synthetic;
  spec.theta.reset();
  const auto data = make_dataset(spec.n, spec.e, spec.clusters, spec.spread, spec.seed);
  const auto theta = calibrate_theta(data, spec.metric, spec.far_target, spec.sample_pairs, spec.seed);
  Calibration c;
  c.theta = theta.value();
  c.far_target = spec.far_target;
  c.sample_pairs = spec.sample_pairs;
  c.measured_far = measure_far(data, spec.metric, theta, spec.sample_pairs, derive_seed(spec.seed, "far-check"));
  return c;
}

inline nlohmann::json to_json(const Calibration& c) {
  return {{"theta", c.theta},
          {"far_target", c.far_target},
          {"measured_far", c.measured_far},
          {"sample_pairs", c.sample_pairs}};
}

}  // namespace msample::harness

#endif  // MSAMPLE_HARNESS_EXPERIMENT_HPP
