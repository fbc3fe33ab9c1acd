#ifndef MSAMPLE_HARNESS_CONFIG_HPP
#define MSAMPLE_HARNESS_CONFIG_HPP

// Experiment configuration (JSON, versioned). Unknown fields are rejected and
// every problem found is reported with its field path in one ConfigError.

#include <msample/differential_evolution.hpp>
#include <msample/lmmaes.hpp>
#include <msample/problems.hpp>
#include <msample/success_predictor.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace msample::harness {

inline constexpr int kSchemaVersion = 1;

inline const std::vector<std::string>& optimizer_names() {
  static const std::vector<std::string> names = {"random", "de", "cmaes", "lmmaes", "lmmaes+predictor"};
  return names;
}

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : Error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "invalid experiment config:";
    for (const auto& e : p) s += "\n  " + e;
    return s;
  }
  std::vector<std::string> problems_;
};

/// Either the synthetic master-sample benchmark or a plain test function.
struct ProblemConfig {
  std::optional<BenchmarkSpec> synthetic = BenchmarkSpec{};
  std::optional<BenchmarkKind> function;
  Eigen::Index function_dim = 0;

  bool is_synthetic() const { return synthetic.has_value(); }
  Eigen::Index latent_dim() const { return synthetic ? synthetic->d : function_dim; }
};

inline nlohmann::json to_json(const ProblemConfig& p) {
  if (p.synthetic) return msample::to_json(*p.synthetic);
  return {{"function", std::string(msample::to_string(*p.function))}, {"dim", p.function_dim}};
}

struct CoverageConfig {
  std::string mode = "greedy";  // greedy | cluster | kmeans-bound
  std::size_t k = 9;            // masters (greedy iterations) or clusters
  std::optional<std::size_t> budget;  // per master; defaults to the run budget
  std::string optimizer = "lmmaes";
  int restarts = 10;
  std::size_t zero_gain_patience = 2;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  ProblemConfig problem;
  std::vector<std::string> optimizers = {"lmmaes"};
  std::size_t budget = 26400;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  double sigma0 = 0.3;
  PredictorConfig predictor;
  DeOptions de;
  CoverageConfig coverage;
  std::string out_dir = "results";
  std::optional<double> max_seconds;
  std::vector<std::string> report_formats = {"csv", "json"};

  bool wants(std::string_view format) const {
    return std::find(report_formats.begin(), report_formats.end(), format) != report_formats.end();
  }
  std::size_t coverage_budget() const { return coverage.budget.value_or(budget); }
};

inline bool is_optimizer(const std::string& name) {
  const auto& n = optimizer_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

/// Smallest budget that lets `optimizer` finish one step.
inline std::size_t minimum_budget(const std::string& optimizer, Eigen::Index dim, const DeOptions& de) {
  if (optimizer == "random") return 1;
  if (optimizer == "de") return static_cast<std::size_t>(std::max(de.population, 1));
  return static_cast<std::size_t>(default_lambda(std::max<Eigen::Index>(dim, 1)));
}

namespace detail {

class Reader {
 public:
  Reader(const nlohmann::json& j, std::string where, std::vector<std::string>& errors)
      : j_(j), where_(std::move(where)), errors_(errors) {
    if (!j_.is_object()) errors_.push_back(where_ + ": must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return;
    try {
      const auto& v = j_.at(key);
      if constexpr (std::is_unsigned_v<T>) {
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
          throw Error("expected a non-negative integer");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw Error("expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw Error("expected a number");
      }
      v.get_to(out);
    } catch (const std::exception& ex) {
      fail(key, ex.what());
    }
  }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }
  const nlohmann::json& at(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }
  void fail(const std::string& key, const std::string& what) { errors_.push_back(where_ + "." + key + ": " + what); }

  void reject_unknown() {
    if (!j_.is_object()) return;
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) errors_.push_back(where_ + "." + key + ": unknown field");
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

inline ProblemConfig parse_problem(const nlohmann::json& j, const std::string& where,
                                   std::vector<std::string>& errors) {
  ProblemConfig p;
  if (j.is_object() && j.contains("function")) {
    p.synthetic.reset();
    Reader r(j, where, errors);
    std::string name;
    r.get("function", name);
    try {
      p.function = parse_benchmark_kind(name);
    } catch (const std::exception& ex) {
      r.fail("function", ex.what());
      p.function = BenchmarkKind::sphere;
    }
    std::int64_t dim = 0;
    r.get("dim", dim);
    if (!r.has("dim")) r.fail("dim", "required for function problems");
    else if (dim < 1) r.fail("dim", "must be >= 1");
    p.function_dim = dim;
    r.reject_unknown();
    return p;
  }
  p.synthetic = benchmark_spec_from_json(j, errors, where);
  return p;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace detail

/// Parses and validates a config. `base_dir` resolves a relative problem_file.
inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
  std::vector<std::string> errors;
  ExperimentConfig c;
  detail::Reader r(j, "config", errors);

  r.get("schema_version", c.schema_version);
  if (!r.has("schema_version")) r.fail("schema_version", "required");
  else if (c.schema_version != kSchemaVersion)
    r.fail("schema_version", "unsupported version " + std::to_string(c.schema_version) + " (expected " +
                                 std::to_string(kSchemaVersion) + ")");

  if (r.has("problem") && r.has("problem_file")) r.fail("problem", "give either problem or problem_file, not both");
  if (r.has("problem")) {
    c.problem = detail::parse_problem(r.at("problem"), "config.problem", errors);
  } else if (r.has("problem_file")) {
    std::string file;
    r.get("problem_file", file);
    try {
      const auto path = base_dir / file;
      c.problem = detail::parse_problem(nlohmann::json::parse(detail::read_text(path)), path.string(), errors);
    } catch (const std::exception& ex) {
      r.fail("problem_file", ex.what());
    }
  }

  if (r.has("optimizer")) {
    const auto& v = r.at("optimizer");
    try {
      c.optimizers = v.is_array() ? v.get<std::vector<std::string>>() : std::vector<std::string>{v.get<std::string>()};
    } catch (const std::exception& ex) {
      r.fail("optimizer", ex.what());
    }
    if (c.optimizers.empty()) r.fail("optimizer", "needs at least one optimizer");
    for (const auto& name : c.optimizers)
      if (!is_optimizer(name)) r.fail("optimizer", "unknown optimizer '" + name + "'");
  }

  r.get("budget", c.budget);
  if (r.has("seeds")) {
    const auto& v = r.at("seeds");
    auto natural = [](const nlohmann::json& x) {
      return x.is_number_integer() && (x.is_number_unsigned() || x.get<std::int64_t>() >= 0);
    };
    if (natural(v)) {
      c.seeds.clear();
      for (std::uint64_t s = 0; s < v.get<std::uint64_t>(); ++s) c.seeds.push_back(s);
    } else if (v.is_array() && std::all_of(v.begin(), v.end(), natural)) {
      c.seeds = v.get<std::vector<std::uint64_t>>();
    } else {
      r.fail("seeds", "expected a count or a list of non-negative integers");
    }
  }
  if (c.seeds.empty()) r.fail("seeds", "needs at least one seed");
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size())
    r.fail("seeds", "seeds must be distinct");

  r.get("sigma0", c.sigma0);
  if (!(std::isfinite(c.sigma0) && c.sigma0 > 0.0)) r.fail("sigma0", "must be finite and > 0");

  if (r.has("predictor")) {
    detail::Reader p(r.at("predictor"), "config.predictor", errors);
    auto& pc = c.predictor;
    p.get("percentile", pc.percentile);
    p.get("lambda_prime", pc.lambda_prime);
    p.get("capacity", pc.capacity);
    p.get("warmup_fraction", pc.warmup_fraction);
    p.get("tau_acc", pc.tau_acc);
    p.get("patience", pc.patience);
    p.get("hidden1", pc.classifier.hidden1);
    p.get("hidden2", pc.classifier.hidden2);
    p.get("learning_rate", pc.classifier.learning_rate);
    p.get("batch_size", pc.classifier.batch_size);
    p.reject_unknown();
    if (!(pc.percentile > 0.0 && pc.percentile < 100.0)) p.fail("percentile", "must lie in (0, 100)");
    if (pc.capacity < 1) p.fail("capacity", "must be >= 1");
    if (!(pc.warmup_fraction >= 0.0 && pc.warmup_fraction < 1.0)) p.fail("warmup_fraction", "must lie in [0, 1)");
    if (!(pc.tau_acc >= 0.0 && pc.tau_acc <= 1.0)) p.fail("tau_acc", "must lie in [0, 1]");
    if (pc.patience < 1) p.fail("patience", "must be >= 1");
    if (pc.classifier.hidden1 < 1) p.fail("hidden1", "must be >= 1");
    if (pc.classifier.hidden2 < 1) p.fail("hidden2", "must be >= 1");
    if (!(pc.classifier.learning_rate > 0.0)) p.fail("learning_rate", "must be > 0");
    if (pc.classifier.batch_size < 1) p.fail("batch_size", "must be >= 1");
  }
  c.predictor.sigma0 = c.sigma0;

  if (r.has("de")) {
    detail::Reader d(r.at("de"), "config.de", errors);
    d.get("population", c.de.population);
    d.get("f", c.de.f);
    d.get("cr", c.de.cr);
    d.get("init_scale", c.de.init_scale);
    d.reject_unknown();
    if (c.de.population < 4) d.fail("population", "must be >= 4");
    if (!(c.de.f >= 0.0)) d.fail("f", "must be >= 0");
    if (!(c.de.cr >= 0.0 && c.de.cr <= 1.0)) d.fail("cr", "must lie in [0, 1]");
    if (!(c.de.init_scale >= 0.0)) d.fail("init_scale", "must be >= 0");
  }

  if (r.has("coverage")) {
    detail::Reader v(r.at("coverage"), "config.coverage", errors);
    v.get("mode", c.coverage.mode);
    v.get("k", c.coverage.k);
    if (v.has("budget")) {
      std::size_t b = 0;
      v.get("budget", b);
      c.coverage.budget = b;
    }
    v.get("optimizer", c.coverage.optimizer);
    v.get("restarts", c.coverage.restarts);
    v.get("zero_gain_patience", c.coverage.zero_gain_patience);
    v.reject_unknown();
    if (c.coverage.mode != "greedy" && c.coverage.mode != "cluster" && c.coverage.mode != "kmeans-bound")
      v.fail("mode", "must be one of greedy, cluster, kmeans-bound");
    if (c.coverage.k < 1) v.fail("k", "must be >= 1");
    if (!is_optimizer(c.coverage.optimizer)) v.fail("optimizer", "unknown optimizer '" + c.coverage.optimizer + "'");
    if (c.coverage.restarts < 1) v.fail("restarts", "must be >= 1");
  }

  r.get("out_dir", c.out_dir);
  if (r.has("max_seconds")) {
    double s = 0.0;
    r.get("max_seconds", s);
    if (!(s > 0.0)) r.fail("max_seconds", "must be > 0");
    c.max_seconds = s;
  }
  if (r.has("report_formats")) {
    try {
      c.report_formats = r.at("report_formats").get<std::vector<std::string>>();
    } catch (const std::exception& ex) {
      r.fail("report_formats", ex.what());
    }
    for (const auto& f : c.report_formats)
      if (f != "csv" && f != "json" && f != "svg") r.fail("report_formats", "unknown format '" + f + "'");
  }
  r.reject_unknown();

  // Cross-field checks.
  const Eigen::Index dim = c.problem.latent_dim();
  if (dim >= 1) {
    for (const auto& name : c.optimizers) {
      if (!is_optimizer(name)) continue;
      const auto need = minimum_budget(name, dim, c.de);
      if (c.budget < need)
        r.fail("budget", std::to_string(c.budget) + " is below the " + name + " minimum of " + std::to_string(need));
      if (name == "lmmaes+predictor" && c.predictor.lambda_prime <= default_lambda(dim))
        errors.push_back("config.predictor.lambda_prime: must exceed lambda=" + std::to_string(default_lambda(dim)));
    }
    if (is_optimizer(c.coverage.optimizer) &&
        c.coverage_budget() < minimum_budget(c.coverage.optimizer, dim, c.de))
      errors.push_back("config.coverage.budget: below the minimum for " + c.coverage.optimizer);
  }

  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text(path));
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError({path.string() + ": " + ex.what()});
  }
  return parse_config(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

/// Canonical JSON form; parse_config(to_json(c)) == c.
inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j = {{"schema_version", c.schema_version},
                      {"problem", to_json(c.problem)},
                      {"optimizer", c.optimizers},
                      {"budget", c.budget},
                      {"seeds", c.seeds},
                      {"sigma0", c.sigma0},
                      {"predictor",
                       {{"percentile", c.predictor.percentile},
                        {"lambda_prime", c.predictor.lambda_prime},
                        {"capacity", c.predictor.capacity},
                        {"warmup_fraction", c.predictor.warmup_fraction},
                        {"tau_acc", c.predictor.tau_acc},
                        {"patience", c.predictor.patience},
                        {"hidden1", c.predictor.classifier.hidden1},
                        {"hidden2", c.predictor.classifier.hidden2},
                        {"learning_rate", c.predictor.classifier.learning_rate},
                        {"batch_size", c.predictor.classifier.batch_size}}},
                      {"de",
                       {{"population", c.de.population},
                        {"f", c.de.f},
                        {"cr", c.de.cr},
                        {"init_scale", c.de.init_scale}}},
                      {"coverage",
                       {{"mode", c.coverage.mode},
                        {"k", c.coverage.k},
                        {"optimizer", c.coverage.optimizer},
                        {"restarts", c.coverage.restarts},
                        {"zero_gain_patience", c.coverage.zero_gain_patience}}},
                      {"out_dir", c.out_dir},
                      {"report_formats", c.report_formats}};
  if (c.coverage.budget) j["coverage"]["budget"] = *c.coverage.budget;
  if (c.max_seconds) j["max_seconds"] = *c.max_seconds;
  return j;
}

}  // namespace msample::harness

#endif  // MSAMPLE_HARNESS_CONFIG_HPP
