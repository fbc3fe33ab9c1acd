// Command-line front end for the experiment harness.

#include <msample/harness.hpp>

#include <CLI11.hpp>

#include <iostream>

using namespace msample;
using namespace msample::harness;

namespace {

struct Common {
  std::string config_path;
  std::string out;
  std::optional<std::size_t> budget;
  std::optional<double> max_seconds;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Loads the config (or the defaults) and applies command-line overrides, then
// validates the merged result.
ExperimentConfig load(const Common& c, const std::function<void(nlohmann::json&)>& patch) {
  nlohmann::json j;
  std::filesystem::path base = ".";
  if (!c.config_path.empty()) {
    j = nlohmann::json::parse(read_text_file(c.config_path));
    base = std::filesystem::path(c.config_path).parent_path();
    if (base.empty()) base = ".";
  } else {
    j = to_json(ExperimentConfig{});
  }
  if (!c.out.empty()) j["out_dir"] = c.out;
  if (c.budget) j["budget"] = *c.budget;
  if (c.max_seconds) j["max_seconds"] = *c.max_seconds;
  patch(j);
  return parse_config(j, base);
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory (overrides out_dir)");
  cmd->add_option("--budget", c.budget, "evaluation budget per run");
}

std::string fmt_msc(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"master-sample search experiments"};
  app.require_subcommand(1);

  Common bench_opts, cmp_opts, cov_opts, cal_opts;

  auto* bench = app.add_subcommand("bench", "single optimizer run");
  add_common(bench, bench_opts);
  std::string bench_optimizer;
  std::uint64_t bench_seed = 0;
  bool resume = false;
  bench->add_option("--optimizer", bench_optimizer, "random | de | cmaes | lmmaes | lmmaes+predictor");
  bench->add_option("--seed", bench_seed, "root seed");
  bench->add_option("--max-seconds", bench_opts.max_seconds, "wall-clock guard; lmmaes runs checkpoint and exit");
  bench->add_flag("--resume", resume, "continue from a checkpoint left by --max-seconds");

  auto* compare = app.add_subcommand("compare", "multi-seed comparison with best-on-train selection");
  add_common(compare, cmp_opts);
  std::string cmp_seeds, cmp_optimizers;
  compare->add_option("--seeds", cmp_seeds, "comma-separated seeds");
  compare->add_option("--optimizer", cmp_optimizers, "comma-separated optimizers");
  compare->add_option("--max-seconds", cmp_opts.max_seconds, "wall-clock guard per run");

  auto* coverage = app.add_subcommand("coverage", "multi-master coverage of the full dataset");
  add_common(coverage, cov_opts);
  std::string cov_mode, cov_optimizer, cov_seeds;
  std::optional<std::size_t> cov_k;
  std::optional<std::uint64_t> cov_seed;
  coverage->add_option("--mode", cov_mode, "greedy | cluster | kmeans-bound");
  coverage->add_option("--k", cov_k, "masters, clusters or centroids");
  coverage->add_option("--seed", cov_seed, "single seed");
  coverage->add_option("--seeds", cov_seeds, "comma-separated seeds");
  coverage->add_option("--optimizer", cov_optimizer, "single-master optimizer");

  auto* calib = app.add_subcommand("calibrate", "match threshold from the false-accept target");
  add_common(calib, cal_opts);

  auto* plot = app.add_subcommand("plot", "SVG charts from trace CSVs or coverage reports");
  std::vector<std::string> plot_inputs;
  std::string plot_out = ".";
  plot->add_option("inputs", plot_inputs, "trace.csv files and/or coverage report JSON files")->required();
  plot->add_option("--out", plot_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bench) {
      const auto cfg = load(bench_opts, [&](nlohmann::json& j) {
        if (!bench_optimizer.empty()) j["optimizer"] = bench_optimizer;
        j["seeds"] = std::vector<std::uint64_t>{bench_seed};
      });
      const Problem problem(cfg.problem);
      const auto& name = cfg.optimizers.front();
      RunOptions opts;
      opts.resume = resume;
      const auto rec = run_single(cfg, problem, name, bench_seed, cfg.out_dir, opts);
      std::cout << name << " seed " << bench_seed << ": evaluations " << rec.evaluations << ", best fitness "
                << format_double(rec.best_fitness) << ", train MSC " << fmt_msc(rec.train_msc) << ", test MSC "
                << fmt_msc(rec.test_msc) << (rec.truncated ? " (stopped early; rerun with --resume)" : "") << "\n"
                << "wrote " << run_dir(cfg.out_dir, name, bench_seed).string() << "\n";
      return rec.truncated ? 3 : 0;
    }
    if (*compare) {
      const auto cfg = load(cmp_opts, [&](nlohmann::json& j) {
        if (!cmp_optimizers.empty()) j["optimizer"] = split_list(cmp_optimizers);
        if (!cmp_seeds.empty()) {
          std::vector<std::uint64_t> seeds;
          for (const auto& s : split_list(cmp_seeds)) seeds.push_back(std::stoull(s));
          j["seeds"] = seeds;
        }
      });
      const Problem problem(cfg.problem);
      const auto cmp = run_comparison(cfg, problem, cfg.out_dir);
      std::cout << "optimizer            seeds  train_msc  test_msc  median_train\n";
      for (const auto& r : cmp.summary) {
        char line[160];
        std::snprintf(line, sizeof line, "%-20s %5zu  %9s  %8s  %12s", r.optimizer.c_str(), r.seed_count,
                      fmt_msc(r.train_msc).c_str(), fmt_msc(r.test_msc).c_str(), fmt_msc(r.median_train_msc).c_str());
        std::cout << line << (r.failed_seeds.empty() ? "" : "  (failures)") << "\n";
      }
      std::cout << "wrote " << cfg.out_dir << "\n";
      bool failed = false;
      for (const auto& r : cmp.summary) failed |= !r.failed_seeds.empty();
      return failed ? 1 : 0;
    }
    if (*coverage) {
      const auto cfg = load(cov_opts, [&](nlohmann::json& j) {
        if (!cov_mode.empty()) j["coverage"]["mode"] = cov_mode;
        if (cov_k) j["coverage"]["k"] = *cov_k;
        if (!cov_optimizer.empty()) j["coverage"]["optimizer"] = cov_optimizer;
        if (cov_opts.budget) j["coverage"]["budget"] = *cov_opts.budget;
        if (cov_seed) j["seeds"] = std::vector<std::uint64_t>{*cov_seed};
        if (!cov_seeds.empty()) {
          std::vector<std::uint64_t> seeds;
          for (const auto& s : split_list(cov_seeds)) seeds.push_back(std::stoull(s));
          j["seeds"] = seeds;
        }
      });
      const Problem problem(cfg.problem);
      for (auto seed : cfg.seeds) {
        const auto out = run_coverage(cfg, problem, cfg.coverage.mode, cfg.coverage.k, seed, cfg.out_dir);
        std::cout << out.mode << " k=" << cfg.coverage.k << " seed " << seed << ": " << fmt_msc(out.percent)
                  << "% of " << problem.full().size() << " identities";
        if (out.report) {
          std::cout << " [";
          for (std::size_t i = 0; i < out.report->steps.size(); ++i)
            std::cout << (i ? " " : "") << fmt_msc(out.report->steps[i].msc_full);
          std::cout << "]";
        }
        std::cout << "\n";
      }
      return 0;
    }
    if (*calib) {
      const auto cfg = load(cal_opts, [](nlohmann::json&) {});
      const auto c = calibrate(cfg);
      const auto j = to_json(c);
      write_text_file(std::filesystem::path(cfg.out_dir) / "calibration.json", j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (*plot) {
      std::vector<Series> series;
      for (const auto& in : plot_inputs) {
        const std::filesystem::path p(in);
        if (p.extension() == ".json") {
          const auto j = nlohmann::json::parse(read_text_file(p));
          require(j.value("format", "") == "coverage-report", in + ": not a coverage report");
          CoverageReport r;
          r.mode = j.at("mode").get<std::string>();
          r.cumulative_percent = j.at("cumulative_percent").get<double>();
          for (const auto& m : j.at("masters")) {
            CoverageStep s;
            s.matched = m.at("matched_ids").get<std::vector<IdentityId>>();
            s.msc_full = m.at("msc_full").get<double>();
            s.cumulative_percent = m.at("cumulative_percent").get<double>();
            r.steps.push_back(std::move(s));
          }
          const auto target = std::filesystem::path(plot_out) / (p.stem().string() + ".svg");
          write_text_file(target, coverage_svg(r));
          std::cout << "wrote " << target.string() << "\n";
        } else {
          const auto trace = parse_trace_csv(read_text_file(p));
          require(!trace.empty(), in + ": empty trace");
          const auto label = p.has_parent_path() ? p.parent_path().parent_path().filename().string() + " " +
                                                       p.parent_path().filename().string()
                                                 : p.stem().string();
          series.push_back(trace_series(label, trace));
        }
      }
      if (!series.empty()) {
        const auto target = std::filesystem::path(plot_out) / "convergence.svg";
        write_text_file(target, convergence_svg(series));
        std::cout << "wrote " << target.string() << "\n";
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
