#include <msample/harness.hpp>

#include <gtest/gtest.h>

#include <filesystem>

using namespace msample;
using namespace msample::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("msample_test_harness_" + name);
  fs::remove_all(p);
  return p;
}

nlohmann::json small_config() {
  return {{"schema_version", 1},
          {"problem", {{"n", 400}, {"e", 32}, {"d", 512}, {"q", 16}, {"clusters", 5}, {"far_target", 0.01}}},
          {"optimizer", "lmmaes"},
          {"budget", 26400},
          {"seeds", {0}}};
}

bool has_error(const ConfigError& e, const std::string& needle) {
  for (const auto& p : e.problems())
    if (p.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Config, DefaultsAndRoundTrip) {
  const auto c = parse_config(nlohmann::json{{"schema_version", 1}});
  EXPECT_EQ(c.budget, 26400u);
  EXPECT_EQ(c.seeds.size(), 5u);
  EXPECT_TRUE(c.problem.is_synthetic());
  EXPECT_EQ(c.problem.latent_dim(), 512);
  const auto again = parse_config(to_json(c));
  EXPECT_EQ(to_json(again), to_json(c));
  EXPECT_EQ(parse_config(nlohmann::json{{"schema_version", 1}, {"seeds", 3}}).seeds,
            (std::vector<std::uint64_t>{0, 1, 2}));
}

TEST(Config, ListsEveryProblemWithFieldNames) {
  nlohmann::json j = {{"schema_version", 2},
                      {"budget", 10},
                      {"seeds", nlohmann::json::array()},
                      {"optimizer", {"lmmaes", "nelder-mead"}},
                      {"colour", "red"},
                      {"predictor", {{"tau_acc", 2.0}, {"bogus", 1}}},
                      {"problem", {{"n", 1}, {"extra", true}}}};
  try {
    parse_config(j);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_TRUE(has_error(e, "config.schema_version"));
    EXPECT_TRUE(has_error(e, "config.seeds"));
    EXPECT_TRUE(has_error(e, "nelder-mead"));
    EXPECT_TRUE(has_error(e, "config.colour: unknown field"));
    EXPECT_TRUE(has_error(e, "config.predictor.tau_acc"));
    EXPECT_TRUE(has_error(e, "config.predictor.bogus: unknown field"));
    EXPECT_TRUE(has_error(e, "config.problem.n"));
    EXPECT_TRUE(has_error(e, "config.problem.extra: unknown field"));
    EXPECT_TRUE(has_error(e, "config.budget"));
    EXPECT_GE(e.problems().size(), 9u);
  }
}

TEST(Config, ProblemFileAndFunctionProblems) {
  const auto dir = scratch("config");
  write_text_file(dir / "p.json", R"({"function": "ellipsoid", "dim": 12})");
  write_text_file(dir / "c.json", R"({"schema_version": 1, "problem_file": "p.json", "budget": 100})");
  const auto c = load_config(dir / "c.json");
  EXPECT_FALSE(c.problem.is_synthetic());
  EXPECT_EQ(c.problem.latent_dim(), 12);
  EXPECT_THROW(parse_config(nlohmann::json{{"schema_version", 1}, {"problem", {{"function", "ellipsoid"}}}}),
               ConfigError);
  write_text_file(dir / "bad.json", "{ not json");
  EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
}

TEST(RunSingle, TraceLengthRecordAndDeterminism) {
  const auto cfg = parse_config(small_config());
  const Problem problem(cfg.problem);
  const auto a = scratch("single_a"), b = scratch("single_b");
  const auto rec = run_single(cfg, problem, "lmmaes", 0, a);
  EXPECT_EQ(rec.trace.size(), 1200u);
  EXPECT_EQ(rec.evaluations, 26400u);
  run_single(cfg, problem, "lmmaes", 0, b);
  for (const char* f : {"trace.csv", "record.json"})
    EXPECT_EQ(read_text_file(run_dir(a, "lmmaes", 0) / f), read_text_file(run_dir(b, "lmmaes", 0) / f)) << f;

  const auto j = nlohmann::json::parse(read_text_file(run_dir(a, "lmmaes", 0) / "record.json"));
  const auto v = j.at("best_latent").get<std::vector<double>>();
  const LatentVector z = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  const auto& bench = problem.benchmark();
  EXPECT_EQ(msc_score(bench.gen.embed(z), problem.train(), bench.metric, bench.theta), j.at("train_msc").get<double>());
  EXPECT_EQ(msc_score(bench.gen.embed(z), problem.test(), bench.metric, bench.theta), j.at("test_msc").get<double>());
  EXPECT_EQ(parse_trace_csv(read_text_file(run_dir(a, "lmmaes", 0) / "trace.csv")).size(), 1200u);
}

TEST(RunSingle, CheckpointResumeReproducesUninterruptedRun) {
  auto j = small_config();
  j["problem"]["d"] = 64;
  j["budget"] = 3000;
  const auto cfg = parse_config(j);
  const Problem problem(cfg.problem);
  const auto full = scratch("resume_full"), part = scratch("resume_part");
  run_single(cfg, problem, "lmmaes", 3, full);

  int polls = 0;
  RunOptions stop_early;
  stop_early.stop = [&] { return ++polls > 40; };
  const auto first = run_single(cfg, problem, "lmmaes", 3, part, stop_early);
  EXPECT_TRUE(first.truncated);
  EXPECT_TRUE(fs::exists(run_dir(part, "lmmaes", 3) / "checkpoint.json"));
  RunOptions resume;
  resume.resume = true;
  const auto second = run_single(cfg, problem, "lmmaes", 3, part, resume);
  EXPECT_FALSE(second.truncated);
  EXPECT_FALSE(fs::exists(run_dir(part, "lmmaes", 3) / "checkpoint.json"));
  for (const char* f : {"trace.csv", "record.json"})
    EXPECT_EQ(read_text_file(run_dir(full, "lmmaes", 3) / f), read_text_file(run_dir(part, "lmmaes", 3) / f)) << f;
}

TEST(RunComparison, RecordsSummaryAndFiles) {
  auto j = small_config();
  j["problem"]["d"] = 32;
  j["budget"] = 600;
  j["optimizer"] = {"random", "lmmaes"};
  j["seeds"] = 5;
  j["report_formats"] = {"csv", "json", "svg"};
  const auto cfg = parse_config(j);
  const Problem problem(cfg.problem);
  const auto dir = scratch("compare");
  const auto cmp = run_comparison(cfg, problem, dir);
  EXPECT_EQ(cmp.runs.size(), 10u);
  ASSERT_EQ(cmp.summary.size(), 2u);
  for (const auto& r : cmp.runs) {
    ASSERT_TRUE(r.record);
    EXPECT_LE(r.record->evaluations, 600u);
    EXPECT_GT(r.record->evaluations, 600u - static_cast<std::size_t>(default_lambda(32)));
  }
  const auto csv = read_text_file(dir / "summary.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "optimizer,seed_count,train_msc,test_msc");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_TRUE(fs::exists(dir / "convergence.svg"));
  EXPECT_TRUE(fs::exists(dir / "runs.csv"));

  const auto again = scratch("compare_again");
  run_comparison(cfg, problem, again);
  for (const char* f : {"summary.csv", "runs.csv", "summary.json", "convergence.svg"})
    EXPECT_EQ(read_text_file(dir / f), read_text_file(again / f)) << f;
}

TEST(Summary, ChampionChosenByTrainMscOnly) {
  std::vector<RunOutcome> runs;
  auto add = [&](std::uint64_t seed, double train, double test) {
    RunRecord r;
    r.optimizer = "x";
    r.seed = seed;
    r.train_msc = train;
    r.test_msc = test;
    r.best_fitness = 1.0 - train / 100.0;
    runs.push_back({"x", seed, r, {}});
  };
  add(0, 10.0, 30.0);
  add(1, 12.0, 5.0);
  add(2, 12.0, 40.0);  // tie on train: earlier seed wins
  runs.push_back({"x", 3, std::nullopt, "boom"});
  const auto row = summarize("x", runs);
  EXPECT_EQ(row.champion_seed, 1u);
  EXPECT_EQ(row.test_msc, 5.0);
  EXPECT_EQ(row.seed_count, 3u);
  EXPECT_EQ(row.median_train_msc, 12.0);
  EXPECT_EQ(row.failed_seeds, (std::vector<std::uint64_t>{3}));
  const auto csv = summary_csv({row});
  EXPECT_NE(csv.find("x,3,12,5\n"), std::string::npos);
  EXPECT_NE(csv.find("x,0,FAILED seed 3,FAILED seed 3\n"), std::string::npos);
  EXPECT_NE(runs_csv(runs).find("x,3,failed,,,,,,boom"), std::string::npos);
}

TEST(Plots, EmptyTraceIsAnErrorAndOutputIsDeterministic) {
  RunRecord a, b;
  a.optimizer = "lmmaes";
  b.optimizer = "random";
  b.seed = 1;
  for (std::size_t i = 1; i <= 50; ++i) {
    a.trace.push_back({i, 22 * i, 1.0 / static_cast<double>(i), {}, {}, false});
    b.trace.push_back({i, 22 * i, 2.0 / static_cast<double>(i), {}, {}, false});
  }
  const auto d1 = scratch("plot1"), d2 = scratch("plot2");
  emit_plots({a, b}, d1);
  emit_plots({a, b}, d2);
  EXPECT_EQ(std::distance(fs::directory_iterator(d1), fs::directory_iterator{}), 1);
  EXPECT_EQ(read_text_file(d1 / "convergence.svg"), read_text_file(d2 / "convergence.svg"));
  RunRecord empty;
  EXPECT_THROW(emit_plots({a, empty}, d1), Error);
  EXPECT_THROW(emit_plots({}, d1), Error);
}

TEST(Coverage, GreedyReportShapeAndBound) {
  auto j = small_config();
  j["problem"]["d"] = 16;
  j["problem"]["far_target"] = 0.05;
  j["coverage"] = {{"budget", 500}, {"k", 3}, {"restarts", 2}};
  j["report_formats"] = {"csv", "json", "svg"};
  const auto cfg = parse_config(j);
  const Problem problem(cfg.problem);
  const auto dir = scratch("coverage");
  const auto greedy = run_coverage(cfg, problem, "greedy", 3, 0, dir);
  ASSERT_TRUE(greedy.report);
  EXPECT_LE(greedy.report->steps.size(), 3u);
  EXPECT_TRUE(verify_coverage_report(*greedy.report, problem.benchmark().gen, problem.full(),
                                     problem.benchmark().metric, problem.benchmark().theta));
  const auto rj = nlohmann::json::parse(read_text_file(dir / "coverage" / "greedy-seed-0.json"));
  EXPECT_EQ(rj.at("masters").size(), greedy.report->steps.size());
  const auto bound = run_coverage(cfg, problem, "kmeans-bound", 3, 0, dir);
  EXPECT_FALSE(bound.report);
  EXPECT_GE(bound.percent, 0.0);
  EXPECT_TRUE(fs::exists(dir / "coverage" / "kmeans-bound-seed-0.csv"));
  EXPECT_THROW(run_coverage(cfg, problem, "spiral", 3, 0, dir), Error);
}

TEST(Comparison, EllipsoidOrderingOfBaselines) {
  const auto cfg = parse_config(nlohmann::json{{"schema_version", 1},
                                               {"problem", {{"function", "ellipsoid"}, {"dim", 512}}},
                                               {"optimizer", {"random", "cmaes", "lmmaes"}},
                                               {"budget", 26400},
                                               {"seeds", 5}});
  const Problem problem(cfg.problem);
  RunOptions quiet;
  quiet.write_files = false;
  const auto cmp = run_comparison(cfg, problem, scratch("ellipsoid"), quiet);
  ASSERT_EQ(cmp.summary.size(), 3u);
  const double rs = *cmp.summary[0].median_best_fitness;
  const double cma = *cmp.summary[1].median_best_fitness;
  const double lme = *cmp.summary[2].median_best_fitness;
  EXPECT_LE(lme, cma);
  EXPECT_LE(cma, rs);
}
