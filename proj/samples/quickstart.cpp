// Builds a small synthetic benchmark and searches for one master sample with
// plain LM-MA-ES and with the classifier-assisted variant.

#include <msample/msample.hpp>

#include <cstdio>

int main() {
  msample::BenchmarkSpec spec;
  spec.n = 1500;
  spec.d = 128;
  spec.far_target = 0.005;
  const auto bench = msample::make_benchmark(spec);
  const auto train = bench.train();
  const auto test = bench.test();
  std::printf("theta = %.6f, %zu train / %zu test identities\n", bench.theta.value(), train.size(), test.size());

  msample::CoverageObjective<msample::GeneratorEmbedder> objective(bench.gen, train, bench.metric, bench.theta);
  const std::size_t budget = 4000;

  msample::LmMaEs es(msample::LatentVector::Zero(spec.d), 0.3, 1);
  const auto plain = msample::run_lmmaes(es, std::cref(objective), budget);

  msample::PredictorConfig pc;
  pc.lambda_prime = 200;
  pc.capacity = 2000;
  const auto assisted = msample::assisted_optimize(std::cref(objective), spec.d, budget, pc, 1);

  for (const auto* r : {&plain, &assisted}) {
    const auto emb = bench.gen.embed(r->best.latent);
    std::printf("%-10s train MSC %6.2f%%  test MSC %6.2f%%  (%zu evaluations)\n",
                r == &plain ? "lmmaes" : "assisted", msample::msc_score(emb, train, bench.metric, bench.theta),
                msample::msc_score(emb, test, bench.metric, bench.theta), r->evaluations);
  }
}
