// Drives LM-MA-ES by hand on the 100-d Rosenbrock function.

#include <msample/lmmaes.hpp>
#include <msample/problems.hpp>

#include <cstdio>

int main() {
  const auto f = msample::benchmark_objective(msample::BenchmarkKind::rosenbrock);
  msample::LmMaEs es(msample::LatentVector::Zero(100), 0.5, 7);
  double best = 1e300;
  for (int it = 1; it <= 40000 && best > 1e-8; ++it) {
    auto pop = es.ask(es.lambda());
    for (auto& o : pop) {
      o.fitness = f(o.x);
      best = std::min(best, *o.fitness);
    }
    es.tell(pop);
    if (it % 2000 == 0) std::printf("iteration %6d  best %.3e  sigma %.3e\n", it, best, es.sigma());
  }
  std::printf("final best %.3e after %zu iterations\n", best, es.iteration());
}
