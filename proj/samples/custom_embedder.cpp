// Coverage search with a user-supplied embedder: any type with embed(),
// latent_dim() and embedding_dim() can stand in for the generator.

#include <msample/msample.hpp>

#include <cstdio>

namespace {

// Projects a 16-d latent onto the unit circle.
struct CircleEmbedder {
  Eigen::Index latent_dim() const { return 16; }
  Eigen::Index embedding_dim() const { return 2; }
  msample::EmbeddingVector embed(const msample::LatentVector& z) const {
    Eigen::Vector2d v(z.head(8).sum(), z.tail(8).sum());
    if (v.norm() == 0.0) v = Eigen::Vector2d(1.0, 0.0);
    return v.normalized();
  }
};

}  // namespace

int main() {
  static_assert(msample::Embedder<CircleEmbedder>);
  // 60 identities spread over a third of the circle
  msample::IdentityDataset data;
  for (int i = 0; i < 60; ++i) {
    const double a = 2.0 * i / 60.0;
    data.ids.push_back(i);
    data.embeddings.push_back(Eigen::Vector2d(std::cos(a), std::sin(a)));
  }
  const msample::MatchThreshold theta(0.02);
  const msample::MasterSearch search = [](const msample::Objective& f, Eigen::Index dim, std::uint64_t seed) {
    msample::LmMaEs es(msample::LatentVector::Zero(dim), 1.0, seed);
    return msample::run_lmmaes(es, f, 3000).best.latent;
  };
  const auto report =
      msample::greedy_coverage(CircleEmbedder{}, data, msample::Metric::cosine, theta, 6, search, 42);
  for (std::size_t i = 0; i < report.steps.size(); ++i)
    std::printf("master %zu covers %zu new identities (cumulative %.1f%%)\n", i + 1, report.steps[i].matched.size(),
                report.steps[i].cumulative_percent);
}
