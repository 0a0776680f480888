#include <benchmark/benchmark.h>

#include <numeric>

#include "engage/model_selection.hpp"
#include "engage/random.hpp"
#include "engage/resampling.hpp"
#include "engage/stats.hpp"
#include "engage/topics.hpp"

namespace {

using namespace engage;

Matrix uniform_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
  return m;
}

topics::EmbeddingTable embedding_table(std::size_t rows, std::size_t dim) {
  std::vector<std::string> ids(rows);
  for (std::size_t i = 0; i < rows; ++i) ids[i] = "p" + std::to_string(i);
  return topics::EmbeddingTable(std::move(ids), uniform_matrix(rows, dim, 3), topics::Modality::kImage);
}

LabeledDataset engagement_data(std::size_t rows, std::size_t cols) {
  const Matrix x = uniform_matrix(rows, cols, 5);
  std::vector<std::string> names(cols);
  for (std::size_t c = 0; c < cols; ++c) names[c] = "f" + std::to_string(c);
  std::vector<double> engagement(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    engagement[r] = x.row(static_cast<Eigen::Index>(r)).head(3).maxCoeff();
  }
  return label_engagement(x, names, engagement, Metric::kLikes);
}

void BM_Spearman(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  SplitMix64 rng(1);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform();
    y[i] = x[i] + rng.uniform();
  }
  for (auto _ : state) benchmark::DoNotOptimize(stats::spearman(x, y).rs);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Spearman)->RangeMultiplier(10)->Range(100, 100000)->Complexity();

void BM_FitTree(benchmark::State& state) {
  const auto data = engagement_data(static_cast<std::size_t>(state.range(0)), 20);
  dtree::Hyperparameters hp;
  hp.max_depth = 8;
  for (auto _ : state) benchmark::DoNotOptimize(dtree::fit_tree(data, hp).split_count());
}
BENCHMARK(BM_FitTree)->Arg(1000)->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_Smote(benchmark::State& state) {
  const auto data = engagement_data(static_cast<std::size_t>(state.range(0)), 20);
  const resampling::ResamplingPlan plan{resampling::Strategy::kSmote, 5, 1.0, 9};
  for (auto _ : state) benchmark::DoNotOptimize(resampling::smote(data, plan).synthetic_added);
}
BENCHMARK(BM_Smote)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_Pca(benchmark::State& state) {
  const auto table = embedding_table(static_cast<std::size_t>(state.range(0)), 512);
  for (auto _ : state) benchmark::DoNotOptimize(topics::pca_reduce(table, 100).components);
}
BENCHMARK(BM_Pca)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_KnnQueryAll(benchmark::State& state) {
  const auto table = embedding_table(static_cast<std::size_t>(state.range(0)), 100);
  const topics::KnnIndex index(table);
  for (auto _ : state) benchmark::DoNotOptimize(index.query_all(50, 1).size());
}
BENCHMARK(BM_KnnQueryAll)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
