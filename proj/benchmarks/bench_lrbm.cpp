#include "lrbm/classify.hpp"
#include "lrbm/oracle.hpp"
#include "lrbm/train.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace lrbm;

namespace {

LrbmModel make_model(Index d, Index n_t, Index n_h) {
  oracle::SyntheticSpec spec;
  spec.visible_dim = d;
  spec.frames = n_t;
  spec.hidden_dim = n_h;
  spec.separation = 0.3;
  Rng rng(1);
  return oracle::random_model(spec, rng);
}

SequenceSample make_sample(Index d, Index n_t, Rng& rng) {
  std::normal_distribution<double> normal;
  SequenceSample s{Matrix(d, n_t), std::nullopt, {}};
  for (Index k = 0; k < s.frames.size(); ++k) s.frames.data()[k] = normal(rng);
  return s;
}

// Arguments: d, n_t, n_h.
void BM_LogLikelihood(benchmark::State& state) {
  const auto model = make_model(state.range(0), state.range(1), state.range(2));
  Rng rng(2);
  const auto V = make_sample(model.visible_dim(), model.frames(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(unnormalized_loglik(model, V));
}
BENCHMARK(BM_LogLikelihood)->Args({3, 10, 80})->Args({3, 20, 80})->Args({3, 10, 160})->Args({60, 10, 80});

void BM_MeanField(benchmark::State& state) {
  const auto model = make_model(state.range(0), state.range(1), state.range(2));
  Rng rng(3);
  const auto V = make_sample(model.visible_dim(), model.frames(), rng);
  const auto h = sample_hidden(model, V, rng);
  for (auto _ : state) benchmark::DoNotOptimize(mean_field_reconstruct(model, h, V, 10));
}
BENCHMARK(BM_MeanField)->Args({3, 10, 80})->Args({60, 10, 80});

void BM_CdGradient(benchmark::State& state) {
  const auto model = make_model(state.range(0), state.range(1), state.range(2));
  Rng rng(4);
  std::vector<SequenceSample> batch;
  for (int k = 0; k < 16; ++k) batch.push_back(make_sample(model.visible_dim(), model.frames(), rng));
  const TrainConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(cd_gradient(model, batch, config, rng));
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_CdGradient)->Args({3, 10, 80})->Args({3, 10, 160})->Args({3, 20, 80})->Args({60, 10, 80});

void BM_Predict(benchmark::State& state) {
  const auto classes = static_cast<std::size_t>(state.range(0));
  ClassifierBundle bundle;
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < classes; ++c) {
    bundle.models.push_back(make_model(3, 10, 80));
    labels.push_back("c" + std::to_string(c));
  }
  bundle.calibration = PairwiseCalibration(labels);
  Rng rng(5);
  const auto V = make_sample(3, 10, rng);
  for (auto _ : state) benchmark::DoNotOptimize(score_and_predict(bundle, V));
}
BENCHMARK(BM_Predict)->Arg(3)->Arg(7)->Arg(20);

void BM_ExactLogPartition(benchmark::State& state) {
  const auto model = make_model(3, 3, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(oracle::exact_log_partition(model));
}
BENCHMARK(BM_ExactLogPartition)->Arg(4)->Arg(8)->Arg(12);

}  // namespace

BENCHMARK_MAIN();
