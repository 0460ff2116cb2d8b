#include <benchmark/benchmark.h>

#include "dtgan/baseline_gan.hpp"
#include "dtgan/datagen.hpp"
#include "dtgan/objective.hpp"
#include "dtgan/trainer.hpp"

using namespace dtgan;

namespace {

SampleBatch make_batch(int n, int k, int n_x, int n_z, std::uint64_t seed) {
  RngState rng = RngState::seeded(seed);
  Eigen::MatrixXd data(n, n_x);
  for (int j = 0; j < n_x; ++j)
    for (int i = 0; i < n; ++i) data(i, j) = rng.next_normal();
  const LatentSpec spec(k, 1);
  std::vector<SparseLatent> latents;
  for (int i = 0; i < n_z; ++i) latents.push_back(sample_latent(spec, rng));
  return SampleBatch(std::move(data), std::move(latents));
}

void BM_EmpiricalObjective(benchmark::State& state) {
  const int n_x = static_cast<int>(state.range(0));
  const SampleBatch batch = make_batch(2, 4, n_x, 128, 1);
  const GameConfig cfg = GameConfig::defaults_for(4);
  auto [d, t] = init_players(2, 4, 2, cfg, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(empirical_objective(d, t, batch, cfg).total);
  }
}
BENCHMARK(BM_EmpiricalObjective)->Arg(1000)->Arg(5000);

void BM_GradTransform(benchmark::State& state) {
  const SampleBatch batch = make_batch(2, 4, static_cast<int>(state.range(0)), 128, 3);
  const GameConfig cfg = GameConfig::defaults_for(4);
  auto [d, t] = init_players(2, 4, 2, cfg, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(grad_transform(d, t, batch, cfg).sum());
  }
}
BENCHMARK(BM_GradTransform)->Arg(1000)->Arg(5000);

void BM_GradDictionary(benchmark::State& state) {
  const SampleBatch batch = make_batch(2, 4, static_cast<int>(state.range(0)), 128, 5);
  const GameConfig cfg = GameConfig::defaults_for(4);
  auto [d, t] = init_players(2, 4, 2, cfg, 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(grad_dictionary(d, t, batch, cfg).sum());
  }
}
BENCHMARK(BM_GradDictionary)->Arg(1000)->Arg(5000);

void BM_TrainOuterIteration(benchmark::State& state) {
  RngState rng = RngState::seeded(7);
  const auto data_vec = sample_gmm(MixtureSpec(2.5), 5000, rng);
  const Eigen::MatrixXd data = samples_to_matrix(data_vec);
  const GameConfig cfg = GameConfig::defaults_for(4);
  TrainConfig tc;
  tc.outer_iters = static_cast<int>(state.range(0));
  tc.seed = 8;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train(data, LatentSpec(4, 1), cfg, tc).dictionary.entries.sum());
  }
}
BENCHMARK(BM_TrainOuterIteration)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_GanStep(benchmark::State& state) {
  RngState rng = RngState::seeded(9);
  const Eigen::MatrixXd data = samples_to_matrix(sample_gmm(MixtureSpec(2.5), 128, rng));
  GanConfig cfg;
  cfg.batch_size = 128;
  MlpParams params = gan_initial_params(2, cfg);
  RngState step_rng = RngState::seeded(10);
  for (auto _ : state) {
    params = gan_step(params, data, cfg, step_rng);
    benchmark::DoNotOptimize(params.g_w1.sum());
  }
}
BENCHMARK(BM_GanStep);

void BM_SampleGmm(benchmark::State& state) {
  const MixtureSpec spec(2.5);
  RngState rng = RngState::seeded(11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_gmm(spec, static_cast<int>(state.range(0)), rng).size());
  }
}
BENCHMARK(BM_SampleGmm)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
