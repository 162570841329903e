#include <benchmark/benchmark.h>

#include "sdrgain/baselines.hpp"
#include "sdrgain/evalbench.hpp"
#include "sdrgain/gain.hpp"
#include "sdrgain/neural.hpp"

using namespace sdrgain;

namespace {

PartModels untrained_models() {
  RngStream rng(1);
  PartModels models;
  models.head = init_mlp({5, false}, rng);
  models.body = init_mlp({13, true}, rng);
  return models;
}

void BM_ImputePose(benchmark::State& state) {
  const PartModels models = untrained_models();
  const std::vector<Pose18> poses = mask_poses(synth_poses(256, 2), 0.2, 0);
  const ImputeOptions options{state.range(0) ? NoiseMode::Nearest : NoiseMode::Uniform, 0.2};
  RngStream rng(3);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(impute_pose(models, poses[i++ % poses.size()], options, rng));
  }
}
BENCHMARK(BM_ImputePose)->Arg(0)->Arg(1)->ArgName("nearest");

void BM_Forward(benchmark::State& state) {
  const auto l = static_cast<std::size_t>(state.range(0));
  const auto cols = static_cast<Eigen::Index>(state.range(1));
  RngStream rng(4);
  const MlpParams net = init_mlp({l, l == 13}, rng);
  const Eigen::MatrixXd input = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(4 * l), cols).cwiseAbs();
  for (auto _ : state) benchmark::DoNotOptimize(forward(net, input));
  state.SetItemsProcessed(state.iterations() * cols);
}
BENCHMARK(BM_Forward)->Args({5, 1})->Args({13, 1})->Args({5, 128})->Args({13, 128});

void BM_TrainStep(benchmark::State& state) {
  const auto l = static_cast<std::size_t>(state.range(0));
  RngStream rng(5);
  MlpParams g = init_mlp({l, l == 13}, rng);
  MlpParams d = init_mlp({l, l == 13}, rng);
  const Eigen::Index rows = static_cast<Eigen::Index>(2 * l);
  Minibatch batch{Eigen::MatrixXd::Constant(rows, 128, 0.5), Eigen::MatrixXd::Ones(rows, 128),
                  Eigen::MatrixXd::Constant(rows, 128, 0.5), Eigen::MatrixXd::Zero(rows, 128)};
  const TrainConfig cfg = l == 13 ? default_body_config() : default_head_config();
  for (auto _ : state) benchmark::DoNotOptimize(train_step(g, d, batch, cfg));
}
BENCHMARK(BM_TrainStep)->Arg(5)->Arg(13);

void BM_PchipImpute(benchmark::State& state) {
  SeriesWithGaps series;
  for (int i = 0; i < 13; ++i) {
    series.values.push_back(static_cast<double>(i * i % 7));
    series.observed.push_back(i % 4 != 1);
  }
  for (auto _ : state) benchmark::DoNotOptimize(pchip_impute(series));
}
BENCHMARK(BM_PchipImpute);

void BM_MakimaImpute(benchmark::State& state) {
  SeriesWithGaps series;
  for (int i = 0; i < 13; ++i) {
    series.values.push_back(static_cast<double>(i * i % 7));
    series.observed.push_back(i % 4 != 1);
  }
  for (auto _ : state) benchmark::DoNotOptimize(makima_impute(series));
}
BENCHMARK(BM_MakimaImpute);

}  // namespace
BENCHMARK_MAIN();
