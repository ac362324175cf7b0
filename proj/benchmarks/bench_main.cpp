#include <benchmark/benchmark.h>

#include "vmflow/attn_mask.hpp"
#include "vmflow/flow_infer.hpp"
#include "vmflow/flow_train.hpp"
#include "vmflow/granger.hpp"
#include "vmflow/ops.hpp"

using namespace vmflow;

namespace {

ModelDims bench_dims(std::size_t width) {
  ModelDims d;
  d.token_dim = 8;
  d.sample_len = 8;
  d.cond_dim = 16;
  d.cond_len = 1;
  d.latent_dim = 8;
  d.width = width;
  d.heads = 4;
  d.blocks = 2;
  d.mlp_ratio = 2;
  d.time_freqs = 8;
  d.disp_layer = 1;
  d.phi_hidden = 64;
  return d;
}

void BM_BuildMask(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  for (auto _ : state) {
    const GroupSplit split = split_with_decay(len, 0.5, rng);
    benchmark::DoNotOptimize(build_mask(len, 4, 4, split));
  }
}
BENCHMARK(BM_BuildMask)->Arg(8)->Arg(16)->Arg(64);

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Tensor a = Tensor::randn({n, n}, rng), b = Tensor::randn({n, n}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(ops::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(128);

void BM_TrainStep(benchmark::State& state) {
  const ModelDims d = bench_dims(static_cast<std::size_t>(state.range(0)));
  TrainConfig cfg;
  cfg.variant = Variant::kVMFD;
  FlowTrainer tr(d, cfg, 3);
  Rng rng(4);
  const Tensor x = Tensor::randn({32, d.sample_len, d.token_dim}, rng);
  const Tensor c = Tensor::randn({32, d.cond_len, d.cond_dim}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(tr.step(x, c));
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Sample(benchmark::State& state) {
  const ModelDims d = bench_dims(64);
  Rng init(5);
  const CatModel model(d, init);
  CatVelocityField field(model, true);
  Rng rng(6);
  const Tensor c = Tensor::randn({64, d.cond_len, d.cond_dim}, rng);
  const auto nfe = static_cast<std::size_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_multi_step(field, c, {64, d.sample_len, d.token_dim}, Rng(7), nfe, 1.5f));
}
BENCHMARK(BM_Sample)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Granger(benchmark::State& state) {
  Rng rng(8);
  std::vector<double> x(500), y(500);
  for (auto& v : x) v = rng.normal();
  for (auto& v : y) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(granger_test(x, y, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_Granger)->Arg(1)->Arg(4);

}  // namespace
BENCHMARK_MAIN();
