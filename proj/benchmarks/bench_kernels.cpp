// Hot paths: convolution, pooling, a full forward/backward step, the
// multiscale encoder, confusion matrices and the PR sweep.

#include <benchmark/benchmark.h>

#include <random>

#include "vpr/encoding.hpp"
#include "vpr/network.hpp"
#include "vpr/ops.hpp"
#include "vpr/placerec.hpp"

namespace {

using namespace vpr;

Tensor3 noise(Shape3 s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1, 1);
  Tensor3 t(s);
  for (float& v : t.storage()) v = u(rng);
  return t;
}

void BM_Conv(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const Tensor3 x = noise({c, 32, 32}, 1);
  ConvKernelBank bank(c, c, k);
  std::mt19937_64 rng(2);
  for (float& w : bank.weights) w = std::normal_distribution<float>(0, 0.01f)(rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward(x, bank, 1, k / 2));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c * c * k * k * 32 * 32));
}
BENCHMARK(BM_Conv)->Args({16, 3})->Args({32, 3})->Args({64, 3})->Args({32, 5});

void BM_MaxPool(benchmark::State& state) {
  const Tensor3 x = noise({96, 55, 55}, 3);
  const auto window = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(maxpool_forward(x, window, 2));
}
BENCHMARK(BM_MaxPool)->Arg(2)->Arg(3);

void BM_TrainStep(benchmark::State& state) {
  const NetworkSpec spec = amosnet_mini_spec(10);
  const ModelWeights w = init_weights(spec, 4, 0.05);
  const Tensor3 x = noise(spec.input, 5);
  for (auto _ : state) {
    const auto tape = forward_with_tape(spec, w, x);
    benchmark::DoNotOptimize(backward(spec, w, tape, 3));
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_Multiscale(benchmark::State& state) {
  const Tensor3 maps = noise({256, 13, 13}, 6);
  const std::vector<std::size_t> scales{1, 2, 3, 4};
  for (auto _ : state) benchmark::DoNotOptimize(multiscale_pool(maps, scales, true));
}
BENCHMARK(BM_Multiscale);

std::vector<Descriptor> descriptors(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0, 1);
  std::vector<Descriptor> out(n);
  for (auto& d : out) {
    d.values.resize(dim);
    for (float& v : d.values) v = u(rng);
    l2_normalize(d.values);
  }
  return out;
}

void BM_Confusion(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto q = descriptors(n, 7680, 7), r = descriptors(n, 7680, 8);
  for (auto _ : state) benchmark::DoNotOptimize(build_confusion(q, r, Metric::kCosine));
}
BENCHMARK(BM_Confusion)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_PrSweep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(9);
  std::vector<float> v(n * n);
  for (float& x : v) x = std::uniform_real_distribution<float>(0, 2)(rng);
  const ConfusionMatrix m(n, n, std::move(v));
  const GroundTruth gt = identity_ground_truth(n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_pr(m, gt));
}
BENCHMARK(BM_PrSweep)->Arg(200)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
