// OpenMP kernels against the serial reference versions.
#include <benchmark/benchmark.h>

#include <omp.h>

#include "micclass/cnn.hpp"
#include "micclass/denoise_dsp.hpp"
#include "micclass/reference.hpp"
#include "micclass/rng.hpp"

using namespace micclass;

namespace {

Matrix image(std::size_t n) {
  Rng rng(1);
  Matrix m(n, n);
  for (auto& v : m.data()) v = rng.uniform();
  return m;
}

Tensor4 tensor(std::size_t c, std::size_t n) {
  Rng rng(2);
  Tensor4 t(4, c, n, n);
  for (auto& v : t.data) v = rng.gaussian();
  return t;
}

Conv2d layer(std::size_t c) {
  Rng rng(3);
  Conv2d l(c, c);
  for (auto& v : l.weight) v = rng.gaussian(0, 0.1);
  return l;
}

void BM_NlmOmp(benchmark::State& s) {
  const auto v = image(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(nlm_denoise(v, NlmParams{}));
  s.counters["threads"] = omp_get_max_threads();
}
void BM_NlmSerial(benchmark::State& s) {
  const auto v = image(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(reference::nlm_denoise(v, NlmParams{}));
}
void BM_BilateralOmp(benchmark::State& s) {
  const auto v = image(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(bilateral_denoise(v, BilateralParams{}));
  s.counters["threads"] = omp_get_max_threads();
}
void BM_BilateralSerial(benchmark::State& s) {
  const auto v = image(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(reference::bilateral_denoise(v, BilateralParams{}));
}
void BM_ConvForwardOmp(benchmark::State& s) {
  const auto x = tensor(s.range(0), 40);
  const auto l = layer(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(conv2d_forward(x, l));
  s.counters["threads"] = omp_get_max_threads();
}
void BM_ConvForwardSerial(benchmark::State& s) {
  const auto x = tensor(s.range(0), 40);
  const auto l = layer(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(reference::conv2d_forward(x, l));
}
void BM_ConvBackwardOmp(benchmark::State& s) {
  const auto x = tensor(s.range(0), 40), g = tensor(s.range(0), 40);
  const auto l = layer(s.range(0));
  for (auto _ : s) {
    Conv2dGrads grads;
    benchmark::DoNotOptimize(conv2d_backward(x, l, g, grads));
  }
  s.counters["threads"] = omp_get_max_threads();
}
void BM_ConvBackwardSerial(benchmark::State& s) {
  const auto x = tensor(s.range(0), 40), g = tensor(s.range(0), 40);
  const auto l = layer(s.range(0));
  for (auto _ : s) {
    Conv2dGrads grads;
    benchmark::DoNotOptimize(reference::conv2d_backward(x, l, g, grads));
  }
}

}  // namespace

BENCHMARK(BM_NlmOmp)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NlmSerial)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BilateralOmp)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BilateralSerial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForwardOmp)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForwardSerial)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackwardOmp)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackwardSerial)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
