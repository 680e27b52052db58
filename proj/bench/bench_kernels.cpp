#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <vector>

#include "sesn/kernels.hpp"

using namespace sesn;
namespace k = sesn::kernels;

namespace {

std::vector<Real> filled(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> d(-1.0, 1.0);
  std::vector<Real> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Layer shapes of the full-size network at batch 4.
const k::ConvDims kConv{4, 64, 500, 3, 32, 3, 3};
const k::ConvDims kConvDeep{4, 16, 10, 64, 128, 3, 3};
const k::DenseDims kDense{32, 2048, 100};
const k::PoolDims kPool{4, 64, 500, 32, 2, 10};

void conv_forward(benchmark::State& state, const k::ConvDims& d, bool parallel) {
  const auto in = filled(d.input_size(), 1), w = filled(d.weight_size(), 2), b = filled(d.out_channels, 3);
  std::vector<Real> out(d.output_size());
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    if (parallel) k::conv2d_forward(d, in, w, b, out);
    else k::reference::conv2d_forward(d, in, w, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * d.output_size()));
}

void conv_backward(benchmark::State& state, const k::ConvDims& d, bool parallel) {
  const auto in = filled(d.input_size(), 1), w = filled(d.weight_size(), 2), go = filled(d.output_size(), 3);
  std::vector<Real> gi(d.input_size()), gw(d.weight_size()), gb(d.out_channels);
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    if (parallel) {
      k::conv2d_backward_input(d, go, w, gi);
      k::conv2d_backward_weight(d, in, go, gw, gb);
    } else {
      k::reference::conv2d_backward_input(d, go, w, gi);
      k::reference::conv2d_backward_weight(d, in, go, gw, gb);
    }
    benchmark::DoNotOptimize(gi.data());
    benchmark::DoNotOptimize(gw.data());
  }
}

void dense_forward(benchmark::State& state, bool parallel) {
  const auto& d = kDense;
  const auto in = filled(d.batch * d.in_features, 1), w = filled(d.in_features * d.out_features, 2),
             b = filled(d.out_features, 3);
  std::vector<Real> out(d.batch * d.out_features);
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    if (parallel) k::dense_forward(d, in, w, b, out);
    else k::reference::dense_forward(d, in, w, b, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void maxpool_forward(benchmark::State& state, bool parallel) {
  const auto& d = kPool;
  const auto in = filled(d.batch * d.height * d.width * d.channels, 1);
  std::vector<Real> out(d.output_size());
  std::vector<std::size_t> arg(d.output_size());
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    if (parallel) k::maxpool_forward(d, in, out, arg);
    else k::reference::maxpool_forward(d, in, out, arg);
    benchmark::DoNotOptimize(out.data());
  }
}

void thread_counts(benchmark::internal::Benchmark* b) {
  const int max = omp_get_num_procs();
  for (int t = 1; t < max; t *= 2) b->Arg(t);
  b->Arg(max);
}

}  // namespace

BENCHMARK_CAPTURE(conv_forward, reference_block1, kConv, false)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(conv_forward, openmp_block1, kConv, true)->Apply(thread_counts)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(conv_forward, reference_block3, kConvDeep, false)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(conv_forward, openmp_block3, kConvDeep, true)->Apply(thread_counts)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(conv_backward, reference_block1, kConv, false)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(conv_backward, openmp_block1, kConv, true)->Apply(thread_counts)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(dense_forward, reference, false)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(dense_forward, openmp, true)->Apply(thread_counts)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(maxpool_forward, reference, false)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(maxpool_forward, openmp, true)->Apply(thread_counts)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
