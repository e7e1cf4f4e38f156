#include <benchmark/benchmark.h>

#include "bcnet/kernels.hpp"
#include "bcnet/rng.hpp"

namespace {

using bcnet::ChannelRange;
using bcnet::Matrix;

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  bcnet::Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.data) v = bcnet::standard_normal(rng);
  return m;
}

struct Layer {
  Matrix weight;
  std::vector<double> bias;
  Matrix x;
  Matrix dy;
  ChannelRange out;
  ChannelRange in;
};

// Active block is the left three quarters of a width x width layer.
Layer make_layer(int batch, int width) {
  const int active = width * 3 / 4;
  Layer l{random_matrix(width, width, 1), std::vector<double>(static_cast<std::size_t>(width), 0.1),
          random_matrix(batch, active, 2), random_matrix(batch, active, 3),
          ChannelRange{0, active}, ChannelRange{0, active}};
  return l;
}

template <auto Forward>
void BM_Forward(benchmark::State& state) {
  auto l = make_layer(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  Matrix y(l.x.rows, l.out.size());
  for (auto _ : state) {
    Forward(l.weight, l.bias, l.out, l.in, l.x, y, true);
    benchmark::DoNotOptimize(y.data.data());
  }
  state.SetItemsProcessed(state.iterations() * l.x.rows);
}

template <auto Backward>
void BM_Backward(benchmark::State& state) {
  auto l = make_layer(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  Matrix grad_w(l.weight.rows, l.weight.cols);
  std::vector<double> grad_b(l.bias.size());
  Matrix dx(l.x.rows, l.in.size());
  for (auto _ : state) {
    Backward(l.weight, l.out, l.in, l.x, l.dy, 1.0, grad_w, grad_b, &dx);
    benchmark::DoNotOptimize(dx.data.data());
  }
  state.SetItemsProcessed(state.iterations() * l.x.rows);
}

void sizes(benchmark::internal::Benchmark* b) {
  for (int batch : {64, 256}) {
    for (int width : {32, 128, 512}) b->Args({batch, width});
  }
}

BENCHMARK(BM_Forward<bcnet::kernels::serial::dense_forward>)->Name("forward/serial")->Apply(sizes);
BENCHMARK(BM_Forward<bcnet::kernels::parallel::dense_forward>)->Name("forward/parallel")->Apply(sizes);
BENCHMARK(BM_Backward<bcnet::kernels::serial::dense_backward>)->Name("backward/serial")->Apply(sizes);
BENCHMARK(BM_Backward<bcnet::kernels::parallel::dense_backward>)->Name("backward/parallel")->Apply(sizes);

}  // namespace

BENCHMARK_MAIN();
