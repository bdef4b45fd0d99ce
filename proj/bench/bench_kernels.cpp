// Serial reference vs OpenMP kernels on a screen-sized field.
#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "toa/kernels.hpp"
#include "toa/propagators.hpp"

using namespace toa;
namespace k = toa::kernels;

namespace {

std::vector<cd> field(k::Shape s) {
  std::vector<cd> psi(s.size());
  for (int j = 0; j < s.ny; ++j)
    for (int i = 0; i < s.nx; ++i)
      psi[static_cast<std::size_t>(j) * s.nx + i] = std::polar(std::exp(-1e-4 * (i * i + j * j)), 0.01 * i);
  return psi;
}

template <bool Omp>
void BM_sweep_x(benchmark::State &st) {
  const k::Shape s{static_cast<int>(st.range(0)), static_cast<int>(st.range(0))};
  const LineStep step = numerov_cn_line(s.nx, 0.1, 0.005, PhysicalConstants{});
  auto psi = field(s);
  for (auto _ : st) {
    if constexpr (Omp) k::sweep_x(step, s, psi);
    else k::serial::sweep_x(step, s, psi);
    benchmark::DoNotOptimize(psi.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(s.size()));
}

template <bool Omp>
void BM_sweep_y(benchmark::State &st) {
  const k::Shape s{static_cast<int>(st.range(0)), static_cast<int>(st.range(0))};
  const LineStep step = numerov_cn_line(s.ny, 0.1, 0.005, PhysicalConstants{});
  auto psi = field(s);
  for (auto _ : st) {
    if constexpr (Omp) k::sweep_y(step, s, psi);
    else k::serial::sweep_y(step, s, psi);
    benchmark::DoNotOptimize(psi.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(s.size()));
}

template <bool Omp>
void BM_row_probability(benchmark::State &st) {
  const k::Shape s{static_cast<int>(st.range(0)), static_cast<int>(st.range(0))};
  const auto psi = field(s);
  std::vector<double> wx(s.nx, 0.1), out(s.ny);
  for (auto _ : st) {
    if constexpr (Omp) k::row_probability(s, wx, psi, out);
    else k::serial::row_probability(s, wx, psi, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(s.size()));
}

}  // namespace

BENCHMARK(BM_sweep_x<false>)->Arg(256)->Arg(1024);
BENCHMARK(BM_sweep_x<true>)->Arg(256)->Arg(1024);
BENCHMARK(BM_sweep_y<false>)->Arg(256)->Arg(1024);
BENCHMARK(BM_sweep_y<true>)->Arg(256)->Arg(1024);
BENCHMARK(BM_row_probability<false>)->Arg(256)->Arg(1024);
BENCHMARK(BM_row_probability<true>)->Arg(256)->Arg(1024);

BENCHMARK_MAIN();
