// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "nvens/antenna_field.hpp"
#include "nvens/kernels.hpp"
#include "nvens/nv_photophysics.hpp"
#include "nvens/protocols.hpp"

using namespace nvens;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) == 0 ? Exec::serial : Exec::parallel; }

void BM_FieldMap(benchmark::State& st) {
  const GridSpec g{5.0, 5.0, static_cast<int>(st.range(1)), static_cast<int>(st.range(1))};
  for (auto _ : st) {
    auto m = antenna::perpendicular_field_map(antenna::AntennaSpec{}, g, antenna::NVFrame{}, exec_of(st));
    benchmark::DoNotOptimize(m.values().data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(g.size()));
}

void BM_SensitivityMap(benchmark::State& st) {
  const GridSpec g{5.0, 5.0, 100, 100};
  const ScalarField2D om = antenna::biot_savart_rabi_map(antenna::AntennaSpec{}, g, antenna::NVFrame{});
  protocols::ProtocolParams pp;
  pp.protocol = static_cast<protocols::Protocol>(st.range(1));
  for (auto _ : st) {
    auto m = protocols::sensitivity_map(om, pp, std::nullopt, exec_of(st));
    benchmark::DoNotOptimize(m.values().data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(g.size()));
}

void BM_PoissonShots(benchmark::State& st) {
  const kernels::PoissonShotJob job{static_cast<double>(st.range(1)), 1, 1000000, 64};
  std::vector<double> out(job.shots);
  for (auto _ : st) {
    if (st.range(0) == 0)
      kernels::serial::poisson_shots(job, out);
    else
      kernels::omp::poisson_shots(job, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(job.shots));
}

void BM_Penalty(benchmark::State& st) {
  const auto i = photophysics::gaussian_intensity(20000, 1.5, 0.328, 1);
  const std::vector<double> t(i.size(), 1.5);
  const photophysics::PenaltyConfig cfg;
  for (auto _ : st) {
    auto r = photophysics::illumination_penalty(i, t, cfg, protocols::RamseyParams{}, {}, exec_of(st));
    benchmark::DoNotOptimize(r.loss_db);
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(i.size()));
}

}  // namespace

// First argument: 0 = serial reference, 1 = OpenMP.
BENCHMARK(BM_FieldMap)->ArgsProduct({{0, 1}, {100, 250}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SensitivityMap)->ArgsProduct({{0, 1}, {0, 1, 2}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PoissonShots)->ArgsProduct({{0, 1}, {10, 10000}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Penalty)->ArgsProduct({{0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
