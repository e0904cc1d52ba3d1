// Microbenchmarks for the kernels that dominate a full experiment run:
// steering-vector construction, one uplink slot, convolution forward/backward,
// one recurrent step, the spectrum search, and the discrete transform.

#include <benchmark/benchmark.h>

#include <complex>
#include <vector>

#include "xltrack/aoa.hpp"
#include "xltrack/channel.hpp"
#include "xltrack/config.hpp"
#include "xltrack/geometry.hpp"
#include "xltrack/layers.hpp"
#include "xltrack/lstm.hpp"
#include "xltrack/rng.hpp"
#include "xltrack/signal_features.hpp"

namespace {

using namespace xltrack;

const ScenarioGeometry& scene() {
  static const ScenarioGeometry g = [] {
    GeometryConfig gc;  // 10x10 surface, 4x4 station
    return gc.build();
  }();
  return g;
}

nn::Tensor rand_tensor(std::vector<int> shape, Rng& rng) {
  nn::Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_LosSteering(benchmark::State& state) {
  const auto& geom = scene();
  const Position3D p{4.2, 3.1, 1.3};
  for (auto _ : state) {
    auto a = los_steering(p, geom);
    benchmark::DoNotOptimize(a.data());
  }
}
BENCHMARK(BM_LosSteering);

void BM_UplinkSlot(benchmark::State& state) {
  const auto& geom = scene();
  Rng rng(2);
  const ScattererSet scat = ScattererSet::random(9, 10.0, 10.0, 3.0, 1.0, 0.1, rng);
  const PhaseProfile omega = PhaseProfile::ones(geom.n());
  const ComplexMatrix H = bs_ris_channel(geom, cxd{1.0, 0.0});
  const cxd pilot = pilot_from_dbm(30.0);
  const Position3D p{4.0, 3.0, 1.2};
  for (auto _ : state) {
    auto r = simulate_uplink(p, scat, geom, omega, pilot, 1e-3, rng, H,
                             UplinkOptions{});
    benchmark::DoNotOptimize(r.y.samples.data());
  }
}
BENCHMARK(BM_UplinkSlot);

void BM_Conv2dForwardBackward(benchmark::State& state) {
  Rng rng(3);
  const nn::Tensor xt = rand_tensor({3, 16, 16}, rng);
  const nn::Tensor wt = rand_tensor({8, 3, 3, 3}, rng);
  const nn::Tensor bt = rand_tensor({8}, rng);
  for (auto _ : state) {
    nn::Variable x(xt, true);
    nn::Variable w(wt, true);
    nn::Variable b(bt, true);
    nn::Variable loss = nn::sum(nn::conv2d(x, w, b, 1, 1));
    nn::backward(loss);
    benchmark::DoNotOptimize(loss.value()[0]);
  }
}
BENCHMARK(BM_Conv2dForwardBackward);

void BM_LstmStep(benchmark::State& state) {
  Rng rng(4);
  nn::LstmCell cell("c", 32, 64, rng);
  const nn::Tensor xt = rand_tensor({16, 32}, rng);
  const nn::Tensor ht = rand_tensor({16, 64}, rng);
  const nn::Tensor ct = rand_tensor({16, 64}, rng);
  for (auto _ : state) {
    nn::LstmState prev;
    prev.hidden = nn::Variable(ht);
    prev.cell = nn::Variable(ct);
    auto [h, st] = nn::lstm_step(nn::Variable(xt), prev, cell);
    (void)st;
    benchmark::DoNotOptimize(h.value()[0]);
  }
}
BENCHMARK(BM_LstmStep);

void BM_MusicSpectrum(benchmark::State& state) {
  const auto& geom = scene();
  const auto subs = partition_subarrays(10, 10, 2, 2);
  const AngleGrid grid = make_angle_grid(4.0);
  const MusicWorkspace ws =
      make_music_workspace(subs[0].elevation_count, subs[0].azimuth_count,
                           geom.spacing, geom.wavelength, grid, false);
  Rng rng(5);
  const auto v = subarray_steering(subs[0], geom.spacing, geom.wavelength, 1.0, 2.0);
  ComplexMatrix snaps(ws.p, 32);
  for (int s = 0; s < 32; ++s) {
    const cxd amp = rng.complex_normal(1.0);
    for (int r = 0; r < ws.p; ++r) {
      snaps.at(r, s) = v[r] * amp + rng.complex_normal(0.01);
    }
  }
  for (auto _ : state) {
    const MusicResult res = music_aoa(covariance(snaps), ws, 1);
    benchmark::DoNotOptimize(res.peak);
  }
}
BENCHMARK(BM_MusicSpectrum);

void BM_Dft64(benchmark::State& state) {
  Rng rng(6);
  std::vector<cxd> x(64);
  for (auto& v : x) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  for (auto _ : state) {
    auto X = dft(x);
    benchmark::DoNotOptimize(X.data());
  }
}
BENCHMARK(BM_Dft64);

}  // namespace

BENCHMARK_MAIN();
