#include <benchmark/benchmark.h>

#include "beam/encoder.hpp"
#include "beam/preprocess.hpp"
#include "beam/rng.hpp"
#include "beam/stft.hpp"
#include "beam/synthgen.hpp"

namespace {

void BM_MatmulForwardBackward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  beam::Rng rng(7);
  std::vector<float> av(static_cast<size_t>(n) * n), bv(av.size());
  for (auto& x : av) x = static_cast<float>(rng.uniform(-1, 1));
  for (auto& x : bv) x = static_cast<float>(rng.uniform(-1, 1));
  for (auto _ : state) {
    auto a = beam::Var<float>::leaf({n, n}, av);
    auto b = beam::Var<float>::leaf({n, n}, bv);
    auto loss = beam::mean_over_axis(beam::mean_over_axis(beam::matmul(a, b), 0));
    beam::backward(loss);
    benchmark::DoNotOptimize(a.grad());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(2) * n * n * n);
}
BENCHMARK(BM_MatmulForwardBackward)->Arg(64)->Arg(128);

void BM_EncodeWindow(benchmark::State& state) {
  beam::EncoderConfig cfg;
  cfg.max_channels = 8;
  cfg.max_patches = 4;
  cfg.d_model = 32;
  cfg.d_ff = 64;
  auto params = beam::EncoderParams<float>::init(cfg, 11);
  beam::Rng rng(3);
  std::vector<float> window(8 * 800);
  for (auto& x : window) x = static_cast<float>(rng.gaussian());
  for (auto _ : state) {
    auto latent = beam::encode_window(window, 8, 800, params);
    benchmark::DoNotOptimize(latent.values());
  }
}
BENCHMARK(BM_EncodeWindow);

void BM_BandpassFiltfilt(benchmark::State& state) {
  const auto sos = beam::butterworth_bandpass(4, 0.1, 75.0, 1000.0);
  const auto noise = beam::pink_noise(60000, 5);
  for (auto _ : state) {
    auto y = beam::sosfiltfilt(sos, noise);
    benchmark::DoNotOptimize(y);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(noise.size()));
}
BENCHMARK(BM_BandpassFiltfilt);

void BM_Stft(benchmark::State& state) {
  const auto noise = beam::pink_noise(4096, 9);
  for (auto _ : state) {
    auto spec = beam::stft(noise, beam::StftConfig{});
    benchmark::DoNotOptimize(spec.cells);
  }
}
BENCHMARK(BM_Stft);

}  // namespace

BENCHMARK_MAIN();
