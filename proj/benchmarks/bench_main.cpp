// Microbenchmarks for the hot paths: the STFT/log-mel frontend, the
// DepAudioNet forward pass, and the instance-discriminative batch loss.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "idl/common.hpp"
#include "idl/dsp.hpp"
#include "idl/loss.hpp"
#include "idl/model.hpp"
#include "idl/synth.hpp"

namespace {

idl::Waveform make_wave(int seconds) {
  auto corpus = idl::synth_corpus(1, 1, 7, false);
  idl::Waveform w = corpus.waves.front();
  // Tile to the requested duration.
  std::vector<float> s;
  while (static_cast<int>(s.size()) < seconds * idl::kSampleRate) {
    s.insert(s.end(), w.samples.begin(), w.samples.end());
  }
  s.resize(static_cast<std::size_t>(seconds) * idl::kSampleRate);
  w.samples = std::move(s);
  return w;
}

void BM_LogMelFrontend(benchmark::State& state) {
  const idl::Waveform wave = make_wave(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(idl::extract_log_mel(wave));
  }
  state.SetItemsProcessed(state.iterations() *
                          idl::num_frames(wave.samples.size()));
}
BENCHMARK(BM_LogMelFrontend)->Arg(4)->Arg(16);

void BM_ForwardEmbed(benchmark::State& state) {
  auto net = idl::init_depaudionet<float>(11);
  idl::Matrix x(idl::kNumMels, idl::kSegmentFrames);
  std::mt19937_64 rng(3);
  std::normal_distribution<float> d(0.f, 1.f);
  for (auto& v : x.v) v = d(rng);
  for (auto _ : state) {
    auto out = idl::forward_depaudionet(net, x, idl::ForwardMode::Embed,
                                        /*train=*/false, rng);
    benchmark::DoNotOptimize(out->val);
  }
}
BENCHMARK(BM_ForwardEmbed);

void BM_IdlLoss(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(5);
  std::normal_distribution<float> d(0.f, 1.f);
  auto make = [&]() {
    std::vector<float> vals(static_cast<std::size_t>(n) * idl::kEmbeddingDim);
    for (auto& v : vals) v = d(rng);
    return idl::nn::make_leaf<float>({n, idl::kEmbeddingDim}, std::move(vals),
                                     false);
  };
  auto f = make();
  auto f_hat = make();
  for (auto _ : state) {
    auto loss = idl::idl_loss(f, f_hat, float(idl::kDefaultTau));
    benchmark::DoNotOptimize(loss->val);
  }
}
BENCHMARK(BM_IdlLoss)->Arg(20)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
