#pragma once

#include <filesystem>

#include "beam/recording.hpp"
#include "beam/stft.hpp"

namespace beam {

struct AugmentConfig {
  double noise_mean = 0.0;
  double noise_std = 0.001;
  int stft_window = 256;
  int stft_hop = 128;
  uint64_t rng_seed = 0;
};

/// STFT-domain amplitude perturbation: per channel, per time-frequency cell,
/// magnitude' = max(0, magnitude + n) with n ~ N(mean, std^2); phase is kept
/// and the channel is rebuilt by inverse STFT. View/subject/label are
/// untouched. `sample_index` salts the per-sample RNG stream so parallel
/// application stays deterministic.
Sample augment_sample(const Sample& s, const AugmentConfig& cfg, uint64_t sample_index);

/// Applies augment_sample to every sample of every subject under `in_dir`
/// (one perturbed copy per input sample), writing the result to `out_dir`.
void augment_dataset(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                     const AugmentConfig& cfg);

}  // namespace beam
