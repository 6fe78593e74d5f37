#include "beam/augment.hpp"

#include <cmath>

#include "beam/eeg_io.hpp"
#include "beam/rng.hpp"

namespace beam {

Sample augment_sample(const Sample& s, const AugmentConfig& cfg, uint64_t sample_index) {
  require(cfg.noise_std >= 0.0, "noise std must be >= 0");
  require(s.window >= cfg.stft_window, "sample window shorter than one stft frame");

  const StftConfig stft_cfg{cfg.stft_window, cfg.stft_hop};
  Sample out = s;
  Rng rng(derive_seed(cfg.rng_seed, sample_index));
  std::vector<double> channel(s.window);
  for (int c = 0; c < s.channels; ++c) {
    const float* src = s.data.data() + static_cast<size_t>(c) * s.window;
    for (int i = 0; i < s.window; ++i) channel[i] = src[i];
    Spectrogram spec = stft(channel, stft_cfg);
    for (auto& cell : spec.cells) {
      const double mag = std::abs(cell);
      const double perturbed = std::max(0.0, mag + rng.gaussian(cfg.noise_mean, cfg.noise_std));
      if (mag > 0.0) {
        cell *= perturbed / mag;
      } else {
        cell = {perturbed, 0.0};  // zero magnitude carries no phase
      }
    }
    const std::vector<double> rebuilt = istft(spec, s.window);
    float* dst = out.data.data() + static_cast<size_t>(c) * s.window;
    for (int i = 0; i < s.window; ++i) dst[i] = static_cast<float>(rebuilt[i]);
  }
  return out;
}

void augment_dataset(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                     const AugmentConfig& cfg) {
  const std::vector<std::string> ids = read_manifest(in_dir);
  for (const std::string& id : ids) {
    SubjectSamples ss = read_subject_samples(in_dir, id);
    AugmentConfig subject_cfg = cfg;
    subject_cfg.rng_seed = derive_seed(cfg.rng_seed, fnv1a64(id));
    for (size_t i = 0; i < ss.samples.size(); ++i)
      ss.samples[i] = augment_sample(ss.samples[i], subject_cfg, i);
    write_subject_samples(ss, out_dir);
  }
  write_manifest(out_dir, ids);
}

}  // namespace beam
