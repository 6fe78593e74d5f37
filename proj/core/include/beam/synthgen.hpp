#pragma once

// Synthetic EEG cohorts shaped like the real study: pink-noise base per
// channel plus a class-conditional alpha-band (10 Hz) component on a fixed
// channel subset. Willingness scores are assigned so the cohort median split
// reproduces the planted classes. Everything is deterministic under the seed.

#include <filesystem>
#include <string>
#include <vector>

#include "beam/recording.hpp"

namespace beam {

struct SynthConfig {
  int n_subjects = 57;
  int channels = 32;
  double sample_rate_hz = 1000.0;
  // Clip durations in seconds. The defaults reproduce 65 ToM and 43 EM
  // windows per subject under the default preprocessing (200 Hz, W=4s, S=1s).
  std::vector<double> tom_clip_seconds = {14, 14, 14, 14, 14, 13};
  std::vector<double> em_clip_seconds = {9, 9, 9, 8, 8, 8, 8, 8};
  double gap_seconds = 1.0;  // silence before each clip and after the last
  double class_effect = 0.5;  // added alpha amplitude for High, in noise-floor units
  double alpha_base = 0.5;    // baseline alpha amplitude, in noise-floor units
  double alpha_hz = 10.0;
  double noise_floor = 1.0;  // pink-noise standard deviation
  uint64_t rng_seed = 42;

  void validate() const;
  /// Channels carrying the planted alpha component (c % 4 == 1).
  bool is_signal_channel(int c) const { return c % 4 == 1; }
};

/// Pink (1/f) noise of the given length, unit variance, via spectral synthesis.
std::vector<double> pink_noise(int64_t length, uint64_t seed);

/// Builds one subject's recording. `high_class` selects the alpha amplitude.
Recording synth_recording(const SynthConfig& cfg, int subject_index, bool high_class);

/// Writes n_subjects recordings plus a manifest into `out_dir`.
void generate(const SynthConfig& cfg, const std::filesystem::path& out_dir);

/// Mean Welch band power in [band_lo, band_hi] Hz (Hann, 50% overlap).
/// At most `max_seconds` of signal are used.
double welch_band_power(const float* signal, int64_t length, double fs_hz, double band_lo, double band_hi,
                        double max_seconds = 60.0);

/// Area under the ROC curve by exhaustive threshold sweep over the statistic.
double auc_threshold_sweep(const std::vector<double>& stats, const std::vector<int>& labels);

/// Per-subject alpha-band power, channel-averaged; the model-free statistic
/// behind the separability check.
std::vector<double> band_power_statistics(const std::vector<Recording>& recordings, double band_lo = 8.0,
                                          double band_hi = 12.0);

struct VerifyReport {
  bool format_ok = false;
  int n_subjects = 0;
  int n_low = 0, n_high = 0;
  std::vector<std::string> subject_ids;
  std::vector<int64_t> tom_counts;  // expected windows per subject at defaults
  std::vector<int64_t> em_counts;
  double oracle_auc = 0.0;
  std::string separability;  // "separable", "weak" or "chance"
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
  std::string to_text() const;
};

/// Structural and statistical checks over a generated dataset directory.
VerifyReport verify(const std::filesystem::path& dataset_dir);

}  // namespace beam
