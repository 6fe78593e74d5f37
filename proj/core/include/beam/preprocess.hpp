#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "beam/recording.hpp"

namespace beam {

struct PreprocessConfig {
  double band_low_hz = 0.1;
  double band_high_hz = 75.0;
  double target_rate_hz = 200.0;
  double window_seconds = 4.0;
  double stride_seconds = 1.0;
};

/// One second-order section; a_0 is normalized to 1.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 2> a{};  // a1, a2
};

/// Cascade of biquads realizing butter(order, [low, high]) for sample rate fs.
/// `order` is the lowpass prototype order, so the transfer is order 2*order.
std::vector<Biquad> butterworth_bandpass(int order, double low_hz, double high_hz, double fs_hz);

/// Zero-phase filtering: forward pass, reverse, forward pass, reverse.
/// Each pass starts from the per-section steady state of the first sample,
/// which removes the step transient for locally constant signals.
std::vector<double> sosfiltfilt(const std::vector<Biquad>& sos, const std::vector<double>& x);

/// Zero-phase 4th-order Butterworth band-pass applied per channel.
/// Requires 0 < low < high < fs/2.
Recording bandpass(const Recording& rec, double low_hz, double high_hz);

/// Keeps every k-th sample where k = fs/target (must be an integer ratio).
/// Clip boundaries rescale as floor(old / k).
Recording decimate(const Recording& rec, double target_rate_hz);

/// Subtracts the across-channel mean at every timestep. Requires C >= 2.
Recording common_average_reference(const Recording& rec);

/// Window count for one clip of length `clip_len` samples.
inline int64_t segment_count(int64_t clip_len, int64_t window, int64_t stride) {
  return clip_len < window ? 0 : (clip_len - window) / stride + 1;
}

/// Cuts every clip into C x W windows at the configured stride. Every clip
/// must hold at least one window. Labels are stamped by the caller.
std::vector<Sample> segment(const Recording& rec, const PreprocessConfig& cfg, Label label);

/// bandpass -> decimate -> CAR -> segment with the given config.
std::vector<Sample> preprocess_recording(const Recording& rec, const PreprocessConfig& cfg, Label label);

/// Whole-cohort pipeline: reads every recording under `in_dir`, derives
/// labels from the cohort median split of willingness scores, and writes one
/// sample set per subject into `out_dir`.
void preprocess_dataset(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                        const PreprocessConfig& cfg);

}  // namespace beam
