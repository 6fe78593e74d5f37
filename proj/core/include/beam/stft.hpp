#pragma once

#include <complex>
#include <vector>

#include "beam/common.hpp"

namespace beam {

/// In-place iterative radix-2 FFT. Length must be a power of two.
void fft(std::vector<std::complex<double>>& a, bool inverse);

/// Short-time Fourier transform parameters. The periodic Hann window at
/// hop = window/2 satisfies constant overlap-add exactly, which makes the
/// inverse below an identity on the fully-overlapped interior.
struct StftConfig {
  int window = 256;
  int hop = 128;
};

/// frames x bins complex matrix; bins = window/2 + 1 (one-sided).
struct Spectrogram {
  int window = 0;
  int hop = 0;
  int bins = 0;
  int frames = 0;
  std::vector<std::complex<double>> cells;  // row-major frames x bins

  std::complex<double>& at(int frame, int bin) { return cells[static_cast<size_t>(frame) * bins + bin]; }
  const std::complex<double>& at(int frame, int bin) const {
    return cells[static_cast<size_t>(frame) * bins + bin];
  }
};

Spectrogram stft(const std::vector<double>& signal, const StftConfig& cfg);

/// Overlap-add reconstruction to `length` output samples. Matches the input
/// of stft() exactly on the interior [window, length - window) and degrades
/// only at the edges where overlap is partial.
std::vector<double> istft(const Spectrogram& spec, int64_t length);

}  // namespace beam
