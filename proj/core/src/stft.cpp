#include "beam/stft.hpp"

#include <cmath>

namespace beam {

void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  require(n > 0 && (n & (n - 1)) == 0, "fft length must be a power of two");
  // Bit-reversal permutation.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    for (auto& x : a) x /= static_cast<double>(n);
  }
}

namespace {

std::vector<double> hann_periodic(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n));
  return w;
}

}  // namespace

Spectrogram stft(const std::vector<double>& signal, const StftConfig& cfg) {
  require(cfg.window > 0 && (cfg.window & (cfg.window - 1)) == 0, "stft window must be a power of two");
  require(cfg.hop > 0 && cfg.window % cfg.hop == 0, "stft hop must divide the window");
  require(static_cast<int64_t>(signal.size()) >= cfg.window,
          "signal of " + std::to_string(signal.size()) + " samples is shorter than one stft window");

  const auto window = hann_periodic(cfg.window);
  Spectrogram spec;
  spec.window = cfg.window;
  spec.hop = cfg.hop;
  spec.bins = cfg.window / 2 + 1;
  spec.frames = static_cast<int>((signal.size() - cfg.window) / cfg.hop + 1);
  spec.cells.resize(static_cast<size_t>(spec.frames) * spec.bins);

  std::vector<std::complex<double>> buf(cfg.window);
  for (int f = 0; f < spec.frames; ++f) {
    const int64_t start = static_cast<int64_t>(f) * cfg.hop;
    for (int i = 0; i < cfg.window; ++i) buf[i] = signal[start + i] * window[i];
    fft(buf, false);
    for (int k = 0; k < spec.bins; ++k) spec.at(f, k) = buf[k];
  }
  return spec;
}

std::vector<double> istft(const Spectrogram& spec, int64_t length) {
  require(spec.window > 0 && spec.hop > 0 && spec.bins == spec.window / 2 + 1,
          "spectrogram shape inconsistent with its config");
  require(length >= spec.window, "istft target length shorter than one window");

  // COLA with the periodic Hann at hop = window/2 means plain overlap-add of
  // inverse frames reconstructs the interior with no synthesis window.
  std::vector<double> out(length, 0.0);
  std::vector<std::complex<double>> buf(spec.window);
  for (int f = 0; f < spec.frames; ++f) {
    for (int k = 0; k < spec.bins; ++k) buf[k] = spec.at(f, k);
    for (int k = spec.bins; k < spec.window; ++k) buf[k] = std::conj(spec.at(f, spec.window - k));
    fft(buf, true);
    const int64_t start = static_cast<int64_t>(f) * spec.hop;
    for (int i = 0; i < spec.window && start + i < length; ++i) out[start + i] += buf[i].real();
  }
  return out;
}

}  // namespace beam
