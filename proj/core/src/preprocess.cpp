#include "beam/preprocess.hpp"

#include "beam/eeg_io.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace beam {

namespace {

using cplx = std::complex<double>;

// Analog Butterworth lowpass prototype poles (left half-plane, unit cutoff),
// ordered so conjugate pairs are adjacent with descending |imag|.
std::vector<cplx> prototype_poles(int order) {
  std::vector<cplx> poles;
  for (int k = 1; k <= order; ++k) {
    const double theta = M_PI * (2.0 * k + order - 1.0) / (2.0 * order);
    poles.emplace_back(std::cos(theta), std::sin(theta));
  }
  std::sort(poles.begin(), poles.end(), [](const cplx& a, const cplx& b) {
    if (std::abs(a.imag()) != std::abs(b.imag())) return std::abs(a.imag()) > std::abs(b.imag());
    return a.imag() > b.imag();
  });
  return poles;
}

}  // namespace

std::vector<Biquad> butterworth_bandpass(int order, double low_hz, double high_hz, double fs_hz) {
  require(order >= 1, "filter order must be >= 1");
  require(low_hz > 0.0 && low_hz < high_hz && high_hz < fs_hz / 2.0,
          "band edges must satisfy 0 < low < high < fs/2");

  // Prewarped analog edges for the bilinear transform.
  const double warped_low = 2.0 * fs_hz * std::tan(M_PI * low_hz / fs_hz);
  const double warped_high = 2.0 * fs_hz * std::tan(M_PI * high_hz / fs_hz);
  const double bw = warped_high - warped_low;
  const double w0_sq = warped_low * warped_high;

  // Lowpass-to-bandpass: each prototype pole p maps to the two roots of
  // s^2 - (p*bw) s + w0^2 = 0. Zeros: `order` at s=0 plus `order` at infinity.
  std::vector<cplx> analog_poles;
  for (const cplx& p : prototype_poles(order)) {
    const cplx half = p * (bw / 2.0);
    const cplx disc = std::sqrt(half * half - w0_sq);
    analog_poles.push_back(half + disc);
    analog_poles.push_back(half - disc);
  }

  // Bilinear transform with K = 2*fs. Analog zeros at 0 land on z=+1; the
  // `order` zeros at infinity land on z=-1. Gain = bw^order * prod(K - s_z) /
  // prod(K - s_p) with the zero product being K^order.
  const double K = 2.0 * fs_hz;
  std::vector<cplx> digital_poles;
  cplx pole_prod(1.0, 0.0);
  for (const cplx& s : analog_poles) {
    digital_poles.push_back((K + s) / (K - s));
    pole_prod *= (K - s);
  }
  const double gain = std::pow(bw, order) * std::pow(K, order) / pole_prod.real();

  std::sort(digital_poles.begin(), digital_poles.end(), [](const cplx& a, const cplx& b) {
    if (std::abs(a.imag()) != std::abs(b.imag())) return std::abs(a.imag()) > std::abs(b.imag());
    return a.imag() > b.imag();
  });

  // One conjugate pole pair per section; zeros {+1,-1} give b = [1, 0, -1].
  // The overall gain is spread evenly across sections for headroom.
  std::vector<Biquad> sos(order);
  const double gain_per_section = std::copysign(std::pow(std::abs(gain), 1.0 / order), gain);
  for (int i = 0; i < order; ++i) {
    const cplx p = digital_poles[2 * i];
    const cplx q = digital_poles[2 * i + 1];
    sos[i].a = {-(p + q).real(), (p * q).real()};
    sos[i].b = {gain_per_section, 0.0, -gain_per_section};
  }
  return sos;
}

namespace {

// Steady-state direct-form-II-transposed state for a unit-step input,
// scaled by x0 before each pass (the lfilter_zi construction).
std::array<double, 2> steady_state(const Biquad& s) {
  const double sum_a = 1.0 + s.a[0] + s.a[1];
  const double y = (s.b[0] + s.b[1] + s.b[2]) / sum_a;  // DC gain
  return {y - s.b[0], s.b[2] - s.a[1] * y};
}

void sosfilt_inplace(const std::vector<Biquad>& sos, std::vector<double>& x) {
  for (const Biquad& s : sos) {
    auto zi = steady_state(s);
    double z1 = zi[0] * x[0];
    double z2 = zi[1] * x[0];
    for (double& v : x) {
      const double in = v;
      const double out = s.b[0] * in + z1;
      z1 = s.b[1] * in - s.a[0] * out + z2;
      z2 = s.b[2] * in - s.a[1] * out;
      v = out;
    }
  }
}

}  // namespace

std::vector<double> sosfiltfilt(const std::vector<Biquad>& sos, const std::vector<double>& x) {
  std::vector<double> y = x;
  if (y.empty()) return y;
  sosfilt_inplace(sos, y);
  std::reverse(y.begin(), y.end());
  sosfilt_inplace(sos, y);
  std::reverse(y.begin(), y.end());
  return y;
}

Recording bandpass(const Recording& rec, double low_hz, double high_hz) {
  require(low_hz > 0.0 && low_hz < high_hz && high_hz < rec.sample_rate_hz / 2.0,
          "band edges must satisfy 0 < low < high < fs/2");
  const auto sos = butterworth_bandpass(4, low_hz, high_hz, rec.sample_rate_hz);
  Recording out = rec;
  const int64_t t = rec.num_samples();
  std::vector<double> buf(t);
  for (int64_t c = 0; c < rec.num_channels(); ++c) {
    const float* src = rec.channel(c);
    for (int64_t i = 0; i < t; ++i) buf[i] = src[i];
    const std::vector<double> filtered = sosfiltfilt(sos, buf);
    float* dst = out.channel(c);
    for (int64_t i = 0; i < t; ++i) dst[i] = static_cast<float>(filtered[i]);
  }
  return out;
}

Recording decimate(const Recording& rec, double target_rate_hz) {
  require(target_rate_hz > 0.0, "target rate must be positive");
  const double ratio = rec.sample_rate_hz / target_rate_hz;
  const int64_t k = static_cast<int64_t>(std::llround(ratio));
  require(k >= 1 && std::abs(ratio - static_cast<double>(k)) < 1e-9,
          "sample rate " + std::to_string(rec.sample_rate_hz) + " is not an integer multiple of " +
              std::to_string(target_rate_hz));
  if (k == 1) return rec;

  Recording out = rec;
  out.sample_rate_hz = target_rate_hz;
  const int64_t t = rec.num_samples();
  const int64_t t_out = (t + k - 1) / k;  // samples at indices 0, k, 2k, ...
  out.data.resize(rec.num_channels() * t_out);
  for (int64_t c = 0; c < rec.num_channels(); ++c) {
    const float* src = rec.channel(c);
    float* dst = out.data.data() + c * t_out;
    for (int64_t i = 0; i < t_out; ++i) dst[i] = src[i * k];
  }
  for (EventClip& clip : out.clips) {
    clip.start_sample /= k;
    clip.end_sample /= k;
  }
  return out;
}

Recording common_average_reference(const Recording& rec) {
  require(rec.num_channels() >= 2, "common average reference needs at least 2 channels");
  Recording out = rec;
  const int64_t c = rec.num_channels();
  const int64_t t = rec.num_samples();
  for (int64_t i = 0; i < t; ++i) {
    double mean = 0.0;
    for (int64_t ch = 0; ch < c; ++ch) mean += rec.data[ch * t + i];
    mean /= static_cast<double>(c);
    for (int64_t ch = 0; ch < c; ++ch) out.data[ch * t + i] = static_cast<float>(rec.data[ch * t + i] - mean);
  }
  return out;
}

std::vector<Sample> segment(const Recording& rec, const PreprocessConfig& cfg, Label label) {
  require(cfg.window_seconds > 0.0 && cfg.stride_seconds > 0.0, "window and stride must be positive");
  const double w_real = cfg.window_seconds * rec.sample_rate_hz;
  const double s_real = cfg.stride_seconds * rec.sample_rate_hz;
  const int64_t w = static_cast<int64_t>(std::llround(w_real));
  const int64_t s = static_cast<int64_t>(std::llround(s_real));
  require(std::abs(w_real - static_cast<double>(w)) < 1e-9 && w >= 1,
          "window length is not a whole number of samples at this rate");
  require(std::abs(s_real - static_cast<double>(s)) < 1e-9 && s >= 1,
          "stride is not a whole number of samples at this rate");

  const int64_t t = rec.num_samples();
  std::vector<Sample> out;
  for (const EventClip& clip : rec.clips) {
    const int64_t len = clip.length();
    require(len >= w, "clip of " + std::to_string(len) + " samples is shorter than one window (" +
                          std::to_string(w) + ") in '" + rec.subject_id + "'");
    const int64_t n = segment_count(len, w, s);
    for (int64_t i = 0; i < n; ++i) {
      Sample smp;
      smp.view = clip.view;
      smp.subject_id = rec.subject_id;
      smp.channels = static_cast<int>(rec.num_channels());
      smp.window = static_cast<int>(w);
      smp.label = label;
      smp.data.resize(static_cast<size_t>(smp.channels) * w);
      const int64_t start = clip.start_sample + i * s;
      for (int64_t ch = 0; ch < rec.num_channels(); ++ch)
        std::copy_n(rec.data.data() + ch * t + start, w, smp.data.data() + ch * w);
      out.push_back(std::move(smp));
    }
  }
  return out;
}

std::vector<Sample> preprocess_recording(const Recording& rec, const PreprocessConfig& cfg, Label label) {
  Recording r = bandpass(rec, cfg.band_low_hz, cfg.band_high_hz);
  r = decimate(r, cfg.target_rate_hz);
  r = common_average_reference(r);
  return segment(r, cfg, label);
}

void preprocess_dataset(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                        const PreprocessConfig& cfg) {
  const std::vector<std::string> ids = read_manifest(in_dir);
  std::vector<Recording> recordings;
  std::vector<int> scores;
  for (const std::string& id : ids) {
    recordings.push_back(read_recording(in_dir, id));
    scores.push_back(recordings.back().willingness);
  }
  const std::vector<Label> labels = median_split(scores);
  for (size_t i = 0; i < recordings.size(); ++i) {
    SubjectSamples out;
    out.subject_id = recordings[i].subject_id;
    out.sample_rate_hz = cfg.target_rate_hz;
    out.willingness = recordings[i].willingness;
    out.label = labels[i];
    out.samples = preprocess_recording(recordings[i], cfg, labels[i]);
    write_subject_samples(out, out_dir);
    BEAM_LOG_INFO("preprocessed subject %s: %zu samples", out.subject_id.c_str(), out.samples.size());
  }
  write_manifest(out_dir, ids);
}

}  // namespace beam
