#include "beam/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "beam/eeg_io.hpp"
#include "beam/preprocess.hpp"
#include "beam/rng.hpp"
#include "beam/stft.hpp"

namespace beam {

void SynthConfig::validate() const {
  require(n_subjects >= 1, "n_subjects must be >= 1");
  require(channels >= 2, "need at least 2 channels (common average reference)");
  require(sample_rate_hz > 0.0, "sample rate must be positive");
  require(!tom_clip_seconds.empty() && !em_clip_seconds.empty(), "clip plan must have clips for both views");
  require(class_effect >= 0.0 && alpha_base >= 0.0 && noise_floor > 0.0, "invalid signal levels");
  require(alpha_hz > 0.0 && alpha_hz < sample_rate_hz / 2.0, "alpha frequency must be below Nyquist");
  for (double d : tom_clip_seconds) require(d > 0.0, "clip durations must be positive");
  for (double d : em_clip_seconds) require(d > 0.0, "clip durations must be positive");
}

std::vector<double> pink_noise(int64_t length, uint64_t seed) {
  require(length >= 1, "pink noise length must be >= 1");
  int64_t n = 1;
  while (n < length) n <<= 1;
  Rng rng(seed);
  std::vector<std::complex<double>> spectrum(n, {0.0, 0.0});
  for (int64_t k = 1; k <= n / 2; ++k) {
    const double amp = 1.0 / std::sqrt(static_cast<double>(k));  // 1/f power shape
    const std::complex<double> z(rng.gaussian() * amp, rng.gaussian() * amp);
    spectrum[k] = z;
    if (k < n / 2) spectrum[n - k] = std::conj(z);
  }
  spectrum[n / 2] = {spectrum[n / 2].real(), 0.0};
  fft(spectrum, true);
  std::vector<double> out(length);
  double mean = 0.0;
  for (int64_t i = 0; i < length; ++i) {
    out[i] = spectrum[i].real();
    mean += out[i];
  }
  mean /= static_cast<double>(length);
  double var = 0.0;
  for (int64_t i = 0; i < length; ++i) {
    out[i] -= mean;
    var += out[i] * out[i];
  }
  var /= static_cast<double>(length);
  const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
  for (auto& v : out) v *= scale;
  return out;
}

namespace {

struct ClipLayout {
  std::vector<EventClip> clips;
  int64_t total_samples = 0;
};

ClipLayout layout_clips(const SynthConfig& cfg) {
  ClipLayout layout;
  const auto secs_to_samples = [&](double s) { return static_cast<int64_t>(std::llround(s * cfg.sample_rate_hz)); };
  const int64_t gap = secs_to_samples(cfg.gap_seconds);
  int64_t at = gap;
  for (double d : cfg.tom_clip_seconds) {
    const int64_t len = secs_to_samples(d);
    layout.clips.push_back({View::ToM, at, at + len});
    at += len + gap;
  }
  for (double d : cfg.em_clip_seconds) {
    const int64_t len = secs_to_samples(d);
    layout.clips.push_back({View::EM, at, at + len});
    at += len + gap;
  }
  layout.total_samples = at;
  return layout;
}

}  // namespace

Recording synth_recording(const SynthConfig& cfg, int subject_index, bool high_class) {
  cfg.validate();
  const ClipLayout layout = layout_clips(cfg);
  const int64_t t = layout.total_samples;
  const uint64_t subject_seed = derive_seed(cfg.rng_seed, fnv1a64("subject"), static_cast<uint64_t>(subject_index));

  Recording rec;
  rec.subject_id = "s" + std::string(subject_index < 10 ? "0" : "") + std::to_string(subject_index);
  rec.sample_rate_hz = cfg.sample_rate_hz;
  rec.clips = layout.clips;
  rec.data.resize(static_cast<size_t>(cfg.channels) * t);

  const double alpha_amp = cfg.noise_floor * (cfg.alpha_base + (high_class ? cfg.class_effect : 0.0));
  const double w = 2.0 * M_PI * cfg.alpha_hz / cfg.sample_rate_hz;
  Rng phase_rng(derive_seed(subject_seed, fnv1a64("phase")));
  for (int c = 0; c < cfg.channels; ++c) {
    rec.channels.push_back("ch" + std::to_string(c));
    const std::vector<double> noise = pink_noise(t, derive_seed(subject_seed, fnv1a64("pink"), c));
    float* dst = rec.data.data() + static_cast<int64_t>(c) * t;
    for (int64_t i = 0; i < t; ++i) dst[i] = static_cast<float>(cfg.noise_floor * noise[i]);
    if (!cfg.is_signal_channel(c)) continue;
    // Fresh phase per clip so the class signal is an amplitude property, not
    // a subject-specific phase signature a model could memorize.
    for (const EventClip& clip : rec.clips) {
      const double phase = phase_rng.uniform(0.0, 2.0 * M_PI);
      for (int64_t i = clip.start_sample; i < clip.end_sample; ++i)
        dst[i] += static_cast<float>(alpha_amp * std::sin(w * (i - clip.start_sample) + phase));
    }
  }
  return rec;
}

void generate(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  // Alternating classes; scores 1/2 for Low and 3/4 for High put the cohort
  // median between the classes, so the median split recovers them.
  std::vector<std::string> ids;
  for (int i = 0; i < cfg.n_subjects; ++i) {
    const bool high = i % 2 == 1;
    Recording rec = synth_recording(cfg, i, high);
    rec.willingness = high ? (i % 4 == 1 ? 3 : 4) : (i % 4 == 0 ? 1 : 2);
    write_recording(rec, out_dir);
    ids.push_back(rec.subject_id);
  }
  write_manifest(out_dir, ids);
}

double welch_band_power(const float* signal, int64_t length, double fs_hz, double band_lo, double band_hi,
                        double max_seconds) {
  const int64_t cap = static_cast<int64_t>(max_seconds * fs_hz);
  const int64_t n = std::min(length, cap);
  int window = 1024;
  while (window > n && window > 64) window >>= 1;
  require(n >= window, "signal too short for a Welch estimate");
  const int hop = window / 2;

  std::vector<double> buf(n);
  for (int64_t i = 0; i < n; ++i) buf[i] = signal[i];
  const Spectrogram spec = stft(buf, StftConfig{window, hop});

  const double df = fs_hz / window;
  int k_lo = static_cast<int>(std::ceil(band_lo / df));
  int k_hi = static_cast<int>(std::floor(band_hi / df));
  k_lo = std::max(k_lo, 0);
  k_hi = std::min(k_hi, spec.bins - 1);
  require(k_lo <= k_hi, "band does not cover any frequency bin");

  double power = 0.0;
  for (int f = 0; f < spec.frames; ++f)
    for (int k = k_lo; k <= k_hi; ++k) power += std::norm(spec.at(f, k));
  return power / (static_cast<double>(spec.frames) * (k_hi - k_lo + 1));
}

double auc_threshold_sweep(const std::vector<double>& stats, const std::vector<int>& labels) {
  require(stats.size() == labels.size() && !stats.empty(), "statistics/labels size mismatch");
  int64_t n_pos = 0, n_neg = 0;
  for (int l : labels) (l == 1 ? n_pos : n_neg)++;
  require(n_pos > 0 && n_neg > 0, "AUC needs both classes");

  // Sweep a threshold through every observed value; predict High above it.
  std::vector<double> cuts = stats;
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<std::pair<double, double>> roc;  // (fpr, tpr)
  roc.emplace_back(1.0, 1.0);                  // threshold below the minimum
  for (double cut : cuts) {
    int64_t tp = 0, fp = 0;
    for (size_t i = 0; i < stats.size(); ++i) {
      if (stats[i] > cut) (labels[i] == 1 ? tp : fp)++;
    }
    roc.emplace_back(static_cast<double>(fp) / n_neg, static_cast<double>(tp) / n_pos);
  }
  std::sort(roc.begin(), roc.end());
  double auc = 0.0;
  for (size_t i = 1; i < roc.size(); ++i)
    auc += 0.5 * (roc[i].first - roc[i - 1].first) * (roc[i].second + roc[i - 1].second);
  // The sweep starts at (0,0) implicitly: threshold above the maximum.
  auc += 0.5 * roc.front().first * roc.front().second;
  return auc;
}

std::vector<double> band_power_statistics(const std::vector<Recording>& recordings, double band_lo,
                                          double band_hi) {
  std::vector<double> stats;
  stats.reserve(recordings.size());
  for (const Recording& rec : recordings) {
    double acc = 0.0;
    for (int64_t c = 0; c < rec.num_channels(); ++c)
      acc += welch_band_power(rec.channel(c), rec.num_samples(), rec.sample_rate_hz, band_lo, band_hi);
    stats.push_back(acc / static_cast<double>(rec.num_channels()));
  }
  return stats;
}

VerifyReport verify(const std::filesystem::path& dataset_dir) {
  VerifyReport report;
  std::vector<Recording> recordings;
  try {
    for (const std::string& id : read_manifest(dataset_dir)) {
      recordings.push_back(read_recording(dataset_dir, id));
      report.subject_ids.push_back(id);
    }
    report.format_ok = true;
  } catch (const std::exception& e) {
    report.failures.push_back(std::string("format: ") + e.what());
    return report;
  }
  report.n_subjects = static_cast<int>(recordings.size());

  std::vector<int> scores;
  for (const Recording& r : recordings) scores.push_back(r.willingness);
  const std::vector<Label> labels = median_split(scores);
  for (Label l : labels) (l == Label::High ? report.n_high : report.n_low)++;

  // Expected window counts per subject at the default preprocessing
  // (decimation to 200 Hz, 4 s windows, 1 s stride).
  const PreprocessConfig pp;
  for (const Recording& r : recordings) {
    const int64_t k = static_cast<int64_t>(std::llround(r.sample_rate_hz / pp.target_rate_hz));
    if (k < 1 || std::abs(r.sample_rate_hz - static_cast<double>(k) * pp.target_rate_hz) > 1e-6) {
      report.failures.push_back("rate: subject '" + r.subject_id + "' rate is not a multiple of the target");
      continue;
    }
    const int64_t w = static_cast<int64_t>(std::llround(pp.window_seconds * pp.target_rate_hz));
    const int64_t s = static_cast<int64_t>(std::llround(pp.stride_seconds * pp.target_rate_hz));
    int64_t tom = 0, em = 0;
    for (const EventClip& clip : r.clips) {
      const int64_t len = clip.end_sample / k - clip.start_sample / k;
      if (len < w) {
        report.failures.push_back("clips: subject '" + r.subject_id + "' has a clip shorter than one window");
        break;
      }
      (clip.view == View::ToM ? tom : em) += segment_count(len, w, s);
    }
    report.tom_counts.push_back(tom);
    report.em_counts.push_back(em);
  }

  std::vector<int> int_labels;
  for (Label l : labels) int_labels.push_back(l == Label::High ? 1 : 0);
  if (report.n_low > 0 && report.n_high > 0) {
    report.oracle_auc = auc_threshold_sweep(band_power_statistics(recordings), int_labels);
    report.separability =
        report.oracle_auc >= 0.95 ? "separable" : (report.oracle_auc > 0.75 ? "weak" : "chance");
  } else {
    report.separability = "single-class";
  }
  return report;
}

std::string VerifyReport::to_text() const {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "format_ok=%d subjects=%d low=%d high=%d\n", format_ok ? 1 : 0, n_subjects,
                n_low, n_high);
  out += buf;
  for (size_t i = 0; i < subject_ids.size() && i < tom_counts.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "subject=%s tom_windows=%lld em_windows=%lld\n", subject_ids[i].c_str(),
                  static_cast<long long>(tom_counts[i]), static_cast<long long>(em_counts[i]));
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "oracle_auc=%.4f separability=%s\n", oracle_auc, separability.c_str());
  out += buf;
  for (const std::string& f : failures) out += "failure: " + f + "\n";
  out += ok() ? "verify: PASS\n" : "verify: FAIL\n";
  return out;
}

}  // namespace beam
