#include "beam/recording.hpp"

#include <algorithm>

namespace beam {

void Recording::validate() const {
  require(!channels.empty(), "recording '" + subject_id + "' has zero channels");
  require(sample_rate_hz > 0.0, "recording '" + subject_id + "' has non-positive sample rate");
  require(!data.empty() && data.size() % channels.size() == 0,
          "recording '" + subject_id + "' payload length is not a multiple of the channel count");
  require(willingness >= 1 && willingness <= 4,
          "recording '" + subject_id + "' willingness score out of range 1..4");
  const int64_t t = num_samples();
  for (const EventClip& clip : clips) {
    require(clip.start_sample < clip.end_sample, "clip with start >= end in '" + subject_id + "'");
    require(clip.start_sample >= 0 && clip.end_sample <= t,
            "clip [" + std::to_string(clip.start_sample) + "," + std::to_string(clip.end_sample) +
                ") out of range for T=" + std::to_string(t) + " in '" + subject_id + "'");
  }
}

double score_median(const std::vector<int>& scores) {
  require(!scores.empty(), "median of an empty score list");
  std::vector<int> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

std::vector<Label> median_split(const std::vector<int>& scores) {
  require(!scores.empty(), "median_split on an empty score list");
  for (int s : scores) require(s >= 1 && s <= 4, "willingness score " + std::to_string(s) + " out of range 1..4");
  const double median = score_median(scores);
  std::vector<Label> labels;
  labels.reserve(scores.size());
  size_t low = 0;
  for (int s : scores) {
    const Label l = s <= median ? Label::Low : Label::High;
    if (l == Label::Low) ++low;
    labels.push_back(l);
  }
  if (low == 0 || low == scores.size())
    BEAM_LOG_WARN("median split produced a single-class cohort (%zu low of %zu)", low, scores.size());
  return labels;
}

}  // namespace beam
