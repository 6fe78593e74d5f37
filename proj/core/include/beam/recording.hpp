#pragma once

#include <string>
#include <vector>

#include "beam/common.hpp"

namespace beam {

enum class View { ToM, EM };

inline const char* view_name(View v) { return v == View::ToM ? "ToM" : "EM"; }

inline View view_from_name(const std::string& s) {
  if (s == "ToM") return View::ToM;
  if (s == "EM") return View::EM;
  throw ValidationError("unknown view tag '" + s + "' (expected ToM or EM)");
}

enum class Label { Low, High };

inline const char* label_name(Label l) { return l == Label::Low ? "Low" : "High"; }

/// Half-open interval [start_sample, end_sample) tagged with the empathy view
/// whose stimulus was on screen.
struct EventClip {
  View view = View::ToM;
  int64_t start_sample = 0;
  int64_t end_sample = 0;

  int64_t length() const { return end_sample - start_sample; }
};

/// One subject's raw multichannel session plus post-test score.
struct Recording {
  std::string subject_id;
  double sample_rate_hz = 0.0;
  std::vector<std::string> channels;  // length C
  std::vector<float> data;            // C x T, row-major (channel-major)
  std::vector<EventClip> clips;
  int willingness = 0;  // post-test willingness-to-help, 1..4

  int64_t num_channels() const { return static_cast<int64_t>(channels.size()); }
  int64_t num_samples() const {
    return channels.empty() ? 0 : static_cast<int64_t>(data.size()) / num_channels();
  }
  float* channel(int64_t c) { return data.data() + c * num_samples(); }
  const float* channel(int64_t c) const { return data.data() + c * num_samples(); }

  void validate() const;
};

/// One C x W windowed segment feeding the model.
struct Sample {
  View view = View::ToM;
  std::string subject_id;
  int channels = 0;
  int window = 0;            // W in samples
  std::vector<float> data;   // C x W row-major
  Label label = Label::Low;
};

/// Cohort labeling: Low iff score <= median(scores). The median of an even
/// count is the mean of the two middle values.
std::vector<Label> median_split(const std::vector<int>& scores);

/// The split point used by median_split, exposed for reporting.
double score_median(const std::vector<int>& scores);

}  // namespace beam
