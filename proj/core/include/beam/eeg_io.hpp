#pragma once

// Dataset layout on disk:
//   <dir>/manifest           one subject id per line
//   <dir>/<id>.eeg           raw little-endian float32, C*T values, channel-major
//   <dir>/<id>.json          metadata sidecar
//
// Preprocessed sample sets use the same convention:
//   <dir>/manifest, <dir>/<id>.smp (n*C*W float32), <dir>/<id>.json

#include <filesystem>
#include <string>
#include <vector>

#include "beam/recording.hpp"

namespace beam {

void write_recording(const Recording& rec, const std::filesystem::path& dir);
Recording read_recording(const std::filesystem::path& dir, const std::string& subject_id);

void write_manifest(const std::filesystem::path& dir, const std::vector<std::string>& subject_ids);
std::vector<std::string> read_manifest(const std::filesystem::path& dir);

/// All windowed samples of one subject plus the subject-level label.
struct SubjectSamples {
  std::string subject_id;
  double sample_rate_hz = 0.0;
  int willingness = 0;
  Label label = Label::Low;
  std::vector<Sample> samples;
};

void write_subject_samples(const SubjectSamples& s, const std::filesystem::path& dir);
SubjectSamples read_subject_samples(const std::filesystem::path& dir, const std::string& subject_id);

/// Fails unless `dir` is absent, empty, or `overwrite` is set; creates it.
void prepare_output_dir(const std::filesystem::path& dir, bool overwrite);

}  // namespace beam
