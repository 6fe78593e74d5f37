#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "beam/common.hpp"

namespace beam {

/// Binary confusion counts with High as the positive class.
struct Confusion {
  int64_t tp = 0, fp = 0, tn = 0, fn = 0;

  int64_t total() const { return tp + fp + tn + fn; }
  double accuracy() const { return total() == 0 ? 0.0 : static_cast<double>(tp + tn) / total(); }
  double sensitivity() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn); }
  double specificity() const { return tn + fp == 0 ? 0.0 : static_cast<double>(tn) / (tn + fp); }

  /// label/pred: 1 = High, 0 = Low.
  void add(int label, int pred) {
    if (label == 1)
      pred == 1 ? ++tp : ++fn;
    else
      pred == 1 ? ++fp : ++tn;
  }
};

struct SeedMetrics {
  uint64_t seed = 0;
  Confusion sample_level;
  Confusion subject_level;  // majority vote per subject (supplementary)
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over seeds (n-1)
};

Aggregate aggregate(const std::vector<double>& values);

/// "0.647±0.008" formatting used in the summary tables.
std::string format_mean_std(const Aggregate& a);

struct RunReport {
  std::string arm_desc;  // e.g. "arm=tom+em fusion=1 contrast=1"
  std::vector<SeedMetrics> seeds;

  Aggregate accuracy() const;
  Aggregate sensitivity() const;
  Aggregate specificity() const;

  /// Line-oriented UTF-8 record, byte-stable for identical inputs.
  std::string to_text() const;
};

}  // namespace beam
