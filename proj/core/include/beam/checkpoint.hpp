#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "beam/common.hpp"

namespace beam {

struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;
};

/// Versioned binary checkpoint: magic, a JSON header (configs, arm, ...),
/// then named float32 tensors.
void save_checkpoint(const std::filesystem::path& path, const std::string& header_json,
                     const std::vector<NamedTensor>& tensors);

struct Checkpoint {
  std::string header_json;
  std::vector<NamedTensor> tensors;

  const NamedTensor& find(const std::string& name) const;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace beam
