#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "beam/augment.hpp"
#include "beam/checkpoint.hpp"
#include "beam/eeg_io.hpp"
#include "beam/encoder.hpp"
#include "beam/metrics.hpp"
#include "beam/recording.hpp"

namespace beam {

enum class ArmView { EM, ToM, Both };

const char* arm_view_name(ArmView v);
ArmView arm_view_from_name(const std::string& s);

/// One ablation arm: which view(s) feed the classifier, and whether the
/// fusion and contrastive terms are active.
struct Arm {
  ArmView view = ArmView::Both;
  bool fusion = true;  // only meaningful for Both
  bool contrast = true;

  std::string describe() const;
};

struct TrainConfig {
  Arm arm;
  EncoderConfig encoder;
  double lambda_fusion = 1.0;
  double lambda_contrast = 1.0;
  double tau = 0.1;
  bool exclude_self = false;  // drop the j=i term from the InfoNCE denominator
  int batch_size = 16;
  int epochs = 30;
  double learning_rate = 1e-3;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  double train_frac = 0.7;
  double val_frac = 0.2;
  double test_frac = 0.1;
  bool augment_balance = true;  // top up the training minority class
  AugmentConfig augment;

  void validate() const;
};

/// One subject's preprocessed samples split by view.
struct SubjectData {
  std::string subject_id;
  Label label = Label::Low;
  std::vector<Sample> tom;
  std::vector<Sample> em;
};

struct TrainerDataset {
  std::vector<SubjectData> subjects;
  int channels = 0;
  int window = 0;
  double sample_rate_hz = 0.0;

  static TrainerDataset load(const std::filesystem::path& samples_dir);
};

/// Disjoint subject index sets.
struct SubjectSplit {
  std::vector<int> train, val, test;
};

/// Stratified largest-remainder apportionment of subjects into
/// train/val/test; at least one test subject; no subject spans two sets.
SubjectSplit subject_split(const std::vector<Label>& subject_labels, double train_frac, double val_frac,
                           double test_frac, uint64_t seed);

/// ToM sample i pairs with EM sample i mod |EM| of the same subject.
struct ViewPair {
  const Sample* tom;
  const Sample* em;
};
std::vector<ViewPair> pair_views(const std::vector<Sample>& tom, const std::vector<Sample>& em);

struct SeedOutcome {
  SeedMetrics metrics;
  std::vector<NamedTensor> best_params;
  double best_val_accuracy = 0.0;
  int best_epoch = -1;
  double first_epoch_loss = 0.0;
  double last_epoch_loss = 0.0;
};

SeedOutcome train_one_seed(const TrainerDataset& data, const TrainConfig& cfg, uint64_t seed);

struct TrainOutput {
  RunReport report;
  std::vector<std::pair<uint64_t, std::vector<NamedTensor>>> checkpoints;  // per seed
  std::string checkpoint_header_json;
};

TrainOutput run_training(const TrainerDataset& data, const TrainConfig& cfg);

/// Evaluates a saved checkpoint on every subject of a dataset.
RunReport evaluate_checkpoint(const Checkpoint& ckpt, const TrainerDataset& data);

struct AblationRow {
  Arm arm;
  RunReport report;
};

struct AblationTables {
  std::vector<AblationRow> empathy_components;  // {EM,ToM,Both} x contrast, fusion off
  std::vector<AblationRow> network_modules;     // Both x {fusion} x {contrast}
  RunReport majority_baseline;                  // harness sanity row
};

AblationTables ablate(const TrainerDataset& data, const TrainConfig& cfg);

/// Majority-class predictor over the same splits/seeds (sanity reference).
RunReport majority_baseline(const TrainerDataset& data, const TrainConfig& cfg);

std::string render_ablation_tables(const AblationTables& tables);

}  // namespace beam
