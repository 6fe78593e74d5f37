#include <doctest.h>

#include <cmath>
#include <set>

#include "beam/contrast.hpp"
#include "beam/losses.hpp"
#include "beam/rng.hpp"
#include "beam/trainer.hpp"

using namespace beam;

namespace {

Sample make_sample(View view, const std::string& subject, Label label, float fill, Rng& rng, int channels = 2,
                   int window = 8) {
  Sample s;
  s.view = view;
  s.subject_id = subject;
  s.channels = channels;
  s.window = window;
  s.label = label;
  s.data.resize(static_cast<size_t>(channels) * window);
  for (auto& v : s.data) v = fill + 0.1f * static_cast<float>(rng.gaussian());
  return s;
}

/// Tiny linearly separable dataset: High subjects ride at +1, Low at -1.
TrainerDataset tiny_dataset(int n_subjects, bool separable, uint64_t seed = 5) {
  Rng rng(seed);
  TrainerDataset data;
  data.channels = 2;
  data.window = 8;
  data.sample_rate_hz = 2.0;
  for (int i = 0; i < n_subjects; ++i) {
    SubjectData sd;
    sd.subject_id = "s" + std::to_string(i);
    sd.label = i % 2 == 1 ? Label::High : Label::Low;
    const float fill = separable ? (sd.label == Label::High ? 1.0f : -1.0f) : 0.0f;
    for (int k = 0; k < 6; ++k) sd.tom.push_back(make_sample(View::ToM, sd.subject_id, sd.label, fill, rng));
    for (int k = 0; k < 4; ++k) sd.em.push_back(make_sample(View::EM, sd.subject_id, sd.label, fill, rng));
    data.subjects.push_back(std::move(sd));
  }
  return data;
}

TrainConfig tiny_config(int epochs = 4) {
  TrainConfig cfg;
  cfg.encoder.patch_len = 4;
  cfg.encoder.d_model = 8;
  cfg.encoder.n_layers = 1;
  cfg.encoder.n_heads = 2;
  cfg.encoder.d_ff = 16;
  cfg.encoder.max_channels = 2;
  cfg.encoder.max_patches = 2;
  cfg.batch_size = 8;
  cfg.epochs = epochs;
  cfg.learning_rate = 0.003;
  cfg.seeds = {1};
  cfg.augment.stft_window = 4;
  cfg.augment.stft_hop = 2;
  return cfg;
}

}  // namespace

TEST_CASE("largest-remainder split of 10 subjects at 70/20/10 is 7/2/1") {
  std::vector<Label> labels(10);
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2 == 1 ? Label::High : Label::Low;
  const SubjectSplit split = subject_split(labels, 0.7, 0.2, 0.1, 3);
  CHECK(split.train.size() == 7);
  CHECK(split.val.size() == 2);
  CHECK(split.test.size() == 1);
}

TEST_CASE("subject split is deterministic under the seed") {
  std::vector<Label> labels(15, Label::Low);
  for (size_t i = 0; i < labels.size(); i += 2) labels[i] = Label::High;
  const SubjectSplit a = subject_split(labels, 0.7, 0.2, 0.1, 11);
  const SubjectSplit b = subject_split(labels, 0.7, 0.2, 0.1, 11);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);
  const SubjectSplit c = subject_split(labels, 0.7, 0.2, 0.1, 12);
  CHECK((a.train != c.train || a.val != c.val || a.test != c.test));
}

TEST_CASE("subject split never leaks: disjoint sets covering every subject") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(40));
    std::vector<Label> labels(n);
    for (auto& l : labels) l = rng.uniform_int(2) == 1 ? Label::High : Label::Low;
    const SubjectSplit split = subject_split(labels, 0.7, 0.2, 0.1, rng.next_u64());
    CHECK(split.test.size() >= 1);
    CHECK(split.train.size() >= 1);
    std::set<int> seen;
    for (const auto* part : {&split.train, &split.val, &split.test})
      for (int idx : *part) CHECK(seen.insert(idx).second);
    CHECK(static_cast<int>(seen.size()) == n);
  }
}

TEST_CASE("pair_views cycles the shorter EM list") {
  Rng rng(23);
  std::vector<Sample> tom, em;
  for (int i = 0; i < 65; ++i) tom.push_back(make_sample(View::ToM, "s", Label::Low, 0.0f, rng));
  for (int i = 0; i < 43; ++i) em.push_back(make_sample(View::EM, "s", Label::Low, 0.0f, rng));
  const auto pairs = pair_views(tom, em);
  REQUIRE(pairs.size() == 65);
  CHECK(pairs[0].em == &em[0]);
  CHECK(pairs[43].em == &em[0]);   // wrapped
  CHECK(pairs[64].em == &em[21]);  // 64 mod 43

  // Equal counts: identity pairing.
  std::vector<Sample> em_equal(em.begin(), em.begin() + 43);
  std::vector<Sample> tom_equal(tom.begin(), tom.begin() + 43);
  const auto same = pair_views(tom_equal, em_equal);
  for (size_t i = 0; i < same.size(); ++i) CHECK(same[i].em == &em_equal[i]);

  // Cross-subject pairing is an error.
  std::vector<Sample> other = {make_sample(View::EM, "other", Label::Low, 0.0f, rng)};
  CHECK_THROWS_AS(pair_views(tom, other), ValidationError);
}

TEST_CASE("total_loss composition: inactive terms contribute exactly zero") {
  using V = Var<float>;
  auto logits = V::leaf({2, 2}, {1.0f, -1.0f, -0.5f, 0.5f});
  const std::vector<int> labels = {0, 1};
  const auto ce = cross_entropy_with_logits(logits, labels);

  // lambda_f = lambda_c = 0 -> plain cross-entropy.
  CHECK(total_loss(ce, Var<float>(), Var<float>(), 0.0, 0.0).item() == ce.item());

  // Hand-computed CE for the 2-sample batch.
  const double expected =
      -0.5 * (std::log(std::exp(1.0) / (std::exp(1.0) + std::exp(-1.0))) +
              std::log(std::exp(0.5) / (std::exp(0.5) + std::exp(-0.5))));
  CHECK(ce.item() == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("total_loss is linear in the lambda weights") {
  using V = Var<float>;
  auto logits = V::leaf({2, 2}, {0.3f, -0.3f, 0.2f, -0.2f});
  const std::vector<int> labels = {0, 1};

  auto build = [&](double lf, double lc) {
    auto ce = cross_entropy_with_logits(logits, labels);
    auto fusion = V::leaf({1}, {0.25f});
    auto contrast = V::leaf({1}, {0.5f});
    return total_loss(ce, fusion, contrast, lf, lc).item();
  };
  const double base = build(0.0, 0.0);
  CHECK(build(1.0, 0.0) - base == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(build(2.0, 0.0) - base == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(build(0.0, 3.0) - base == doctest::Approx(1.5).epsilon(1e-6));
}

TEST_CASE("confusion metrics are definitional") {
  Confusion c;
  c.tp = 3;
  c.fn = 1;
  c.tn = 2;
  c.fp = 2;
  CHECK(c.sensitivity() == doctest::Approx(0.75));
  CHECK(c.specificity() == doctest::Approx(0.5));
  CHECK(c.accuracy() == doctest::Approx(0.625));

  Confusion all_right;
  for (int i = 0; i < 4; ++i) all_right.add(i % 2, i % 2);
  CHECK(all_right.accuracy() == doctest::Approx(1.0));
  CHECK(all_right.sensitivity() == doctest::Approx(1.0));
  CHECK(all_right.specificity() == doctest::Approx(1.0));

  // Majority predictor on a balanced set: accuracy 0.5, one rate zero.
  Confusion majority;
  for (int i = 0; i < 8; ++i) majority.add(i % 2, 1);
  CHECK(majority.accuracy() == doctest::Approx(0.5));
  CHECK(majority.sensitivity() == doctest::Approx(1.0));
  CHECK(majority.specificity() == doctest::Approx(0.0));
}

TEST_CASE("run report renders mean±std in table format") {
  RunReport report;
  report.arm_desc = "arm=test";
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    SeedMetrics m;
    m.seed = seed;
    m.sample_level.tp = 3 + static_cast<int64_t>(seed);
    m.sample_level.tn = 4;
    m.sample_level.fp = 1;
    m.sample_level.fn = 2;
    report.seeds.push_back(m);
  }
  const Aggregate acc = report.accuracy();
  CHECK(acc.stddev > 0.0);
  const std::string text = report.to_text();
  CHECK(text.find("aggregate level=sample accuracy=") != std::string::npos);
  CHECK(text.find("±") != std::string::npos);
  CHECK(format_mean_std({0.647, 0.008}) == "0.647±0.008");
}

TEST_CASE("training on separable data learns and reduces its loss") {
  const TrainerDataset data = tiny_dataset(8, true);
  TrainConfig cfg = tiny_config(10);
  const SeedOutcome out = train_one_seed(data, cfg, 1);
  CHECK(out.last_epoch_loss < out.first_epoch_loss);
  CHECK(out.metrics.sample_level.accuracy() >= 0.9);
  CHECK(out.best_epoch >= 0);
}

TEST_CASE("training is bit-deterministic for a fixed seed and config") {
  const TrainerDataset data = tiny_dataset(8, true);
  TrainConfig cfg = tiny_config(3);
  const SeedOutcome a = train_one_seed(data, cfg, 7);
  const SeedOutcome b = train_one_seed(data, cfg, 7);
  CHECK(a.metrics.sample_level.tp == b.metrics.sample_level.tp);
  CHECK(a.metrics.sample_level.fp == b.metrics.sample_level.fp);
  CHECK(a.best_val_accuracy == b.best_val_accuracy);
  REQUIRE(a.best_params.size() == b.best_params.size());
  for (size_t i = 0; i < a.best_params.size(); ++i) CHECK(a.best_params[i].values == b.best_params[i].values);

  // And the rendered report is byte-identical.
  RunReport ra, rb;
  ra.seeds.push_back(a.metrics);
  rb.seeds.push_back(b.metrics);
  CHECK(ra.to_text() == rb.to_text());
}

TEST_CASE("all arms run end to end on a tiny cohort") {
  const TrainerDataset data = tiny_dataset(8, true);
  for (ArmView view : {ArmView::EM, ArmView::ToM, ArmView::Both}) {
    for (bool fusion : {false, true}) {
      TrainConfig cfg = tiny_config(2);
      cfg.arm = {view, fusion, true};
      const SeedOutcome out = train_one_seed(data, cfg, 2);
      CHECK(out.metrics.sample_level.total() > 0);
    }
  }
}

TEST_CASE("evaluate_checkpoint reproduces the trained model's predictions") {
  const TrainerDataset data = tiny_dataset(8, true);
  TrainConfig cfg = tiny_config(10);
  const TrainOutput out = run_training(data, cfg);
  REQUIRE(out.checkpoints.size() == 1);

  Checkpoint ckpt;
  ckpt.header_json = out.checkpoint_header_json;
  ckpt.tensors = out.checkpoints[0].second;
  const RunReport report = evaluate_checkpoint(ckpt, data);
  REQUIRE(report.seeds.size() == 1);
  // The checkpoint was selected on validation accuracy over this same tiny
  // separable cohort, so whole-dataset accuracy should be high.
  CHECK(report.seeds[0].sample_level.accuracy() > 0.7);
}

TEST_CASE("majority baseline scores chance on balanced data") {
  const TrainerDataset data = tiny_dataset(10, true);
  TrainConfig cfg = tiny_config(1);
  cfg.seeds = {1, 2, 3};
  const RunReport report = majority_baseline(data, cfg);
  REQUIRE(report.seeds.size() == 3);
  for (const SeedMetrics& m : report.seeds) {
    const Confusion& c = m.sample_level;
    CHECK((c.sensitivity() == 0.0 || c.specificity() == 0.0));  // collapses to one class
  }
}

TEST_CASE("ablation grid has the 6+4 row structure and reuses duplicate arms") {
  const TrainerDataset data = tiny_dataset(8, true);
  TrainConfig cfg = tiny_config(1);
  const AblationTables tables = ablate(data, cfg);
  REQUIRE(tables.empathy_components.size() == 6);
  REQUIRE(tables.network_modules.size() == 4);

  // Rows 5/6 of the empathy table equal rows 1/3 of the modules table
  // (same arm configs), so their reports must agree.
  CHECK(tables.empathy_components[4].report.accuracy().mean ==
        tables.network_modules[0].report.accuracy().mean);
  CHECK(tables.empathy_components[5].report.accuracy().mean ==
        tables.network_modules[1].report.accuracy().mean);

  const std::string rendered = render_ablation_tables(tables);
  CHECK(rendered.find("rows=6") != std::string::npos);
  CHECK(rendered.find("rows=4") != std::string::npos);
  CHECK(rendered.find("majority-baseline") != std::string::npos);
}

TEST_CASE("config validation rejects bad fractions and batch sizes") {
  TrainConfig cfg = tiny_config();
  cfg.train_frac = 0.5;  // sums to 0.8
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = tiny_config();
  cfg.batch_size = 3;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = tiny_config();
  cfg.seeds.clear();
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
