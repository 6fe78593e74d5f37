#include "beam/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <json.hpp>
#include <map>
#include <set>

#include "beam/contrast.hpp"
#include "beam/fusion.hpp"
#include "beam/losses.hpp"
#include "beam/rng.hpp"

namespace beam {

using json = nlohmann::json;

const char* arm_view_name(ArmView v) {
  switch (v) {
    case ArmView::EM: return "em";
    case ArmView::ToM: return "tom";
    default: return "tom+em";
  }
}

ArmView arm_view_from_name(const std::string& s) {
  if (s == "em") return ArmView::EM;
  if (s == "tom") return ArmView::ToM;
  if (s == "tom+em" || s == "both") return ArmView::Both;
  throw ValidationError("unknown arm '" + s + "' (expected em, tom or tom+em)");
}

std::string Arm::describe() const {
  std::string out = std::string("arm=") + arm_view_name(view);
  out += view == ArmView::Both ? (fusion ? " fusion=1" : " fusion=0") : " fusion=-";
  out += contrast ? " contrast=1" : " contrast=0";
  return out;
}

void TrainConfig::validate() const {
  encoder.validate();
  require(std::abs(train_frac + val_frac + test_frac - 1.0) < 1e-9, "split fractions must sum to 1");
  require(train_frac > 0.0 && val_frac > 0.0 && test_frac > 0.0, "split fractions must be positive");
  require(batch_size >= 4, "batch size must be >= 4 (stratified batching needs 2 per class)");
  require(epochs >= 1, "epochs must be >= 1");
  require(learning_rate > 0.0, "learning rate must be positive");
  require(tau > 0.0, "temperature must be positive");
  require(lambda_fusion >= 0.0 && lambda_contrast >= 0.0, "loss weights must be >= 0");
  require(!seeds.empty(), "at least one seed required");
}

TrainerDataset TrainerDataset::load(const std::filesystem::path& dir) {
  TrainerDataset data;
  for (const std::string& id : read_manifest(dir)) {
    SubjectSamples ss = read_subject_samples(dir, id);
    SubjectData sd;
    sd.subject_id = ss.subject_id;
    sd.label = ss.label;
    for (Sample& s : ss.samples) (s.view == View::ToM ? sd.tom : sd.em).push_back(std::move(s));
    if (data.channels == 0) {
      const Sample& first = sd.tom.empty() ? sd.em.front() : sd.tom.front();
      data.channels = first.channels;
      data.window = first.window;
      data.sample_rate_hz = ss.sample_rate_hz;
    }
    data.subjects.push_back(std::move(sd));
  }
  require(!data.subjects.empty(), "dataset has no subjects");
  return data;
}

SubjectSplit subject_split(const std::vector<Label>& subject_labels, double train_frac, double val_frac,
                           double test_frac, uint64_t seed) {
  const int n = static_cast<int>(subject_labels.size());
  require(n >= 3, "subject split needs at least 3 subjects");
  require(std::abs(train_frac + val_frac + test_frac - 1.0) < 1e-9, "split fractions must sum to 1");

  // Global counts by largest remainder, then at least one subject everywhere.
  const double want[3] = {train_frac * n, val_frac * n, test_frac * n};
  int counts[3];
  double rem[3];
  int assigned = 0;
  for (int i = 0; i < 3; ++i) {
    counts[i] = static_cast<int>(std::floor(want[i]));
    rem[i] = want[i] - counts[i];
    assigned += counts[i];
  }
  while (assigned < n) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (rem[i] > rem[best]) best = i;
    ++counts[best];
    rem[best] = -1.0;
    ++assigned;
  }
  for (int i = 2; i >= 0; --i) {
    while (counts[i] == 0) {
      int donor = 0;
      for (int j = 1; j < 3; ++j)
        if (counts[j] > counts[donor]) donor = j;
      --counts[donor];
      ++counts[i];
    }
  }

  // Label-stratified ordering: shuffle within each class, then interleave by
  // remaining share so each set receives a balanced mix.
  Rng rng(derive_seed(seed, fnv1a64("subject-split")));
  std::vector<int> groups[2];
  for (int i = 0; i < n; ++i) groups[subject_labels[i] == Label::High ? 1 : 0].push_back(i);
  rng.shuffle(groups[0]);
  rng.shuffle(groups[1]);
  std::vector<int> order;
  size_t at0 = 0, at1 = 0;
  while (at0 < groups[0].size() || at1 < groups[1].size()) {
    const size_t left0 = groups[0].size() - at0;
    const size_t left1 = groups[1].size() - at1;
    if (left0 >= left1)
      order.push_back(groups[0][at0++]);
    else
      order.push_back(groups[1][at1++]);
  }

  SubjectSplit split;
  int at = 0;
  for (int i = 0; i < counts[0]; ++i) split.train.push_back(order[at++]);
  for (int i = 0; i < counts[1]; ++i) split.val.push_back(order[at++]);
  for (int i = 0; i < counts[2]; ++i) split.test.push_back(order[at++]);

  // Leakage tripwire, asserted on every run.
  std::set<int> seen;
  for (const auto* set : {&split.train, &split.val, &split.test})
    for (int idx : *set)
      if (!seen.insert(idx).second) throw RuntimeError("subject split produced overlapping sets");
  if (seen.size() != static_cast<size_t>(n)) throw RuntimeError("subject split dropped a subject");
  return split;
}

std::vector<ViewPair> pair_views(const std::vector<Sample>& tom, const std::vector<Sample>& em) {
  require(!tom.empty() && !em.empty(), "pair_views needs samples from both views");
  for (const Sample& s : em)
    require(s.subject_id == tom.front().subject_id, "pair_views across subjects ('" + tom.front().subject_id +
                                                        "' vs '" + s.subject_id + "')");
  std::vector<ViewPair> pairs;
  pairs.reserve(tom.size());
  for (size_t i = 0; i < tom.size(); ++i) pairs.push_back({&tom[i], &em[i % em.size()]});
  return pairs;
}

namespace {

using F = float;

/// One training/evaluation unit: a ToM/EM pair for the two-view arm, a single
/// sample otherwise.
struct Unit {
  const Sample* a = nullptr;  // ToM (or the single view)
  const Sample* b = nullptr;  // EM partner, Both only
  int label = 0;
  int subject = -1;
};

int rep_dim(const Arm& arm, const EncoderConfig& enc) {
  if (arm.view != ArmView::Both) return enc.d_model;
  return arm.fusion ? 3 * enc.d_model / 2 : 2 * enc.d_model;
}

struct Model {
  Arm arm;
  EncoderConfig cfg;
  EncoderParams<F> enc_a;                  // ToM encoder (or the only one)
  std::optional<EncoderParams<F>> enc_b;   // EM encoder when weights are not shared
  Var<F> head_w, head_b;

  static Model init(const Arm& arm, const EncoderConfig& cfg, uint64_t seed) {
    Model m;
    m.arm = arm;
    m.cfg = cfg;
    m.enc_a = EncoderParams<F>::init(cfg, derive_seed(seed, fnv1a64("enc-a")));
    if (!cfg.shared_encoder && arm.view == ArmView::Both)
      m.enc_b = EncoderParams<F>::init(cfg, derive_seed(seed, fnv1a64("enc-b")));
    const int f = rep_dim(arm, cfg);
    Rng rng(derive_seed(seed, fnv1a64("head-init")));
    const double limit = std::sqrt(6.0 / (f + 2));
    std::vector<F> w(static_cast<size_t>(f) * 2);
    for (auto& x : w) x = static_cast<F>(rng.uniform(-limit, limit));
    m.head_w = Var<F>::leaf({f, 2}, std::move(w));
    m.head_b = Var<F>::leaf({2}, std::vector<F>(2, 0.0f));
    return m;
  }

  std::vector<std::pair<std::string, Var<F>*>> named() {
    std::vector<std::pair<std::string, Var<F>*>> out;
    for (auto& [name, v] : enc_a.named()) out.emplace_back("enc." + name, v);
    if (enc_b)
      for (auto& [name, v] : enc_b->named()) out.emplace_back("enc_b." + name, v);
    out.emplace_back("head.w", &head_w);
    out.emplace_back("head.b", &head_b);
    return out;
  }

  const EncoderParams<F>& em_encoder() const { return enc_b ? *enc_b : enc_a; }

  /// Representation feeding the classifier, plus the per-view latents when
  /// both views are present (needed by the fusion term).
  struct UnitForward {
    Var<F> rep;
    Var<F> z_tom, z_em;  // defined only for Both
  };

  UnitForward forward_unit(const Unit& u) {
    UnitForward out;
    if (arm.view == ArmView::Both) {
      out.z_tom = encode_sample(*u.a, enc_a);
      out.z_em = encode_sample(*u.b, em_encoder());
      out.rep = arm.fusion ? fuse(out.z_tom, out.z_em) : concat<F>({out.z_tom, out.z_em});
    } else {
      out.rep = encode_sample(*u.a, enc_a);
    }
    return out;
  }

  int predict(const Unit& u) {
    UnitForward fwd = forward_unit(u);
    const Var<F> logits = add_rowvec(matmul(reshape(fwd.rep, {1, fwd.rep.dim(0)}), head_w), head_b);
    return logits.values()[1] > logits.values()[0] ? 1 : 0;
  }
};

class Adam {
 public:
  explicit Adam(double lr) : lr_(lr) {}

  void step(std::vector<std::pair<std::string, Var<F>*>>& params) {
    if (m_.empty()) {
      for (auto& [name, v] : params) {
        m_.emplace_back(v->size(), 0.0f);
        v_.emplace_back(v->size(), 0.0f);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t p = 0; p < params.size(); ++p) {
      Var<F>* var = params[p].second;
      const std::vector<F> g = var->grad();
      std::vector<F>& vals = var->mutable_values();
      for (size_t i = 0; i < g.size(); ++i) {
        m_[p][i] = static_cast<F>(beta1_ * m_[p][i] + (1.0 - beta1_) * g[i]);
        v_[p][i] = static_cast<F>(beta2_ * v_[p][i] + (1.0 - beta2_) * g[i] * g[i]);
        const double mhat = m_[p][i] / bc1;
        const double vhat = v_[p][i] / bc2;
        vals[i] -= static_cast<F>(lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
      var->zero_grad();
    }
  }

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int64_t t_ = 0;
  std::vector<std::vector<F>> m_, v_;
};

/// Units for the configured arm over the given subjects. Pairs cycle the EM
/// view per the pairing rule; single-view arms take each window alone.
std::vector<Unit> build_units(const TrainerDataset& data, const Arm& arm, const std::vector<int>& subjects) {
  std::vector<Unit> units;
  for (int si : subjects) {
    const SubjectData& sd = data.subjects[si];
    const int label = sd.label == Label::High ? 1 : 0;
    if (arm.view == ArmView::Both) {
      for (const ViewPair& p : pair_views(sd.tom, sd.em)) units.push_back({p.tom, p.em, label, si});
    } else {
      const auto& list = arm.view == ArmView::ToM ? sd.tom : sd.em;
      require(!list.empty(), "subject '" + sd.subject_id + "' has no samples for this arm");
      for (const Sample& s : list) units.push_back({&s, nullptr, label, si});
    }
  }
  return units;
}

/// Augmented copies of minority-class units until both classes count equal.
/// The pool owns the new samples; unit pointers reference into it.
void balance_with_augmentation(std::vector<Unit>& units, std::deque<Sample>& pool, const AugmentConfig& base,
                               uint64_t seed) {
  int64_t count[2] = {0, 0};
  for (const Unit& u : units) ++count[u.label];
  if (count[0] == count[1]) return;
  if (count[0] == 0 || count[1] == 0) {
    BEAM_LOG_WARN("training split has a single class; skipping augmentation balancing");
    return;
  }
  const int minority = count[0] < count[1] ? 0 : 1;
  std::vector<Unit> sources;
  for (const Unit& u : units)
    if (u.label == minority) sources.push_back(u);
  AugmentConfig cfg = base;
  cfg.rng_seed = derive_seed(seed, fnv1a64("augment-balance"));
  const int64_t need = std::abs(count[0] - count[1]);
  for (int64_t j = 0; j < need; ++j) {
    const Unit& src = sources[j % sources.size()];
    Unit copy = src;
    pool.push_back(augment_sample(*src.a, cfg, static_cast<uint64_t>(2 * j)));
    copy.a = &pool.back();
    if (src.b) {
      pool.push_back(augment_sample(*src.b, cfg, static_cast<uint64_t>(2 * j + 1)));
      copy.b = &pool.back();
    }
    units.push_back(copy);
  }
}

/// Stratified batches: >= 2 units of each present class per batch; a tail
/// that cannot satisfy that is dropped.
std::vector<std::vector<int>> make_batches(const std::vector<Unit>& units, int batch_size, Rng& rng) {
  std::vector<int> by_class[2];
  for (size_t i = 0; i < units.size(); ++i) by_class[units[i].label].push_back(static_cast<int>(i));
  rng.shuffle(by_class[0]);
  rng.shuffle(by_class[1]);

  std::vector<std::vector<int>> batches;
  size_t at0 = 0, at1 = 0;
  if (by_class[0].empty() || by_class[1].empty()) {
    // Degenerate single-class data: plain batching.
    const auto& only = by_class[0].empty() ? by_class[1] : by_class[0];
    for (size_t i = 0; i + batch_size <= only.size() || (only.size() - i >= 2 && i + batch_size > only.size());
         i += batch_size) {
      const size_t end = std::min(only.size(), i + batch_size);
      if (end - i < 2) break;
      batches.emplace_back(only.begin() + i, only.begin() + end);
    }
    return batches;
  }
  while (true) {
    const int64_t left0 = static_cast<int64_t>(by_class[0].size() - at0);
    const int64_t left1 = static_cast<int64_t>(by_class[1].size() - at1);
    if (left0 < 2 || left1 < 2 || left0 + left1 < 4) break;
    const int64_t b = std::min<int64_t>(batch_size, left0 + left1);
    int64_t k1 = std::llround(static_cast<double>(b) * left1 / (left0 + left1));
    k1 = std::clamp<int64_t>(k1, 2, b - 2);
    k1 = std::min(k1, left1);
    int64_t k0 = std::min(b - k1, left0);
    if (k0 < 2) break;
    std::vector<int> batch;
    for (int64_t i = 0; i < k0; ++i) batch.push_back(by_class[0][at0++]);
    for (int64_t i = 0; i < k1; ++i) batch.push_back(by_class[1][at1++]);
    batches.push_back(std::move(batch));
  }
  return batches;
}

Confusion eval_units(Model& model, const std::vector<Unit>& units) {
  Confusion c;
  for (const Unit& u : units) c.add(u.label, model.predict(u));
  return c;
}

/// Majority vote over each subject's unit predictions; ties predict Low.
Confusion eval_subject_vote(Model& model, const std::vector<Unit>& units) {
  std::map<int, std::pair<int, int>> votes;  // subject -> (high votes, total)
  std::map<int, int> labels;
  for (const Unit& u : units) {
    auto& v = votes[u.subject];
    v.first += model.predict(u);
    v.second += 1;
    labels[u.subject] = u.label;
  }
  Confusion c;
  for (const auto& [subject, v] : votes) c.add(labels.at(subject), 2 * v.first > v.second ? 1 : 0);
  return c;
}

json encoder_config_json(const EncoderConfig& e) {
  return {{"patch_len", e.patch_len}, {"d_model", e.d_model},           {"n_layers", e.n_layers},
          {"n_heads", e.n_heads},     {"d_ff", e.d_ff},                 {"max_channels", e.max_channels},
          {"max_patches", e.max_patches}, {"shared_encoder", e.shared_encoder}};
}

EncoderConfig encoder_config_from_json(const json& j) {
  EncoderConfig e;
  e.patch_len = j.at("patch_len").get<int>();
  e.d_model = j.at("d_model").get<int>();
  e.n_layers = j.at("n_layers").get<int>();
  e.n_heads = j.at("n_heads").get<int>();
  e.d_ff = j.at("d_ff").get<int>();
  e.max_channels = j.at("max_channels").get<int>();
  e.max_patches = j.at("max_patches").get<int>();
  e.shared_encoder = j.at("shared_encoder").get<bool>();
  return e;
}

std::vector<NamedTensor> snapshot_params(Model& model) {
  std::vector<NamedTensor> out;
  for (auto& [name, v] : model.named()) {
    NamedTensor t;
    t.name = name;
    t.shape = v->shape();
    t.values.assign(v->values().begin(), v->values().end());
    out.push_back(std::move(t));
  }
  return out;
}

void restore_params(Model& model, const std::vector<NamedTensor>& tensors) {
  size_t i = 0;
  for (auto& [name, v] : model.named()) {
    require(i < tensors.size() && tensors[i].name == name, "parameter snapshot does not match model layout");
    std::vector<F> vals(tensors[i].values.begin(), tensors[i].values.end());
    *v = Var<F>::leaf(tensors[i].shape, std::move(vals));
    ++i;
  }
}

}  // namespace

SeedOutcome train_one_seed(const TrainerDataset& data, const TrainConfig& cfg, uint64_t seed) {
  cfg.validate();
  std::vector<Label> labels;
  for (const SubjectData& s : data.subjects) labels.push_back(s.label);
  const SubjectSplit split = subject_split(labels, cfg.train_frac, cfg.val_frac, cfg.test_frac, seed);

  std::vector<Unit> train_units = build_units(data, cfg.arm, split.train);
  const std::vector<Unit> val_units = build_units(data, cfg.arm, split.val);
  const std::vector<Unit> test_units = build_units(data, cfg.arm, split.test);
  require(!train_units.empty() && !val_units.empty() && !test_units.empty(),
          "a split ended up with no units; dataset too small for these fractions");

  std::deque<Sample> augment_pool;
  if (cfg.augment_balance) balance_with_augmentation(train_units, augment_pool, cfg.augment, seed);

  Model model = Model::init(cfg.arm, cfg.encoder, seed);
  auto params = model.named();
  Adam opt(cfg.learning_rate);

  SeedOutcome out;
  out.metrics.seed = seed;
  uint64_t step_counter = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng batch_rng(derive_seed(seed, fnv1a64("batches"), static_cast<uint64_t>(epoch)));
    const auto batches = make_batches(train_units, cfg.batch_size, batch_rng);
    require(!batches.empty(), "no trainable batches; training split too small");

    double epoch_loss = 0.0;
    for (const auto& batch : batches) {
      std::vector<Var<F>> reps;
      std::vector<Var<F>> fusion_terms;
      std::vector<int> batch_labels;
      reps.reserve(batch.size());
      for (int idx : batch) {
        const Unit& u = train_units[idx];
        auto fwd = model.forward_unit(u);
        reps.push_back(fwd.rep);
        batch_labels.push_back(u.label);
        if (cfg.arm.view == ArmView::Both && cfg.arm.fusion && cfg.lambda_fusion > 0.0)
          fusion_terms.push_back(fusion_loss(fwd.z_tom, fwd.z_em));
      }
      const Var<F> rep_matrix = stack_rows(reps);
      const Var<F> logits = add_rowvec(matmul(rep_matrix, model.head_w), model.head_b);
      const Var<F> ce = cross_entropy_with_logits(logits, batch_labels);

      Var<F> fusion_term;
      if (!fusion_terms.empty()) fusion_term = mean_over_axis(concat(fusion_terms));

      Var<F> contrast_term;
      if (cfg.arm.contrast && cfg.lambda_contrast > 0.0) {
        Rng pos_rng(derive_seed(seed, fnv1a64("positives"), step_counter));
        const std::vector<int> positives = build_positive_map(batch_labels, pos_rng);
        contrast_term = info_nce(l2_normalize_batch(rep_matrix), positives, cfg.tau, cfg.exclude_self);
      }

      const Var<F> loss = total_loss(ce, fusion_term, contrast_term, cfg.lambda_fusion, cfg.lambda_contrast);
      epoch_loss += loss.item();
      try {
        backward(loss);
      } catch (const RuntimeError& e) {
        throw RuntimeError("training diverged at seed " + std::to_string(seed) + " epoch " +
                           std::to_string(epoch) + ": " + e.what());
      }
      opt.step(params);
      ++step_counter;
    }
    epoch_loss /= static_cast<double>(batches.size());
    if (epoch == 0) out.first_epoch_loss = epoch_loss;
    out.last_epoch_loss = epoch_loss;

    const double val_acc = eval_units(model, val_units).accuracy();
    BEAM_LOG_DEBUG("seed %llu epoch %d loss %.4f val_acc %.4f", (unsigned long long)seed, epoch, epoch_loss,
                   val_acc);
    if (val_acc > out.best_val_accuracy || out.best_epoch < 0) {
      out.best_val_accuracy = val_acc;
      out.best_epoch = epoch;
      out.best_params = snapshot_params(model);
    }
  }

  restore_params(model, out.best_params);
  out.metrics.sample_level = eval_units(model, test_units);
  out.metrics.subject_level = eval_subject_vote(model, test_units);
  return out;
}

TrainOutput run_training(const TrainerDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  TrainOutput out;
  out.report.arm_desc = cfg.arm.describe();
  for (uint64_t seed : cfg.seeds) {
    SeedOutcome seed_out = train_one_seed(data, cfg, seed);
    out.report.seeds.push_back(seed_out.metrics);
    out.checkpoints.emplace_back(seed, std::move(seed_out.best_params));
  }
  json header = {
      {"version", 1},
      {"arm", {{"view", arm_view_name(cfg.arm.view)}, {"fusion", cfg.arm.fusion}, {"contrast", cfg.arm.contrast}}},
      {"encoder", encoder_config_json(cfg.encoder)},
      {"tau", cfg.tau},
      {"channels", data.channels},
      {"window", data.window},
  };
  out.checkpoint_header_json = header.dump();
  return out;
}

RunReport evaluate_checkpoint(const Checkpoint& ckpt, const TrainerDataset& data) {
  require(!data.subjects.empty(), "evaluation on an empty dataset");
  const json header = json::parse(ckpt.header_json);
  Arm arm;
  arm.view = arm_view_from_name(header.at("arm").at("view").get<std::string>());
  arm.fusion = header.at("arm").at("fusion").get<bool>();
  arm.contrast = header.at("arm").at("contrast").get<bool>();
  const EncoderConfig enc = encoder_config_from_json(header.at("encoder"));
  require(header.at("channels").get<int>() == data.channels && header.at("window").get<int>() == data.window,
          "checkpoint was trained on a different sample shape than this dataset");

  Model model = Model::init(arm, enc, 0);
  restore_params(model, ckpt.tensors);

  std::vector<int> all;
  for (size_t i = 0; i < data.subjects.size(); ++i) all.push_back(static_cast<int>(i));
  const std::vector<Unit> units = build_units(data, arm, all);

  RunReport report;
  report.arm_desc = arm.describe() + " mode=eval";
  SeedMetrics metrics;
  metrics.seed = 0;
  metrics.sample_level = eval_units(model, units);
  metrics.subject_level = eval_subject_vote(model, units);
  report.seeds.push_back(metrics);
  return report;
}

RunReport majority_baseline(const TrainerDataset& data, const TrainConfig& cfg) {
  RunReport report;
  report.arm_desc = "arm=majority-baseline";
  std::vector<Label> labels;
  for (const SubjectData& s : data.subjects) labels.push_back(s.label);
  for (uint64_t seed : cfg.seeds) {
    const SubjectSplit split = subject_split(labels, cfg.train_frac, cfg.val_frac, cfg.test_frac, seed);
    const std::vector<Unit> train_units = build_units(data, cfg.arm, split.train);
    const std::vector<Unit> test_units = build_units(data, cfg.arm, split.test);
    int64_t count[2] = {0, 0};
    for (const Unit& u : train_units) ++count[u.label];
    const int majority = count[1] > count[0] ? 1 : 0;
    SeedMetrics m;
    m.seed = seed;
    std::map<int, int> subject_labels;
    for (const Unit& u : test_units) {
      m.sample_level.add(u.label, majority);
      subject_labels[u.subject] = u.label;
    }
    for (const auto& [subject, label] : subject_labels) m.subject_level.add(label, majority);
    report.seeds.push_back(m);
  }
  return report;
}

AblationTables ablate(const TrainerDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  AblationTables tables;
  std::map<std::string, RunReport> memo;

  auto run_arm = [&](const Arm& arm) {
    const std::string key = arm.describe();
    auto it = memo.find(key);
    if (it == memo.end()) {
      TrainConfig arm_cfg = cfg;
      arm_cfg.arm = arm;
      BEAM_LOG_INFO("ablation arm: %s", key.c_str());
      RunReport report = run_training(data, arm_cfg).report;
      it = memo.emplace(key, std::move(report)).first;
    }
    return it->second;
  };

  // Empathy components: {EM, ToM, ToM+EM} x {contrast off/on}. The two-view
  // rows use plain concatenation (fusion off).
  for (ArmView view : {ArmView::EM, ArmView::ToM, ArmView::Both}) {
    for (bool contrast : {false, true}) {
      Arm arm{view, false, contrast};
      tables.empathy_components.push_back({arm, run_arm(arm)});
    }
  }
  // Network modules on the two-view input: {fusion off/on} x {contrast off/on}.
  for (bool fusion : {false, true}) {
    for (bool contrast : {false, true}) {
      Arm arm{ArmView::Both, fusion, contrast};
      tables.network_modules.push_back({arm, run_arm(arm)});
    }
  }
  tables.majority_baseline = majority_baseline(data, cfg);
  return tables;
}

std::string render_ablation_tables(const AblationTables& tables) {
  auto row = [](const AblationRow& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-24s accuracy=%s specificity=%s sensitivity=%s\n",
                  r.arm.describe().c_str(), format_mean_std(r.report.accuracy()).c_str(),
                  format_mean_std(r.report.specificity()).c_str(),
                  format_mean_std(r.report.sensitivity()).c_str());
    return std::string(buf);
  };
  std::string out = "table: empathy components (rows=6)\n";
  for (const auto& r : tables.empathy_components) out += row(r);
  out += "table: network modules (rows=4)\n";
  for (const auto& r : tables.network_modules) out += row(r);
  out += "table: baseline\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-24s accuracy=%s specificity=%s sensitivity=%s\n", "majority-baseline",
                format_mean_std(tables.majority_baseline.accuracy()).c_str(),
                format_mean_std(tables.majority_baseline.specificity()).c_str(),
                format_mean_std(tables.majority_baseline.sensitivity()).c_str());
  out += buf;
  return out;
}

}  // namespace beam
