// beam: one binary, one subcommand per pipeline stage.
//
// Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "beam/augment.hpp"
#include "beam/eeg_io.hpp"
#include "beam/gradcheck.hpp"
#include "beam/preprocess.hpp"
#include "beam/synthgen.hpp"
#include "beam/trainer.hpp"

namespace fs = std::filesystem;
using namespace beam;

namespace {

struct GlobalOpts {
  uint64_t seed = 42;
  int threads = 1;
  std::string log_level = "info";
};

void apply_globals(const GlobalOpts& g) {
  set_num_threads(g.threads);
  if (g.log_level == "debug")
    log_level() = LogLevel::Debug;
  else if (g.log_level == "info")
    log_level() = LogLevel::Info;
  else if (g.log_level == "warn")
    log_level() = LogLevel::Warn;
  else if (g.log_level == "error")
    log_level() = LogLevel::Error;
  else
    throw ValidationError("unknown log level '" + g.log_level + "'");
}

void echo_config(const std::string& subcommand, const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string line = "config: subcommand=" + subcommand;
  for (const auto& [k, v] : kv) line += " " + k + "=" + v;
  std::puts(line.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::vector<uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<uint64_t> seeds;
  size_t at = 0;
  while (at < csv.size()) {
    size_t comma = csv.find(',', at);
    if (comma == std::string::npos) comma = csv.size();
    seeds.push_back(std::stoull(csv.substr(at, comma - at)));
    at = comma + 1;
  }
  require(!seeds.empty(), "empty seed list");
  return seeds;
}

void parse_band(const std::string& band, double& lo, double& hi) {
  const size_t colon = band.find(':');
  require(colon != std::string::npos, "band must look like low:high, e.g. 0.1:75");
  lo = std::stod(band.substr(0, colon));
  hi = std::stod(band.substr(colon + 1));
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw RuntimeError("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beam: multi-view EEG empathy-level pipeline"};
  app.require_subcommand(1);

  GlobalOpts globals;
  app.add_option("--seed", globals.seed, "global random seed");
  app.add_option("--threads", globals.threads, "worker threads for matrix products (1 = fully serial)");
  app.add_option("--log-level", globals.log_level, "debug|info|warn|error");

  // --- synth ---------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic cohort");
  SynthConfig synth_cfg;
  std::string synth_out;
  bool synth_overwrite = false;
  std::vector<double> synth_tom_clips, synth_em_clips;
  synth_cmd->add_option("--subjects", synth_cfg.n_subjects, "number of subjects");
  synth_cmd->add_option("--channels", synth_cfg.channels, "number of channels");
  synth_cmd->add_option("--rate", synth_cfg.sample_rate_hz, "sample rate in Hz");
  synth_cmd->add_option("--effect", synth_cfg.class_effect, "alpha amplitude gap between classes");
  synth_cmd->add_option("--noise", synth_cfg.noise_floor, "pink noise standard deviation");
  synth_cmd->add_option("--tom-clips", synth_tom_clips, "ToM clip durations in seconds");
  synth_cmd->add_option("--em-clips", synth_em_clips, "EM clip durations in seconds");
  synth_cmd->add_option("--out", synth_out, "output dataset directory")->required();
  synth_cmd->add_flag("--overwrite", synth_overwrite, "replace a non-empty output directory");

  // --- preprocess ----------------------------------------------------------
  auto* pp_cmd = app.add_subcommand("preprocess", "filter, decimate, re-reference and window a dataset");
  std::string pp_in, pp_out, pp_band = "0.1:75";
  PreprocessConfig pp_cfg;
  bool pp_overwrite = false;
  pp_cmd->add_option("--in", pp_in, "raw dataset directory")->required();
  pp_cmd->add_option("--out", pp_out, "output samples directory")->required();
  pp_cmd->add_option("--band", pp_band, "band edges low:high in Hz");
  pp_cmd->add_option("--rate", pp_cfg.target_rate_hz, "target rate in Hz");
  pp_cmd->add_option("--window", pp_cfg.window_seconds, "window length in seconds");
  pp_cmd->add_option("--stride", pp_cfg.stride_seconds, "stride in seconds");
  pp_cmd->add_flag("--overwrite", pp_overwrite, "replace a non-empty output directory");

  // --- augment ---------------------------------------------------------------
  auto* aug_cmd = app.add_subcommand("augment", "perturb STFT amplitudes of every sample");
  std::string aug_in, aug_out;
  AugmentConfig aug_cfg;
  bool aug_overwrite = false;
  aug_cmd->add_option("--in", aug_in, "samples directory")->required();
  aug_cmd->add_option("--out", aug_out, "output samples directory")->required();
  aug_cmd->add_option("--std", aug_cfg.noise_std, "gaussian noise standard deviation");
  aug_cmd->add_option("--mean", aug_cfg.noise_mean, "gaussian noise mean");
  aug_cmd->add_flag("--overwrite", aug_overwrite, "replace a non-empty output directory");

  // --- train / eval / ablate -------------------------------------------------
  TrainConfig train_cfg;
  std::string train_data, train_out, train_arm = "tom+em", train_seeds = "1,2,3,4,5";
  bool train_overwrite = false;
  bool flag_fusion = false, flag_no_fusion = false, flag_contrast = false, flag_no_contrast = false;

  auto add_train_options = [&](CLI::App* cmd) {
    cmd->add_option("--data", train_data, "preprocessed samples directory")->required();
    cmd->add_option("--arm", train_arm, "em|tom|tom+em");
    cmd->add_flag("--fusion", flag_fusion, "enable the fusion module");
    cmd->add_flag("--no-fusion", flag_no_fusion, "disable the fusion module");
    cmd->add_flag("--contrast", flag_contrast, "enable the contrastive module");
    cmd->add_flag("--no-contrast", flag_no_contrast, "disable the contrastive module");
    cmd->add_option("--seeds", train_seeds, "comma-separated seed list");
    cmd->add_option("--epochs", train_cfg.epochs, "training epochs");
    cmd->add_option("--batch", train_cfg.batch_size, "batch size");
    cmd->add_option("--lr", train_cfg.learning_rate, "learning rate");
    cmd->add_option("--tau", train_cfg.tau, "InfoNCE temperature");
    cmd->add_option("--lambda-fusion", train_cfg.lambda_fusion, "fusion loss weight");
    cmd->add_option("--lambda-contrast", train_cfg.lambda_contrast, "contrastive loss weight");
    cmd->add_flag("--exclude-self", train_cfg.exclude_self, "drop the j=i InfoNCE denominator term");
    cmd->add_option("--d-model", train_cfg.encoder.d_model, "latent dimension");
    cmd->add_option("--layers", train_cfg.encoder.n_layers, "transformer layers");
    cmd->add_option("--heads", train_cfg.encoder.n_heads, "attention heads");
    cmd->add_option("--d-ff", train_cfg.encoder.d_ff, "feed-forward width");
    cmd->add_option("--patch", train_cfg.encoder.patch_len, "patch length in samples");
    cmd->add_flag("--separate-encoders", [&](int64_t) { train_cfg.encoder.shared_encoder = false; },
                  "use separate per-view encoder weights");
    cmd->add_option("--out", train_out, "output run directory");
    cmd->add_flag("--overwrite", train_overwrite, "replace a non-empty output directory");
  };

  auto* train_cmd = app.add_subcommand("train", "train and evaluate one arm over the seed list");
  add_train_options(train_cmd);
  auto* ablate_cmd = app.add_subcommand("ablate", "run the full ablation grid");
  add_train_options(ablate_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  std::string eval_ckpt, eval_data;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--data", eval_data, "preprocessed samples directory")->required();

  // --- gradcheck / verify ----------------------------------------------------
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference validation of every backward rule");
  int grad_points = 25;
  grad_cmd->add_option("--points", grad_points, "random points per check");

  auto* verify_cmd = app.add_subcommand("verify", "structural checks over a generated dataset");
  std::string verify_data;
  verify_cmd->add_option("--data", verify_data, "dataset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    apply_globals(globals);

    if (synth_cmd->parsed()) {
      synth_cfg.rng_seed = globals.seed;
      if (!synth_tom_clips.empty()) synth_cfg.tom_clip_seconds = synth_tom_clips;
      if (!synth_em_clips.empty()) synth_cfg.em_clip_seconds = synth_em_clips;
      echo_config("synth", {{"subjects", std::to_string(synth_cfg.n_subjects)},
                            {"channels", std::to_string(synth_cfg.channels)},
                            {"rate", fmt(synth_cfg.sample_rate_hz)},
                            {"effect", fmt(synth_cfg.class_effect)},
                            {"noise", fmt(synth_cfg.noise_floor)},
                            {"seed", std::to_string(globals.seed)},
                            {"out", synth_out}});
      prepare_output_dir(synth_out, synth_overwrite);
      generate(synth_cfg, synth_out);
      std::puts("synth: done");
      return 0;
    }

    if (pp_cmd->parsed()) {
      parse_band(pp_band, pp_cfg.band_low_hz, pp_cfg.band_high_hz);
      echo_config("preprocess", {{"in", pp_in},
                                 {"out", pp_out},
                                 {"band", pp_band},
                                 {"rate", fmt(pp_cfg.target_rate_hz)},
                                 {"window", fmt(pp_cfg.window_seconds)},
                                 {"stride", fmt(pp_cfg.stride_seconds)}});
      prepare_output_dir(pp_out, pp_overwrite);
      preprocess_dataset(pp_in, pp_out, pp_cfg);
      std::puts("preprocess: done");
      return 0;
    }

    if (aug_cmd->parsed()) {
      aug_cfg.rng_seed = globals.seed;
      echo_config("augment", {{"in", aug_in},
                              {"out", aug_out},
                              {"std", fmt(aug_cfg.noise_std)},
                              {"mean", fmt(aug_cfg.noise_mean)},
                              {"seed", std::to_string(globals.seed)}});
      prepare_output_dir(aug_out, aug_overwrite);
      augment_dataset(aug_in, aug_out, aug_cfg);
      std::puts("augment: done");
      return 0;
    }

    if (train_cmd->parsed() || ablate_cmd->parsed()) {
      train_cfg.arm.view = arm_view_from_name(train_arm);
      if (flag_fusion) train_cfg.arm.fusion = true;
      if (flag_no_fusion) train_cfg.arm.fusion = false;
      if (flag_contrast) train_cfg.arm.contrast = true;
      if (flag_no_contrast) train_cfg.arm.contrast = false;
      train_cfg.seeds = parse_seed_list(train_seeds);
      train_cfg.augment.rng_seed = globals.seed;
      require(!train_out.empty(), "--out is required");

      const char* sub = train_cmd->parsed() ? "train" : "ablate";
      echo_config(sub, {{"data", train_data},
                        {"arm", train_arm},
                        {"fusion", train_cfg.arm.fusion ? "1" : "0"},
                        {"contrast", train_cfg.arm.contrast ? "1" : "0"},
                        {"seeds", train_seeds},
                        {"epochs", std::to_string(train_cfg.epochs)},
                        {"batch", std::to_string(train_cfg.batch_size)},
                        {"lr", fmt(train_cfg.learning_rate)},
                        {"tau", fmt(train_cfg.tau)},
                        {"lambda_fusion", fmt(train_cfg.lambda_fusion)},
                        {"lambda_contrast", fmt(train_cfg.lambda_contrast)},
                        {"d_model", std::to_string(train_cfg.encoder.d_model)},
                        {"layers", std::to_string(train_cfg.encoder.n_layers)},
                        {"threads", std::to_string(globals.threads)},
                        {"out", train_out}});

      TrainerDataset data = TrainerDataset::load(train_data);
      train_cfg.encoder.max_channels = data.channels;
      require(data.window % train_cfg.encoder.patch_len == 0,
              "window of " + std::to_string(data.window) + " samples is not divisible by patch length " +
                  std::to_string(train_cfg.encoder.patch_len));
      train_cfg.encoder.max_patches = data.window / train_cfg.encoder.patch_len;
      prepare_output_dir(train_out, train_overwrite);

      if (train_cmd->parsed()) {
        TrainOutput out = run_training(data, train_cfg);
        write_text_file(fs::path(train_out) / "report.txt", out.report.to_text());
        for (auto& [seed, tensors] : out.checkpoints)
          save_checkpoint(fs::path(train_out) / ("seed" + std::to_string(seed) + ".ckpt"),
                          out.checkpoint_header_json, tensors);
        std::fputs(out.report.to_text().c_str(), stdout);
      } else {
        AblationTables tables = ablate(data, train_cfg);
        const std::string rendered = render_ablation_tables(tables);
        write_text_file(fs::path(train_out) / "ablation.txt", rendered);
        std::string machine;
        for (const auto& row : tables.empathy_components)
          machine += "table=empathy " + row.arm.describe() + " accuracy=" +
                     format_mean_std(row.report.accuracy()) + "\n";
        for (const auto& row : tables.network_modules)
          machine += "table=modules " + row.arm.describe() + " accuracy=" +
                     format_mean_std(row.report.accuracy()) + "\n";
        write_text_file(fs::path(train_out) / "ablation.tsv", machine);
        std::fputs(rendered.c_str(), stdout);
      }
      return 0;
    }

    if (eval_cmd->parsed()) {
      echo_config("eval", {{"checkpoint", eval_ckpt}, {"data", eval_data}});
      const Checkpoint ckpt = load_checkpoint(eval_ckpt);
      const TrainerDataset data = TrainerDataset::load(eval_data);
      const RunReport report = evaluate_checkpoint(ckpt, data);
      std::fputs(report.to_text().c_str(), stdout);
      return 0;
    }

    if (grad_cmd->parsed()) {
      echo_config("gradcheck", {{"points", std::to_string(grad_points)}, {"seed", std::to_string(globals.seed)}});
      const auto results = run_gradcheck_suite(globals.seed, grad_points);
      bool ok = true;
      for (const auto& r : results) {
        std::printf("%-28s max_rel_err=%.3e tol=%.0e %s\n", r.name.c_str(), r.max_rel_err, r.tolerance,
                    r.pass ? "PASS" : "FAIL");
        ok = ok && r.pass;
      }
      if (!ok) throw RuntimeError("gradient checks failed");
      return 0;
    }

    if (verify_cmd->parsed()) {
      echo_config("verify", {{"data", verify_data}});
      const VerifyReport report = verify(verify_data);
      std::fputs(report.to_text().c_str(), stdout);
      return report.ok() ? 0 : 1;
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 2;
  }
  return 0;
}
