#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

using namespace std;
namespace fs = std::filesystem;

namespace {

const char* kCli = BEAM_CLI_PATH;

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run(const std::string& args) {
  const fs::path out_file = fs::temp_directory_path() / "beam_cli_out.txt";
  const std::string cmd = std::string(kCli) + " " + args + " >" + out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out_file);
  std::string output((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return {WEXITSTATUS(status), output};
}

fs::path temp_dir(const char* tag) {
  const fs::path dir = fs::temp_directory_path() / (std::string("beam_cli_") + tag);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("gradcheck subcommand passes and exits zero") {
  const RunResult r = run("gradcheck --points 3");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("FAIL") == std::string::npos);
  CHECK(r.output.find("config: subcommand=gradcheck") != std::string::npos);
}

TEST_CASE("train without required flags exits 1 with usage output") {
  const RunResult r = run("train --arm em");
  CHECK(r.exit_code == 1);
  CHECK(!r.output.empty());
}

TEST_CASE("unknown flags are rejected") {
  const RunResult r = run("synth --what 3 --out /tmp/beam_cli_nowhere");
  CHECK(r.exit_code == 1);
}

TEST_CASE("full pipeline: synth, verify, preprocess, train, eval, report") {
  const fs::path raw = temp_dir("raw");
  const fs::path samples = temp_dir("samples");
  const fs::path aug = temp_dir("aug");
  const fs::path runs = temp_dir("runs");

  RunResult r = run("--seed 9 synth --subjects 6 --channels 4 --rate 200 --effect 3 "
                    "--tom-clips 6 --tom-clips 6 --em-clips 5 --em-clips 5 --out " +
                    raw.string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("config: subcommand=synth") != std::string::npos);

  // Refusal to clobber without --overwrite.
  r = run("--seed 9 synth --subjects 6 --channels 4 --rate 200 --out " + raw.string());
  CHECK(r.exit_code == 1);

  r = run("verify --data " + raw.string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("verify: PASS") != std::string::npos);

  r = run("preprocess --in " + raw.string() + " --out " + samples.string() +
          " --band 0.1:75 --rate 200 --window 4 --stride 1");
  REQUIRE(r.exit_code == 0);

  r = run("--seed 4 augment --in " + samples.string() + " --out " + aug.string() + " --std 0.001");
  REQUIRE(r.exit_code == 0);

  r = run("--seed 3 train --data " + samples.string() +
          " --arm tom+em --fusion --contrast --seeds 1 --epochs 2 --batch 4 "
          "--d-model 4 --layers 1 --heads 1 --d-ff 8 --patch 400 --out " +
          runs.string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("aggregate level=sample") != std::string::npos);
  CHECK(fs::exists(runs / "report.txt"));
  CHECK(fs::exists(runs / "seed1.ckpt"));

  r = run("eval --checkpoint " + (runs / "seed1.ckpt").string() + " --data " + samples.string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("mode=eval") != std::string::npos);
}
