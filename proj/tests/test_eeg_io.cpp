#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "beam/eeg_io.hpp"
#include "beam/rng.hpp"

using namespace beam;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  const fs::path dir = fs::temp_directory_path() / (std::string("beam_io_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Recording random_recording(Rng& rng, const std::string& id, int channels, int64_t samples) {
  Recording rec;
  rec.subject_id = id;
  rec.sample_rate_hz = 1000.0;
  rec.willingness = 1 + static_cast<int>(rng.uniform_int(4));
  for (int c = 0; c < channels; ++c) rec.channels.push_back("ch" + std::to_string(c));
  rec.data.resize(static_cast<size_t>(channels) * samples);
  for (auto& v : rec.data) v = static_cast<float>(rng.gaussian());
  rec.clips.push_back({View::ToM, 0, samples / 2});
  rec.clips.push_back({View::EM, samples / 2, samples});
  return rec;
}

}  // namespace

TEST_CASE("write then read is the identity, bit-exact, on random recordings") {
  const fs::path dir = temp_dir("roundtrip");
  Rng rng(123);
  for (int trial = 0; trial < 8; ++trial) {
    const int channels = 1 + static_cast<int>(rng.uniform_int(6));
    const int64_t samples = 20 + static_cast<int64_t>(rng.uniform_int(300));
    const Recording rec = random_recording(rng, "r" + std::to_string(trial), channels, samples);
    write_recording(rec, dir);
    const Recording back = read_recording(dir, rec.subject_id);
    CHECK(back.subject_id == rec.subject_id);
    CHECK(back.sample_rate_hz == rec.sample_rate_hz);
    CHECK(back.channels == rec.channels);
    CHECK(back.willingness == rec.willingness);
    REQUIRE(back.clips.size() == rec.clips.size());
    for (size_t i = 0; i < rec.clips.size(); ++i) {
      CHECK(back.clips[i].view == rec.clips[i].view);
      CHECK(back.clips[i].start_sample == rec.clips[i].start_sample);
      CHECK(back.clips[i].end_sample == rec.clips[i].end_sample);
    }
    CHECK(back.data == rec.data);  // float32 payload must survive bit-exactly
  }
}

TEST_CASE("payload byte length is exactly C*T*4") {
  const fs::path dir = temp_dir("bytes");
  Rng rng(7);
  const Recording rec = random_recording(rng, "sz", 32, 1000);
  write_recording(rec, dir);
  CHECK(fs::file_size(dir / "sz.eeg") == 32 * 1000 * 4);
}

TEST_CASE("declared shape must match the payload length") {
  const fs::path dir = temp_dir("mismatch");
  Rng rng(9);
  Recording rec = random_recording(rng, "bad", 2, 100);
  write_recording(rec, dir);
  // Truncate the payload to 199 floats.
  fs::resize_file(dir / "bad.eeg", 199 * 4);
  CHECK_THROWS_AS(read_recording(dir, "bad"), ValidationError);
}

TEST_CASE("clip beyond the recording end is rejected") {
  const fs::path dir = temp_dir("cliprange");
  Rng rng(11);
  Recording rec = random_recording(rng, "clip", 2, 5000);
  write_recording(rec, dir);
  // Rewrite the sidecar with an out-of-range clip end.
  std::ifstream in(dir / "clip.json");
  std::string side((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const size_t at = side.find("5000");
  REQUIRE(at != std::string::npos);
  side.replace(at, 4, "10000");
  std::ofstream out(dir / "clip.json", std::ios::trunc);
  out << side;
  out.close();
  CHECK_THROWS_AS(read_recording(dir, "clip"), ValidationError);
}

TEST_CASE("missing sidecar and unknown view tag are rejected") {
  const fs::path dir = temp_dir("sidecar");
  CHECK_THROWS_AS(read_recording(dir, "nope"), ValidationError);
  CHECK_THROWS_AS(view_from_name("Wat"), ValidationError);
}

TEST_CASE("zero-channel recording violates its invariant before write") {
  Recording rec;
  rec.subject_id = "empty";
  rec.sample_rate_hz = 100.0;
  rec.willingness = 2;
  CHECK_THROWS_AS(write_recording(rec, temp_dir("zero")), ValidationError);
}

TEST_CASE("median_split hand cases") {
  CHECK(median_split({1, 2, 2, 3, 4}) ==
        std::vector<Label>{Label::Low, Label::Low, Label::Low, Label::High, Label::High});
  CHECK(median_split({1, 1, 1, 1}) == std::vector<Label>{Label::Low, Label::Low, Label::Low, Label::Low});
  CHECK(median_split({1, 4}) == std::vector<Label>{Label::Low, Label::High});
  CHECK(score_median({1, 4}) == doctest::Approx(2.5));
}

TEST_CASE("median_split errors") {
  CHECK_THROWS_AS(median_split({}), ValidationError);
  CHECK_THROWS_AS(median_split({1, 5}), ValidationError);
  CHECK_THROWS_AS(median_split({0}), ValidationError);
}

TEST_CASE("median_split is permutation invariant and partitions the cohort") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 1 + rng.uniform_int(40);
    std::vector<int> scores(n);
    for (auto& s : scores) s = 1 + static_cast<int>(rng.uniform_int(4));
    const auto labels = median_split(scores);

    size_t low = 0, high = 0;
    for (Label l : labels) (l == Label::Low ? low : high)++;
    CHECK(low + high == n);

    // Permute scores; labels must permute correspondingly.
    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<int> shuffled(n);
    for (size_t i = 0; i < n; ++i) shuffled[i] = scores[perm[i]];
    const auto shuffled_labels = median_split(shuffled);
    for (size_t i = 0; i < n; ++i) CHECK(shuffled_labels[i] == labels[perm[i]]);
  }
}

TEST_CASE("subject samples round-trip through the samples format") {
  const fs::path dir = temp_dir("samples");
  Rng rng(31);
  SubjectSamples ss;
  ss.subject_id = "s0";
  ss.sample_rate_hz = 200.0;
  ss.willingness = 3;
  ss.label = Label::High;
  for (int i = 0; i < 5; ++i) {
    Sample s;
    s.view = i % 2 == 0 ? View::ToM : View::EM;
    s.subject_id = "s0";
    s.channels = 3;
    s.window = 16;
    s.label = Label::High;
    s.data.resize(48);
    for (auto& v : s.data) v = static_cast<float>(rng.gaussian());
    ss.samples.push_back(std::move(s));
  }
  write_subject_samples(ss, dir);
  write_manifest(dir, {"s0"});
  const SubjectSamples back = read_subject_samples(dir, "s0");
  CHECK(back.label == Label::High);
  REQUIRE(back.samples.size() == 5);
  for (size_t i = 0; i < 5; ++i) {
    CHECK(back.samples[i].view == ss.samples[i].view);
    CHECK(back.samples[i].data == ss.samples[i].data);
  }
  CHECK(read_manifest(dir) == std::vector<std::string>{"s0"});
}

TEST_CASE("prepare_output_dir refuses to clobber without overwrite") {
  const fs::path dir = temp_dir("clobber");
  std::ofstream(dir / "existing.txt") << "x";
  CHECK_THROWS_AS(prepare_output_dir(dir, false), ValidationError);
  prepare_output_dir(dir, true);
  CHECK(fs::is_empty(dir));
}
