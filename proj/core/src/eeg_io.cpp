#include "beam/eeg_io.hpp"

#include <cstdint>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace beam {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Payloads are raw float32. The build targets little-endian machines; a
// byte-order check at startup would be the place to extend this.
static_assert(sizeof(float) == 4, "float must be 32-bit");

void write_floats(const fs::path& path, const std::vector<float>& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * 4));
  if (!out) throw RuntimeError("short write to '" + path.string() + "'");
}

std::vector<float> read_floats(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw RuntimeError("cannot open '" + path.string() + "'");
  const std::streamsize bytes = in.tellg();
  if (bytes % 4 != 0) throw ValidationError("payload '" + path.string() + "' is not a whole number of float32s");
  std::vector<float> data(static_cast<size_t>(bytes / 4));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(data.data()), bytes);
  if (!in) throw RuntimeError("short read from '" + path.string() + "'");
  return data;
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing sidecar '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed sidecar '" + path.string() + "': " + e.what());
  }
  return j;
}

void store_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw RuntimeError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << "\n";
}

}  // namespace

void write_recording(const Recording& rec, const fs::path& dir) {
  rec.validate();
  fs::create_directories(dir);
  json clips = json::array();
  for (const EventClip& c : rec.clips)
    clips.push_back({{"view", view_name(c.view)}, {"start_sample", c.start_sample}, {"end_sample", c.end_sample}});
  json side = {
      {"subject_id", rec.subject_id}, {"sample_rate_hz", rec.sample_rate_hz},
      {"channels", rec.channels},     {"clips", clips},
      {"willingness", rec.willingness},
  };
  store_json(dir / (rec.subject_id + ".json"), side);
  write_floats(dir / (rec.subject_id + ".eeg"), rec.data);
}

Recording read_recording(const fs::path& dir, const std::string& subject_id) {
  const json side = load_json(dir / (subject_id + ".json"));
  Recording rec;
  rec.subject_id = side.at("subject_id").get<std::string>();
  rec.sample_rate_hz = side.at("sample_rate_hz").get<double>();
  rec.channels = side.at("channels").get<std::vector<std::string>>();
  rec.willingness = side.at("willingness").get<int>();
  for (const json& c : side.at("clips")) {
    EventClip clip;
    clip.view = view_from_name(c.at("view").get<std::string>());
    clip.start_sample = c.at("start_sample").get<int64_t>();
    clip.end_sample = c.at("end_sample").get<int64_t>();
    rec.clips.push_back(clip);
  }
  rec.data = read_floats(dir / (subject_id + ".eeg"));
  const size_t c = rec.channels.size();
  if (c == 0 || rec.data.size() % c != 0)
    throw ValidationError("payload length " + std::to_string(rec.data.size()) +
                          " does not factor as C x T with C=" + std::to_string(c) + " for '" + subject_id + "'");
  rec.validate();
  return rec;
}

void write_manifest(const fs::path& dir, const std::vector<std::string>& subject_ids) {
  fs::create_directories(dir);
  std::ofstream out(dir / "manifest", std::ios::trunc);
  if (!out) throw RuntimeError("cannot write manifest in '" + dir.string() + "'");
  for (const auto& id : subject_ids) out << id << "\n";
}

std::vector<std::string> read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest");
  if (!in) throw ValidationError("missing manifest in '" + dir.string() + "'");
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ids.push_back(line);
  }
  require(!ids.empty(), "empty manifest in '" + dir.string() + "'");
  return ids;
}

void write_subject_samples(const SubjectSamples& s, const fs::path& dir) {
  require(!s.samples.empty(), "no samples to write for '" + s.subject_id + "'");
  const int c = s.samples.front().channels;
  const int w = s.samples.front().window;
  fs::create_directories(dir);
  json views = json::array();
  std::vector<float> payload;
  payload.reserve(s.samples.size() * static_cast<size_t>(c) * w);
  for (const Sample& smp : s.samples) {
    require(smp.channels == c && smp.window == w, "mixed sample shapes for '" + s.subject_id + "'");
    views.push_back(view_name(smp.view));
    payload.insert(payload.end(), smp.data.begin(), smp.data.end());
  }
  json side = {
      {"subject_id", s.subject_id},
      {"sample_rate_hz", s.sample_rate_hz},
      {"willingness", s.willingness},
      {"label", label_name(s.label)},
      {"n_channels", c},
      {"window", w},
      {"views", views},
  };
  store_json(dir / (s.subject_id + ".json"), side);
  write_floats(dir / (s.subject_id + ".smp"), payload);
}

SubjectSamples read_subject_samples(const fs::path& dir, const std::string& subject_id) {
  const json side = load_json(dir / (subject_id + ".json"));
  SubjectSamples s;
  s.subject_id = side.at("subject_id").get<std::string>();
  s.sample_rate_hz = side.at("sample_rate_hz").get<double>();
  s.willingness = side.at("willingness").get<int>();
  const std::string label = side.at("label").get<std::string>();
  require(label == "Low" || label == "High", "unknown label '" + label + "' for '" + subject_id + "'");
  s.label = label == "Low" ? Label::Low : Label::High;
  const int c = side.at("n_channels").get<int>();
  const int w = side.at("window").get<int>();
  const auto views = side.at("views").get<std::vector<std::string>>();
  const std::vector<float> payload = read_floats(dir / (subject_id + ".smp"));
  const size_t per = static_cast<size_t>(c) * w;
  if (per == 0 || payload.size() != views.size() * per)
    throw ValidationError("sample payload length mismatch for '" + subject_id + "'");
  for (size_t i = 0; i < views.size(); ++i) {
    Sample smp;
    smp.view = view_from_name(views[i]);
    smp.subject_id = s.subject_id;
    smp.channels = c;
    smp.window = w;
    smp.label = s.label;
    smp.data.assign(payload.begin() + i * per, payload.begin() + (i + 1) * per);
    s.samples.push_back(std::move(smp));
  }
  return s;
}

void prepare_output_dir(const fs::path& dir, bool overwrite) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!overwrite)
      throw ValidationError("output directory '" + dir.string() + "' is not empty (pass --overwrite to replace)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

}  // namespace beam
