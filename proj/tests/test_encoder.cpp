#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "beam/encoder.hpp"
#include "beam/rng.hpp"

using namespace beam;

namespace {

// Plain-loop reference forward pass, written independently of the graph ops.
// Everything is row-major double matrices as flat vectors.
struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> v;
  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
};

Mat to_mat(const Var<double>& t) {
  Mat m;
  if (t.ndim() == 2) {
    m.rows = t.dim(0);
    m.cols = t.dim(1);
  } else {
    m.rows = 1;
    m.cols = t.dim(0);
  }
  m.v = t.values();
  return m;
}

Mat ref_matmul(const Mat& a, const Mat& b) {
  Mat c;
  c.rows = a.rows;
  c.cols = b.cols;
  c.v.assign(static_cast<size_t>(c.rows) * c.cols, 0.0);
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k)
      for (int j = 0; j < b.cols; ++j) c.at(i, j) += a.at(i, k) * b.at(k, j);
  return c;
}

void ref_add_row(Mat& m, const Mat& row) {
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) m.at(i, j) += row.at(0, j);
}

Mat ref_layer_norm(const Mat& x, const Mat& gain, const Mat& bias) {
  Mat out = x;
  for (int i = 0; i < x.rows; ++i) {
    double mu = 0.0;
    for (int j = 0; j < x.cols; ++j) mu += x.at(i, j);
    mu /= x.cols;
    double var = 0.0;
    for (int j = 0; j < x.cols; ++j) var += (x.at(i, j) - mu) * (x.at(i, j) - mu);
    var /= x.cols;
    const double istd = 1.0 / std::sqrt(var + 1e-5);
    for (int j = 0; j < x.cols; ++j) out.at(i, j) = gain.at(0, j) * (x.at(i, j) - mu) * istd + bias.at(0, j);
  }
  return out;
}

Mat ref_softmax_rows(const Mat& x) {
  Mat out = x;
  for (int i = 0; i < x.rows; ++i) {
    double mx = x.at(i, 0);
    for (int j = 1; j < x.cols; ++j) mx = std::max(mx, x.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < x.cols; ++j) {
      out.at(i, j) = std::exp(x.at(i, j) - mx);
      sum += out.at(i, j);
    }
    for (int j = 0; j < x.cols; ++j) out.at(i, j) /= sum;
  }
  return out;
}

std::vector<double> reference_encode(const std::vector<double>& data, int channels, int window,
                                     EncoderParams<double>& p) {
  const EncoderConfig& cfg = p.cfg;
  const int n_patches = window / cfg.patch_len;
  const int n_tokens = channels * n_patches;

  const Mat patch_w = to_mat(p.patch_w);
  const Mat patch_b = to_mat(p.patch_b);
  const Mat chan_emb = to_mat(p.chan_emb);
  const Mat pos_emb = to_mat(p.pos_emb);

  Mat tokens;
  tokens.rows = n_tokens;
  tokens.cols = cfg.d_model;
  tokens.v.assign(static_cast<size_t>(n_tokens) * cfg.d_model, 0.0);
  for (int c = 0; c < channels; ++c)
    for (int q = 0; q < n_patches; ++q) {
      const int row = c * n_patches + q;
      for (int j = 0; j < cfg.d_model; ++j) {
        double acc = patch_b.at(0, j);
        for (int k = 0; k < cfg.patch_len; ++k)
          acc += data[static_cast<size_t>(c) * window + q * cfg.patch_len + k] * patch_w.at(k, j);
        tokens.at(row, j) = acc + chan_emb.at(c, j) + pos_emb.at(q, j);
      }
    }

  const int d_head = cfg.d_model / cfg.n_heads;
  for (auto& layer : p.layers) {
    const Mat x1 = ref_layer_norm(tokens, to_mat(layer.ln1_g), to_mat(layer.ln1_b));
    Mat q = ref_matmul(x1, to_mat(layer.wq));
    Mat k = ref_matmul(x1, to_mat(layer.wk));
    Mat v = ref_matmul(x1, to_mat(layer.wv));
    ref_add_row(q, to_mat(layer.bq));
    ref_add_row(k, to_mat(layer.bk));
    ref_add_row(v, to_mat(layer.bv));

    Mat merged;
    merged.rows = n_tokens;
    merged.cols = cfg.d_model;
    merged.v.assign(tokens.v.size(), 0.0);
    for (int h = 0; h < cfg.n_heads; ++h) {
      Mat scores;
      scores.rows = n_tokens;
      scores.cols = n_tokens;
      scores.v.assign(static_cast<size_t>(n_tokens) * n_tokens, 0.0);
      for (int i = 0; i < n_tokens; ++i)
        for (int j = 0; j < n_tokens; ++j) {
          double acc = 0.0;
          for (int e = 0; e < d_head; ++e) acc += q.at(i, h * d_head + e) * k.at(j, h * d_head + e);
          scores.at(i, j) = acc / std::sqrt(static_cast<double>(d_head));
        }
      const Mat attn = ref_softmax_rows(scores);
      for (int i = 0; i < n_tokens; ++i)
        for (int e = 0; e < d_head; ++e) {
          double acc = 0.0;
          for (int j = 0; j < n_tokens; ++j) acc += attn.at(i, j) * v.at(j, h * d_head + e);
          merged.at(i, h * d_head + e) = acc;
        }
    }
    Mat attn_out = ref_matmul(merged, to_mat(layer.wo));
    ref_add_row(attn_out, to_mat(layer.bo));
    for (size_t i = 0; i < tokens.v.size(); ++i) tokens.v[i] += attn_out.v[i];

    const Mat x2 = ref_layer_norm(tokens, to_mat(layer.ln2_g), to_mat(layer.ln2_b));
    Mat hidden = ref_matmul(x2, to_mat(layer.w1));
    ref_add_row(hidden, to_mat(layer.b1));
    for (auto& h : hidden.v) h = h * 0.5 * (1.0 + std::erf(h * M_SQRT1_2));
    Mat ff = ref_matmul(hidden, to_mat(layer.w2));
    ref_add_row(ff, to_mat(layer.b2));
    for (size_t i = 0; i < tokens.v.size(); ++i) tokens.v[i] += ff.v[i];
  }

  const Mat final_norm = ref_layer_norm(tokens, to_mat(p.lnf_g), to_mat(p.lnf_b));
  std::vector<double> latent(cfg.d_model, 0.0);
  for (int i = 0; i < n_tokens; ++i)
    for (int j = 0; j < cfg.d_model; ++j) latent[j] += final_norm.at(i, j);
  for (auto& v : latent) v /= n_tokens;
  return latent;
}

EncoderConfig tiny_config() {
  EncoderConfig cfg;
  cfg.patch_len = 4;
  cfg.d_model = 4;
  cfg.n_layers = 1;
  cfg.n_heads = 1;
  cfg.d_ff = 8;
  cfg.max_channels = 3;
  cfg.max_patches = 2;
  return cfg;
}

}  // namespace

TEST_CASE("token count arithmetic") {
  EncoderConfig cfg;  // patch_len=200
  CHECK(token_count(32, 800, cfg) == 128);
  cfg.patch_len = 8;
  CHECK(token_count(1, 8, cfg) == 1);
  CHECK_THROWS_AS(token_count(2, 801, cfg), ValidationError);
}

TEST_CASE("encode produces a finite d_model latent") {
  const EncoderConfig cfg = tiny_config();
  auto params = EncoderParams<double>::init(cfg, 42);
  Rng rng(1);
  std::vector<double> data(3 * 8);
  for (auto& v : data) v = rng.gaussian();
  const auto latent = encode_window(data, 3, 8, params);
  CHECK(latent.shape() == Shape{4});
  for (double v : latent.values()) CHECK(std::isfinite(v));
}

TEST_CASE("graph encoder matches the plain-loop reference implementation") {
  const EncoderConfig cfg = tiny_config();
  auto params = EncoderParams<double>::init(cfg, 777);
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> data(3 * 8);
    for (auto& v : data) v = rng.gaussian();
    const auto latent = encode_window(data, 3, 8, params).values();
    const auto oracle = reference_encode(data, 3, 8, params);
    REQUIRE(latent.size() == oracle.size());
    for (size_t i = 0; i < latent.size(); ++i) CHECK(latent[i] == doctest::Approx(oracle[i]).epsilon(1e-10));
  }
}

TEST_CASE("zero input with zero patch projection is pure embeddings (frozen fixture)") {
  const EncoderConfig cfg = tiny_config();
  auto params = EncoderParams<double>::init(cfg, 2024);
  // Kill the temporal projection: token(c,q) = chan_emb[c] + pos_emb[q].
  params.patch_w = Var<double>::leaf({cfg.patch_len, cfg.d_model},
                                     std::vector<double>(static_cast<size_t>(cfg.patch_len) * cfg.d_model, 0.0));
  params.patch_b = Var<double>::leaf({cfg.d_model}, std::vector<double>(cfg.d_model, 0.0));
  // Simple embedding values for the hand trace.
  params.chan_emb = Var<double>::leaf({3, 4}, {0.1, 0.2, 0.3, 0.4, -0.4, 0.3, -0.2, 0.1, 0.5, 0.0, -0.5, 0.0});
  params.pos_emb = Var<double>::leaf({2, 4}, {0.05, -0.05, 0.1, -0.1, -0.2, 0.2, -0.1, 0.1});

  const std::vector<double> zeros(3 * 8, 0.0);
  const auto latent = encode_window(zeros, 3, 8, params).values();
  const auto oracle = reference_encode(zeros, 3, 8, params);
  for (size_t i = 0; i < latent.size(); ++i) CHECK(latent[i] == doctest::Approx(oracle[i]).epsilon(1e-12));

  // Determinism of the fixture itself.
  const auto again = encode_window(zeros, 3, 8, params).values();
  CHECK(latent == again);
}

TEST_CASE("permuting channels together with their embeddings leaves the latent unchanged") {
  const EncoderConfig cfg = tiny_config();
  auto params = EncoderParams<double>::init(cfg, 99);
  Rng rng(7);
  std::vector<double> data(3 * 8);
  for (auto& v : data) v = rng.gaussian();
  const auto base = encode_window(data, 3, 8, params).values();

  // Swap channels 0 and 2 in the data and the embedding table.
  std::vector<double> swapped(data);
  for (int i = 0; i < 8; ++i) std::swap(swapped[i], swapped[2 * 8 + i]);
  auto emb = params.chan_emb.values();
  for (int j = 0; j < 4; ++j) std::swap(emb[j], emb[2 * 4 + j]);
  params.chan_emb = Var<double>::leaf({3, 4}, emb);

  const auto permuted = encode_window(swapped, 3, 8, params).values();
  for (size_t i = 0; i < base.size(); ++i) CHECK(permuted[i] == doctest::Approx(base[i]).epsilon(1e-5));
}

TEST_CASE("encoding is independent of batch composition") {
  // Per-window graphs share no state, so a window encodes identically alone
  // or interleaved with others.
  const EncoderConfig cfg = tiny_config();
  auto params = EncoderParams<float>::init(cfg, 5);
  Rng rng(11);
  std::vector<float> a(3 * 8), b(3 * 8);
  for (auto& v : a) v = static_cast<float>(rng.gaussian());
  for (auto& v : b) v = static_cast<float>(rng.gaussian());

  const auto alone = encode_window(a, 3, 8, params).values();
  const auto other = encode_window(b, 3, 8, params).values();
  (void)other;
  const auto in_batch = encode_window(a, 3, 8, params).values();
  CHECK(alone == in_batch);
}

TEST_CASE("parameter count follows the closed form") {
  const EncoderConfig cfg = tiny_config();
  auto params = EncoderParams<double>::init(cfg, 1);
  const int64_t d = cfg.d_model;
  const int64_t expected = cfg.patch_len * d + d            // patch projection
                           + cfg.max_channels * d           // channel embeddings
                           + cfg.max_patches * d            // position embeddings
                           + cfg.n_layers * (4 * (d * d + d)                    // attention
                                             + 4 * d                            // two layer norms
                                             + d * cfg.d_ff + cfg.d_ff          // ff in
                                             + cfg.d_ff * d + d)                // ff out
                           + 2 * d;                         // final norm
  CHECK(params.param_count() == expected);
}

TEST_CASE("checkpoint round-trips encoder parameters") {
  namespace fs = std::filesystem;
  const EncoderConfig cfg = tiny_config();
  auto params = EncoderParams<float>::init(cfg, 31);
  const fs::path path = fs::temp_directory_path() / "beam_enc.ckpt";
  save_checkpoint(path, "{\"version\":1}", encoder_tensors(params));

  auto restored = EncoderParams<float>::init(cfg, 99);  // different init
  const Checkpoint ckpt = load_checkpoint(path);
  CHECK(ckpt.header_json == "{\"version\":1}");
  load_encoder_tensors(restored, ckpt);
  for (size_t i = 0; i < params.named().size(); ++i)
    CHECK(params.named()[i].second->values() == restored.named()[i].second->values());
}
