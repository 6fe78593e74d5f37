#pragma once

// Patch-based transformer over C x W windows. Each 1-second patch of each
// channel becomes one token: a linear projection of the patch plus a learned
// channel embedding and a learned temporal position embedding. Tokens run
// through pre-norm self-attention blocks and are mean-pooled into one latent
// per window.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "beam/checkpoint.hpp"
#include "beam/recording.hpp"
#include "beam/rng.hpp"
#include "beam/tensor.hpp"

namespace beam {

struct EncoderConfig {
  int patch_len = 200;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 128;
  int max_channels = 32;
  int max_patches = 16;
  bool shared_encoder = true;  // one weight set serves both views

  void validate() const {
    require(patch_len >= 1 && d_model >= 2 && n_layers >= 1 && n_heads >= 1 && d_ff >= 1,
            "encoder config fields must be positive");
    require(d_model % n_heads == 0, "d_model must be divisible by n_heads");
    require(d_model % 2 == 0, "d_model must be even (fusion splits latents in half)");
    require(max_channels >= 1 && max_patches >= 1, "embedding capacities must be positive");
  }
};

template <class S>
struct EncoderParams {
  EncoderConfig cfg;

  Var<S> patch_w;   // patch_len x d_model
  Var<S> patch_b;   // d_model
  Var<S> chan_emb;  // max_channels x d_model
  Var<S> pos_emb;   // max_patches x d_model

  struct Layer {
    Var<S> ln1_g, ln1_b;
    Var<S> wq, bq, wk, bk, wv, bv, wo, bo;
    Var<S> ln2_g, ln2_b;
    Var<S> w1, b1;  // d_model x d_ff
    Var<S> w2, b2;  // d_ff x d_model
  };
  std::vector<Layer> layers;
  Var<S> lnf_g, lnf_b;

  /// Uniform(-sqrt(6/(fan_in+fan_out)), +...) weights, zero biases, unit
  /// layer-norm gains.
  static EncoderParams init(const EncoderConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(derive_seed(seed, fnv1a64("encoder-init")));
    auto uniform2d = [&rng](int rows, int cols) {
      const double limit = std::sqrt(6.0 / (rows + cols));
      std::vector<S> v(static_cast<size_t>(rows) * cols);
      for (auto& x : v) x = static_cast<S>(rng.uniform(-limit, limit));
      return Var<S>::leaf({rows, cols}, std::move(v));
    };
    auto fill1d = [](int n, S value) { return Var<S>::leaf({n}, std::vector<S>(n, value)); };

    EncoderParams p;
    p.cfg = cfg;
    p.patch_w = uniform2d(cfg.patch_len, cfg.d_model);
    p.patch_b = fill1d(cfg.d_model, S(0));
    p.chan_emb = uniform2d(cfg.max_channels, cfg.d_model);
    p.pos_emb = uniform2d(cfg.max_patches, cfg.d_model);
    for (int l = 0; l < cfg.n_layers; ++l) {
      Layer layer;
      layer.ln1_g = fill1d(cfg.d_model, S(1));
      layer.ln1_b = fill1d(cfg.d_model, S(0));
      layer.wq = uniform2d(cfg.d_model, cfg.d_model);
      layer.bq = fill1d(cfg.d_model, S(0));
      layer.wk = uniform2d(cfg.d_model, cfg.d_model);
      layer.bk = fill1d(cfg.d_model, S(0));
      layer.wv = uniform2d(cfg.d_model, cfg.d_model);
      layer.bv = fill1d(cfg.d_model, S(0));
      layer.wo = uniform2d(cfg.d_model, cfg.d_model);
      layer.bo = fill1d(cfg.d_model, S(0));
      layer.ln2_g = fill1d(cfg.d_model, S(1));
      layer.ln2_b = fill1d(cfg.d_model, S(0));
      layer.w1 = uniform2d(cfg.d_model, cfg.d_ff);
      layer.b1 = fill1d(cfg.d_ff, S(0));
      layer.w2 = uniform2d(cfg.d_ff, cfg.d_model);
      layer.b2 = fill1d(cfg.d_model, S(0));
      p.layers.push_back(std::move(layer));
    }
    p.lnf_g = fill1d(cfg.d_model, S(1));
    p.lnf_b = fill1d(cfg.d_model, S(0));
    return p;
  }

  /// Stable name -> tensor listing; fixes optimizer and checkpoint order.
  std::vector<std::pair<std::string, Var<S>*>> named() {
    std::vector<std::pair<std::string, Var<S>*>> out = {
        {"patch.w", &patch_w}, {"patch.b", &patch_b}, {"chan_emb", &chan_emb}, {"pos_emb", &pos_emb}};
    for (size_t l = 0; l < layers.size(); ++l) {
      const std::string prefix = "layer" + std::to_string(l) + ".";
      Layer& L = layers[l];
      out.emplace_back(prefix + "ln1.g", &L.ln1_g);
      out.emplace_back(prefix + "ln1.b", &L.ln1_b);
      out.emplace_back(prefix + "attn.wq", &L.wq);
      out.emplace_back(prefix + "attn.bq", &L.bq);
      out.emplace_back(prefix + "attn.wk", &L.wk);
      out.emplace_back(prefix + "attn.bk", &L.bk);
      out.emplace_back(prefix + "attn.wv", &L.wv);
      out.emplace_back(prefix + "attn.bv", &L.bv);
      out.emplace_back(prefix + "attn.wo", &L.wo);
      out.emplace_back(prefix + "attn.bo", &L.bo);
      out.emplace_back(prefix + "ln2.g", &L.ln2_g);
      out.emplace_back(prefix + "ln2.b", &L.ln2_b);
      out.emplace_back(prefix + "ff.w1", &L.w1);
      out.emplace_back(prefix + "ff.b1", &L.b1);
      out.emplace_back(prefix + "ff.w2", &L.w2);
      out.emplace_back(prefix + "ff.b2", &L.b2);
    }
    out.emplace_back("ln_f.g", &lnf_g);
    out.emplace_back("ln_f.b", &lnf_b);
    return out;
  }

  int64_t param_count() {
    int64_t n = 0;
    for (auto& [name, v] : named()) n += v->size();
    return n;
  }
};

/// Token count for a C x W window: C * (W / patch_len).
inline int token_count(int channels, int window, const EncoderConfig& cfg) {
  require(window % cfg.patch_len == 0, "window " + std::to_string(window) +
                                           " is not divisible by patch length " + std::to_string(cfg.patch_len));
  return channels * (window / cfg.patch_len);
}

/// Tokens for one window: rows ordered channel-major (all patches of channel
/// 0, then channel 1, ...). Channel/position embeddings are gathered through
/// constant one-hot matrices so gradients flow into the embedding tables.
template <class S>
Var<S> patchify(const std::vector<S>& data, int channels, int window, const EncoderParams<S>& p) {
  const EncoderConfig& cfg = p.cfg;
  const int n_patches = window / cfg.patch_len;
  const int n_tokens = token_count(channels, window, cfg);
  require(channels <= cfg.max_channels, "window has more channels than the embedding table");
  require(n_patches <= cfg.max_patches, "window has more patches than the embedding table");
  require(static_cast<int64_t>(data.size()) == static_cast<int64_t>(channels) * window,
          "window payload does not match C x W");

  std::vector<S> patches(static_cast<size_t>(n_tokens) * cfg.patch_len);
  std::vector<S> chan_sel(static_cast<size_t>(n_tokens) * cfg.max_channels, S(0));
  std::vector<S> pos_sel(static_cast<size_t>(n_tokens) * cfg.max_patches, S(0));
  for (int c = 0; c < channels; ++c) {
    for (int q = 0; q < n_patches; ++q) {
      const int row = c * n_patches + q;
      const S* src = data.data() + static_cast<int64_t>(c) * window + static_cast<int64_t>(q) * cfg.patch_len;
      std::copy_n(src, cfg.patch_len, patches.data() + static_cast<int64_t>(row) * cfg.patch_len);
      chan_sel[static_cast<int64_t>(row) * cfg.max_channels + c] = S(1);
      pos_sel[static_cast<int64_t>(row) * cfg.max_patches + q] = S(1);
    }
  }
  const Var<S> patch_mat = Var<S>::constant({n_tokens, cfg.patch_len}, std::move(patches));
  const Var<S> chan_mat = Var<S>::constant({n_tokens, cfg.max_channels}, std::move(chan_sel));
  const Var<S> pos_mat = Var<S>::constant({n_tokens, cfg.max_patches}, std::move(pos_sel));

  Var<S> tokens = add_rowvec(matmul(patch_mat, p.patch_w), p.patch_b);
  tokens = add(tokens, matmul(chan_mat, p.chan_emb));
  tokens = add(tokens, matmul(pos_mat, p.pos_emb));
  return tokens;
}

template <class S>
Var<S> multi_head_attention(const Var<S>& x, const typename EncoderParams<S>::Layer& L, int n_heads) {
  const int d = x.dim(1);
  const int d_head = d / n_heads;
  const Var<S> q = add_rowvec(matmul(x, L.wq), L.bq);
  const Var<S> k = add_rowvec(matmul(x, L.wk), L.bk);
  const Var<S> v = add_rowvec(matmul(x, L.wv), L.bv);
  std::vector<Var<S>> heads;
  heads.reserve(n_heads);
  for (int h = 0; h < n_heads; ++h) {
    const Var<S> qh = slice_cols(q, h * d_head, d_head);
    const Var<S> kh = slice_cols(k, h * d_head, d_head);
    const Var<S> vh = slice_cols(v, h * d_head, d_head);
    const Var<S> scores = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(d_head)));
    heads.push_back(matmul(softmax(scores), vh));
  }
  return add_rowvec(matmul(concat_cols(heads), L.wo), L.bo);
}

/// Window -> d_model latent, differentiable through every parameter.
template <class S>
Var<S> encode_window(const std::vector<S>& data, int channels, int window, const EncoderParams<S>& p) {
  Var<S> h = patchify(data, channels, window, p);
  for (const auto& L : p.layers) {
    h = add(h, multi_head_attention(layer_norm(h, L.ln1_g, L.ln1_b), L, p.cfg.n_heads));
    const Var<S> ff =
        add_rowvec(matmul(gelu(add_rowvec(matmul(layer_norm(h, L.ln2_g, L.ln2_b), L.w1), L.b1)), L.w2), L.b2);
    h = add(h, ff);
  }
  h = layer_norm(h, p.lnf_g, p.lnf_b);
  return mean_over_axis(h, 0);
}

template <class S>
Var<S> encode_sample(const Sample& s, const EncoderParams<S>& p) {
  std::vector<S> data(s.data.begin(), s.data.end());
  return encode_window(data, s.channels, s.window, p);
}

/// Checkpoint adapters (tensors are stored float32 regardless of S).

template <class S>
std::vector<NamedTensor> encoder_tensors(EncoderParams<S>& p) {
  std::vector<NamedTensor> out;
  for (auto& [name, v] : p.named()) {
    NamedTensor t;
    t.name = name;
    t.shape = v->shape();
    t.values.assign(v->values().begin(), v->values().end());
    out.push_back(std::move(t));
  }
  return out;
}

template <class S>
void load_encoder_tensors(EncoderParams<S>& p, const Checkpoint& ckpt) {
  for (auto& [name, v] : p.named()) {
    const NamedTensor& t = ckpt.find(name);
    require(t.shape == v->shape(), "checkpoint tensor '" + name + "' has shape " + shape_str(t.shape) +
                                       ", expected " + shape_str(v->shape()));
    std::vector<S> vals(t.values.begin(), t.values.end());
    *v = Var<S>::leaf(t.shape, std::move(vals));
  }
}

}  // namespace beam
