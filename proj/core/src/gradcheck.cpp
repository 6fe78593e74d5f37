#include "beam/gradcheck.hpp"

namespace beam {

using gradcheck_detail::BuildFn;
using gradcheck_detail::check_gradients;
using gradcheck_detail::contract;
using gradcheck_detail::fixed_weights;
using gradcheck_detail::LeafSpec;
using V = Var<double>;

std::vector<GradCheckResult> run_gradcheck_suite(uint64_t seed, int points) {
  std::vector<GradCheckResult> results;
  Rng rng(derive_seed(seed, fnv1a64("gradcheck")));
  auto check = [&](const std::string& name, const std::vector<LeafSpec>& specs, int64_t out_size,
                   const std::function<V(const std::vector<V>&, const std::vector<double>&)>& fn,
                   double tol = 1e-4) {
    const std::vector<double> w = fixed_weights(rng, out_size);
    results.push_back(check_gradients(
        name, specs, [&fn, w](const std::vector<V>& in) { return fn(in, w); }, rng, points, tol));
  };
  auto scalar_check = [&](const std::string& name, const std::vector<LeafSpec>& specs, const BuildFn& fn,
                          double tol = 1e-4) {
    results.push_back(check_gradients(name, specs, fn, rng, points, tol));
  };

  check("matmul", {{{3, 4}}, {{4, 2}}}, 6,
        [](const std::vector<V>& in, const std::vector<double>& w) { return contract(matmul(in[0], in[1]), w); });
  check("transpose", {{{3, 4}}}, 12,
        [](const std::vector<V>& in, const std::vector<double>& w) { return contract(transpose(in[0]), w); });
  check("add", {{{2, 3}}, {{2, 3}}}, 6,
        [](const std::vector<V>& in, const std::vector<double>& w) { return contract(add(in[0], in[1]), w); });
  check("add_rowvec", {{{3, 4}}, {{4}}}, 12, [](const std::vector<V>& in, const std::vector<double>& w) {
    return contract(add_rowvec(in[0], in[1]), w);
  });
  check("scale", {{{5}}}, 5,
        [](const std::vector<V>& in, const std::vector<double>& w) { return contract(scale(in[0], -1.7), w); });
  check("concat", {{{3}}, {{4}}, {{2}}}, 9, [](const std::vector<V>& in, const std::vector<double>& w) {
    return contract(concat<double>({in[0], in[1], in[2]}), w);
  });
  check("stack_rows", {{{4}}, {{4}}, {{4}}}, 12, [](const std::vector<V>& in, const std::vector<double>& w) {
    return contract(stack_rows<double>({in[0], in[1], in[2]}), w);
  });
  check("slice", {{{8}}}, 4,
        [](const std::vector<V>& in, const std::vector<double>& w) { return contract(slice(in[0], 2, 4), w); });
  check("slice_cols", {{{3, 6}}}, 9, [](const std::vector<V>& in, const std::vector<double>& w) {
    return contract(slice_cols(in[0], 1, 3), w);
  });
  check("concat_cols", {{{3, 2}}, {{3, 4}}}, 18, [](const std::vector<V>& in, const std::vector<double>& w) {
    return contract(concat_cols<double>({in[0], in[1]}), w);
  });
  check("mean_over_axis0", {{{4, 3}}}, 3, [](const std::vector<V>& in, const std::vector<double>& w) {
    return contract(mean_over_axis(in[0], 0), w);
  });
  check("mean_over_axis1", {{{4, 3}}}, 4, [](const std::vector<V>& in, const std::vector<double>& w) {
    return contract(mean_over_axis(in[0], 1), w);
  });
  scalar_check("mean_1d", {{{6}}}, [](const std::vector<V>& in) { return mean_over_axis(in[0]); });
  check("softmax", {{{3, 5}}}, 15,
        [](const std::vector<V>& in, const std::vector<double>& w) { return contract(softmax(in[0]), w); });
  check("layer_norm", {{{3, 6}}, {{6}, 0.5, 1.5}, {{6}}}, 18,
        [](const std::vector<V>& in, const std::vector<double>& w) {
          return contract(layer_norm(in[0], in[1], in[2]), w);
        });
  check("gelu", {{{2, 5}, -2.0, 2.0}}, 10,
        [](const std::vector<V>& in, const std::vector<double>& w) { return contract(gelu(in[0]), w); });
  check("l2_normalize", {{{3, 4}, 0.2, 1.0}}, 12,
        [](const std::vector<V>& in, const std::vector<double>& w) { return contract(l2_normalize(in[0]), w); });
  scalar_check("dot", {{{6}}, {{6}}}, [](const std::vector<V>& in) { return dot(in[0], in[1]); });
  check("exp", {{{5}}}, 5,
        [](const std::vector<V>& in, const std::vector<double>& w) { return contract(exp(in[0]), w); });
  check("log", {{{5}, 0.2, 2.0}}, 5,
        [](const std::vector<V>& in, const std::vector<double>& w) { return contract(log(in[0]), w); });
  // Points away from zero keep |.| differentiable and norms well-conditioned.
  check("abs", {{{5}, 0.2, 1.0}}, 5,
        [](const std::vector<V>& in, const std::vector<double>& w) { return contract(abs_val(in[0]), w); });
  check("divide", {{{4}}, {{4}, 0.5, 1.5}}, 4, [](const std::vector<V>& in, const std::vector<double>& w) {
    return contract(divide(in[0], in[1]), w);
  });
  scalar_check("cosine_similarity", {{{5}, 0.2, 1.0}, {{5}, 0.2, 1.0}},
               [](const std::vector<V>& in) { return cosine_similarity(in[0], in[1]); });
  check("reshape", {{{6}}}, 6,
        [](const std::vector<V>& in, const std::vector<double>& w) { return contract(reshape(in[0], {2, 3}), w); });

  // Composed losses.
  scalar_check("loss_fusion", {{{8}, 0.2, 1.0}, {{8}, 0.2, 1.0}},
               [](const std::vector<V>& in) { return fusion_loss(in[0], in[1]); });
  {
    const std::vector<int> positives = {1, 0, 3, 2, 5, 4};
    scalar_check("loss_info_nce", {{{6, 4}, -1.0, 1.0}}, [positives](const std::vector<V>& in) {
      return info_nce(l2_normalize(in[0]), positives, 0.2);
    });
  }
  {
    const std::vector<int> labels = {0, 1, 1, 0, 1};
    scalar_check("loss_cross_entropy", {{{5, 2}, -2.0, 2.0}},
                 [labels](const std::vector<V>& in) { return cross_entropy_with_logits(in[0], labels); });
  }
  {
    const std::vector<int> positives = {1, 0, 3, 2};
    scalar_check("loss_fusion_plus_contrast", {{{8}, 0.2, 1.0}, {{8}, 0.2, 1.0}, {{4, 6}, -1.0, 1.0}},
                 [positives](const std::vector<V>& in) {
                   const V fused = fusion_loss(in[0], in[1]);
                   const V contrast_term = info_nce(l2_normalize(in[2]), positives, 0.5);
                   return add(fused, contrast_term);
                 });
  }

  // Tiny end-to-end encoder: gradient of a scalar head with respect to every
  // parameter (the window itself enters as constant data).
  {
    EncoderConfig cfg;
    cfg.patch_len = 4;
    cfg.d_model = 4;
    cfg.n_layers = 1;
    cfg.n_heads = 1;
    cfg.d_ff = 8;
    cfg.max_channels = 2;
    cfg.max_patches = 2;
    const int channels = 2, window = 8;
    EncoderParams<double> params = EncoderParams<double>::init(cfg, derive_seed(seed, fnv1a64("e2e")));
    auto named = params.named();
    std::vector<LeafSpec> specs;
    for (auto& [name, v] : named) specs.push_back({v->shape(), -0.5, 0.5});
    std::vector<double> head(cfg.d_model);
    std::vector<double> window_data(static_cast<size_t>(channels) * window);
    Rng fixture_rng(derive_seed(seed, fnv1a64("e2e-fixture")));
    for (auto& x : head) x = fixture_rng.uniform(-1.0, 1.0);
    for (auto& x : window_data) x = fixture_rng.uniform(-1.0, 1.0);
    results.push_back(check_gradients(
        "encoder_end_to_end", specs,
        [&](const std::vector<V>& in) {
          EncoderParams<double> p = params;
          auto target = p.named();
          for (size_t i = 0; i < in.size(); ++i) *target[i].second = in[i];
          const V latent = encode_window(window_data, channels, window, p);
          return dot(latent, V::constant({cfg.d_model}, head));
        },
        rng, std::max(3, points / 5), 1e-3));
  }

  return results;
}

}  // namespace beam
