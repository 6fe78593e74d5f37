#pragma once

#include <vector>

#include "beam/tensor.hpp"

namespace beam {

/// Mean softmax cross-entropy of (B x K) logits against integer labels,
/// composed from primitives so it stays differentiable. Row maxima are
/// subtracted as detached constants for stability; the identity
/// log_softmax(x) = (x - c) - log(sum(exp(x - c))) holds for any c.
template <class S>
Var<S> cross_entropy_with_logits(const Var<S>& logits, const std::vector<int>& labels) {
  require(logits.ndim() == 2, "cross_entropy expects a (B x K) logit matrix");
  const int b = logits.dim(0);
  const int k = logits.dim(1);
  require(static_cast<int>(labels.size()) == b, "label count does not match batch size");
  for (int y : labels) require(y >= 0 && y < k, "label out of range");

  std::vector<S> row_max(static_cast<size_t>(b) * k);
  for (int i = 0; i < b; ++i) {
    S mx = logits.values()[static_cast<int64_t>(i) * k];
    for (int j = 1; j < k; ++j) mx = std::max(mx, logits.values()[static_cast<int64_t>(i) * k + j]);
    for (int j = 0; j < k; ++j) row_max[static_cast<int64_t>(i) * k + j] = mx;
  }
  const Var<S> shifted = sub(logits, Var<S>::constant({b, k}, std::move(row_max)));
  const Var<S> log_row_sum = log(scale(mean_over_axis(exp(shifted), 1), static_cast<double>(k)));

  std::vector<S> onehot(static_cast<size_t>(b) * k, S(0));
  for (int i = 0; i < b; ++i) onehot[static_cast<int64_t>(i) * k + labels[i]] = S(1);
  const Var<S> picked = dot(reshape(shifted, {b * k}), Var<S>::constant({b * k}, std::move(onehot)));

  std::vector<S> ones(b, S(1));
  const Var<S> sum_log = dot(log_row_sum, Var<S>::constant({b}, std::move(ones)));
  return scale(sub(sum_log, picked), 1.0 / b);
}

/// L = L_CE + lambda_fusion * L_fusion + lambda_contrast * L_contrast.
/// Pass undefined Vars for inactive terms; they contribute exactly zero
/// (no graph edge is added at all).
template <class S>
Var<S> total_loss(const Var<S>& ce, const Var<S>& fusion, const Var<S>& contrast, double lambda_fusion,
                  double lambda_contrast) {
  Var<S> total = ce;
  if (fusion.defined() && lambda_fusion != 0.0) total = add(total, scale(fusion, lambda_fusion));
  if (contrast.defined() && lambda_contrast != 0.0) total = add(total, scale(contrast, lambda_contrast));
  return total;
}

}  // namespace beam
