#pragma once

// Batch InfoNCE over L2-normalized representations:
//
//   L = -(1/B) sum_i log( exp(z_i . z_{i+} / tau) / sum_j exp(z_i . z_j / tau) )
//
// The denominator runs over all j = 1..B including j = i; set
// `exclude_self` to drop the self term instead. Positives are same-label
// batch members drawn uniformly per query.

#include <cstdint>
#include <vector>

#include "beam/rng.hpp"
#include "beam/tensor.hpp"

namespace beam {

/// Rows of `reps` normalized to unit L2 norm (epsilon-guarded; an exact zero
/// row normalizes to zero and is logged).
template <class S>
Var<S> l2_normalize_batch(const Var<S>& reps) {
  require(reps.ndim() == 2 || reps.ndim() == 1, "l2_normalize_batch expects a batch matrix or one vector");
  const int p = reps.ndim() == 2 ? reps.dim(1) : reps.dim(0);
  const int m = reps.ndim() == 2 ? reps.dim(0) : 1;
  for (int i = 0; i < m; ++i) {
    S nsq = S(0);
    for (int j = 0; j < p; ++j) {
      const S v = reps.values()[static_cast<int64_t>(i) * p + j];
      nsq += v * v;
    }
    if (nsq == S(0)) BEAM_LOG_WARN("l2_normalize_batch: zero vector at row %d normalizes to zero", i);
  }
  return l2_normalize(reps);
}

/// Uniformly picks a same-label partner j != i for every i. Every class in
/// `labels` must have at least two members.
inline std::vector<int> build_positive_map(const std::vector<int>& labels, Rng& rng) {
  require(labels.size() >= 2, "positive map needs a batch of >= 2");
  std::vector<std::vector<int>> by_class(2);
  for (size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] == 0 || labels[i] == 1, "labels must be binary");
    by_class[labels[i]].push_back(static_cast<int>(i));
  }
  for (int c = 0; c < 2; ++c)
    require(by_class[c].empty() || by_class[c].size() >= 2,
            "class " + std::to_string(c) + " has a single member in the batch; the sampler must prevent this");
  std::vector<int> positives(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    const auto& peers = by_class[labels[i]];
    int j;
    do {
      j = peers[rng.uniform_int(peers.size())];
    } while (j == static_cast<int>(i));
    positives[i] = j;
  }
  return positives;
}

/// InfoNCE over already-normalized rows. `positives[i]` designates i+.
template <class S>
Var<S> info_nce(const Var<S>& normalized_reps, const std::vector<int>& positives, double tau,
                bool exclude_self = false) {
  require(tau > 0.0, "temperature must be positive");
  require(normalized_reps.ndim() == 2, "info_nce expects a batch matrix");
  const int b = normalized_reps.dim(0);
  require(static_cast<int>(positives.size()) == b, "positive map size mismatch");
  for (int i = 0; i < b; ++i)
    require(positives[i] >= 0 && positives[i] < b && positives[i] != i,
            "positive index out of range or self at row " + std::to_string(i));

  Var<S> sims = scale(matmul(normalized_reps, transpose(normalized_reps)), 1.0 / tau);
  if (exclude_self) {
    // Push the diagonal far below the rest so softmax ignores it.
    std::vector<S> mask(static_cast<size_t>(b) * b, S(0));
    for (int i = 0; i < b; ++i) mask[static_cast<int64_t>(i) * b + i] = static_cast<S>(-1e9);
    sims = add(sims, Var<S>::constant({b, b}, std::move(mask)));
  }

  // Row-stable log-softmax: subtracting a detached row max leaves both the
  // value and the gradient unchanged.
  std::vector<S> row_max(static_cast<size_t>(b) * b);
  for (int i = 0; i < b; ++i) {
    S mx = sims.values()[static_cast<int64_t>(i) * b];
    for (int j = 1; j < b; ++j) mx = std::max(mx, sims.values()[static_cast<int64_t>(i) * b + j]);
    for (int j = 0; j < b; ++j) row_max[static_cast<int64_t>(i) * b + j] = mx;
  }
  const Var<S> shifted = sub(sims, Var<S>::constant({b, b}, std::move(row_max)));
  const Var<S> log_row_sum = log(scale(mean_over_axis(exp(shifted), 1), static_cast<double>(b)));

  std::vector<S> select(static_cast<size_t>(b) * b, S(0));
  for (int i = 0; i < b; ++i) select[static_cast<int64_t>(i) * b + positives[i]] = S(1);
  const Var<S> pos_logits = dot(reshape(shifted, {b * b}), Var<S>::constant({b * b}, std::move(select)));

  std::vector<S> ones(b, S(1));
  const Var<S> sum_log_denoms = dot(log_row_sum, Var<S>::constant({b}, std::move(ones)));
  return scale(sub(sum_log_denoms, pos_logits), 1.0 / b);
}

}  // namespace beam
