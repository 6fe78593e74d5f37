#pragma once

// Shared/specific decomposition of per-view latents and their combination
// into one fused representation.
//
// A latent z of even dimension d splits positionally: the first d/2 entries
// are its shared half Com(z), the last d/2 its specific half Sep(z). Training
// under fusion_loss pushes the Com halves of the two views together and their
// Sep halves apart:
//
//   fusion_loss = |cos(Sep_tom, Sep_em)| / (cos(Com_tom, Com_em) + 1 + eps)
//
// The fused representation is (Sep_tom, 0.5*(Com_tom + Com_em), Sep_em),
// of dimension 3*d/2.

#include "beam/tensor.hpp"

namespace beam {

inline constexpr double kFusionEps = 1e-8;

template <class S>
struct Decomposition {
  Var<S> com;
  Var<S> sep;
};

template <class S>
Decomposition<S> decompose(const Var<S>& z) {
  require(z.ndim() == 1, "decompose expects a 1-D latent");
  const int d = z.dim(0);
  require(d % 2 == 0, "latent dimension must be even to split into Com/Sep halves");
  return {slice(z, 0, d / 2), slice(z, d / 2, d / 2)};
}

template <class S>
Var<S> fusion_loss(const Var<S>& z_tom, const Var<S>& z_em, double eps = kFusionEps) {
  require(z_tom.shape() == z_em.shape(), "fusion_loss latent dimension mismatch");
  const auto tom = decompose(z_tom);
  const auto em = decompose(z_em);
  const Var<S> sim_com = cosine_similarity(tom.com, em.com);
  const Var<S> sim_sep = cosine_similarity(tom.sep, em.sep);
  // denominator = sim_com + 1 + eps, strictly positive since sim_com >= -1
  const Var<S> denom = add(sim_com, Var<S>::scalar_const(static_cast<S>(1.0 + eps)));
  return divide(abs_val(sim_sep), denom);
}

template <class S>
Var<S> fuse(const Var<S>& z_tom, const Var<S>& z_em) {
  require(z_tom.shape() == z_em.shape(), "fuse latent dimension mismatch");
  const auto tom = decompose(z_tom);
  const auto em = decompose(z_em);
  const Var<S> common = scale(add(tom.com, em.com), 0.5);
  return concat<S>({tom.sep, common, em.sep});
}

}  // namespace beam
