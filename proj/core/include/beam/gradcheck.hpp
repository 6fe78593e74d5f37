#pragma once

// Central finite-difference validation of every backward rule, in double
// precision so truncation error stays far below the tolerance. The numeric
// differentiation path never touches backward(); it only re-runs forward
// passes at perturbed inputs.

#include <functional>
#include <string>
#include <vector>

#include "beam/contrast.hpp"
#include "beam/encoder.hpp"
#include "beam/fusion.hpp"
#include "beam/losses.hpp"
#include "beam/rng.hpp"
#include "beam/tensor.hpp"

namespace beam {

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  int points = 0;
  bool pass = false;
};

namespace gradcheck_detail {

/// Relative error with a 0.01 floor on the denominator, so near-zero
/// gradients compare absolutely at 1e-2 * tol.
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({0.01, std::abs(a), std::abs(b)});
}

struct LeafSpec {
  Shape shape;
  double lo = -1.0;
  double hi = 1.0;
};

using BuildFn = std::function<Var<double>(const std::vector<Var<double>>&)>;

/// Draws `points` random inputs, compares backward() against central
/// differences (h = 1e-4) on every leaf component.
inline GradCheckResult check_gradients(const std::string& name, const std::vector<LeafSpec>& specs,
                                       const BuildFn& build, Rng& rng, int points = 25, double tol = 1e-4,
                                       double h = 1e-4) {
  GradCheckResult result{name, 0.0, tol, points, false};
  for (int pt = 0; pt < points; ++pt) {
    std::vector<std::vector<double>> values;
    for (const LeafSpec& spec : specs) {
      std::vector<double> v(shape_size(spec.shape));
      for (auto& x : v) x = rng.uniform(spec.lo, spec.hi);
      values.push_back(std::move(v));
    }
    auto make_leaves = [&](int perturb_leaf, int64_t perturb_idx, double delta) {
      std::vector<Var<double>> leaves;
      for (size_t i = 0; i < specs.size(); ++i) {
        std::vector<double> v = values[i];
        if (static_cast<int>(i) == perturb_leaf) v[perturb_idx] += delta;
        leaves.push_back(Var<double>::leaf(specs[i].shape, std::move(v)));
      }
      return leaves;
    };

    std::vector<Var<double>> leaves = make_leaves(-1, 0, 0.0);
    const Var<double> loss = build(leaves);
    backward(loss);

    for (size_t li = 0; li < specs.size(); ++li) {
      const std::vector<double> analytic = leaves[li].grad();
      for (int64_t ci = 0; ci < static_cast<int64_t>(analytic.size()); ++ci) {
        const double f_plus = build(make_leaves(static_cast<int>(li), ci, h)).item();
        const double f_minus = build(make_leaves(static_cast<int>(li), ci, -h)).item();
        const double numeric = (f_plus - f_minus) / (2.0 * h);
        result.max_rel_err = std::max(result.max_rel_err, rel_err(analytic[ci], numeric));
      }
    }
  }
  result.pass = result.max_rel_err < tol;
  return result;
}

/// Scalarizes a tensor output against fixed weights. The weights must stay
/// constant across the analytic and finite-difference evaluations of one
/// check, so they are drawn once per check, not per call.
inline Var<double> contract(const Var<double>& y, const std::vector<double>& w) {
  require(static_cast<int64_t>(w.size()) == y.size(), "contraction weight size mismatch");
  return dot(reshape(y, {static_cast<int>(y.size())}),
             Var<double>::constant({static_cast<int>(y.size())}, w));
}

inline std::vector<double> fixed_weights(Rng& rng, int64_t n) {
  std::vector<double> w(n);
  for (auto& x : w) x = rng.uniform(-1.0, 1.0);
  return w;
}

}  // namespace gradcheck_detail

/// Finite-difference checks for every primitive, the composed losses
/// (fusion, InfoNCE, cross-entropy, fusion+contrast) and a tiny end-to-end
/// encoder. `points` random points per entry.
std::vector<GradCheckResult> run_gradcheck_suite(uint64_t seed = 20240901, int points = 25);

inline bool all_passed(const std::vector<GradCheckResult>& results) {
  for (const auto& r : results)
    if (!r.pass) return false;
  return !results.empty();
}

}  // namespace beam
