#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "sesn/autograd.hpp"
#include "sesn/ops.hpp"

namespace sesn::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng, Real lo = -1.0, Real hi = 1.0) {
  std::uniform_real_distribution<Real> d(lo, hi);
  Tensor t(shape);
  for (auto& v : t.values()) v = d(rng);
  return t;
}

inline Real l2(const std::vector<Real>& v) {
  Real s = 0.0;
  for (Real x : v) s += x * x;
  return std::sqrt(s);
}

struct GradCheck {
  Real relative = 0.0;       // ||a - n|| / max(||a||, ||n||)
  Real absolute = 0.0;       // ||a - n||
  Real analytic_norm = 0.0;
  Real numeric_norm = 0.0;

  /// Gradients that vanish by construction (a bias feeding batch norm) leave
  /// only finite-difference noise, so those are judged on the absolute gap.
  bool passes(Real tol, Real vanishing = 1e-8) const {
    return relative < tol || (analytic_norm < vanishing && absolute < vanishing);
  }
};

/// Central-difference check of d loss / d wrt. `loss` must rebuild the graph
/// from wrt's current value.
inline GradCheck check_gradient(const std::function<Var()>& loss, const Var& wrt, Real h = 1e-4) {
  wrt->zero_grad();
  Var root = loss();
  backward(root);
  const std::vector<Real> analytic = wrt->ensure_grad().values();

  std::vector<Real> numeric(wrt->value.size());
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const Real saved = wrt->value[i];
    wrt->value[i] = saved + h;
    const Real up = loss()->value[0];
    wrt->value[i] = saved - h;
    const Real down = loss()->value[0];
    wrt->value[i] = saved;
    numeric[i] = (up - down) / (2.0 * h);
  }
  std::vector<Real> diff(numeric.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = analytic[i] - numeric[i];
  GradCheck r;
  r.analytic_norm = l2(analytic);
  r.numeric_norm = l2(numeric);
  r.absolute = l2(diff);
  const Real scale = std::max(r.analytic_norm, r.numeric_norm);
  r.relative = scale == 0.0 ? 0.0 : r.absolute / scale;
  return r;
}

}  // namespace sesn::testing
