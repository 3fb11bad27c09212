#pragma once

// Finite-difference derivatives of holomorphic maps between matrix balls.

#include <concepts>
#include <functional>

#include "qloewner/algebra.hpp"

namespace qloewner {

/// Any callable z -> f(z) on a fixed B^{m x m}.
template <class F>
concept BallMap = std::invocable<const F&, const MatElem&> &&
                  std::convertible_to<std::invoke_result_t<const F&, const MatElem&>, MatElem>;

using MapFn = std::function<MatElem(const MatElem&)>;

/// Df(z)[dir] by the 5-point central stencil (error O(step^4)).
template <BallMap F>
MatElem directional_derivative(const F& f, const MatElem& z, const MatElem& dir, double step) {
  const MatElem p1 = f(z + step * dir);
  const MatElem m1 = f(z - step * dir);
  const MatElem p2 = f(z + (2.0 * step) * dir);
  const MatElem m2 = f(z - (2.0 * step) * dir);
  return (1.0 / (12.0 * step)) * (8.0 * (p1 - m1) - (p2 - m2));
}

/// Df(z)[dir] by the 3-point central stencil (error O(step^2)).
template <BallMap F>
MatElem central_difference(const F& f, const MatElem& z, const MatElem& dir, double step) {
  return (0.5 / step) * (f(z + step * dir) - f(z - step * dir));
}

/// Complex Jacobian of f at z in vectorized coordinates: column c is the
/// central difference of f along the real coordinate direction c. For a
/// holomorphic f this is the complex-linear derivative.
template <BallMap F>
CMatrix jacobian(const F& f, const MatElem& z, double step = 1e-5) {
  const auto d = static_cast<Eigen::Index>(z.coordinate_count());
  CMatrix jac(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const MatElem e = coordinate_unit(z, static_cast<std::size_t>(c));
    jac.col(c) = vectorize(central_difference(f, z, e, step));
  }
  return jac;
}

/// Largest deviation from complex linearity: ||D f[i e_c] - i D f[e_c]|| over
/// coordinate directions. Near zero for holomorphic f.
template <BallMap F>
double cauchy_riemann_defect(const F& f, const MatElem& z, double step = 1e-5) {
  double out = 0.0;
  for (std::size_t c = 0; c < z.coordinate_count(); ++c) {
    const MatElem e = coordinate_unit(z, c);
    const MatElem dr = central_difference(f, z, e, step);
    const MatElem di = central_difference(f, z, cplx(0, 1) * e, step);
    out = std::max(out, operator_norm(di - cplx(0, 1) * dr));
  }
  return out;
}

}  // namespace qloewner
