#pragma once

// Adaptive Dormand-Prince 5(4) integration of dy/dt = f(t, y) for states in
// B^{m x m}, with an optional unit-ball guard.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>

#include "qloewner/algebra.hpp"

namespace qloewner {

struct IntegratorSettings {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.25;
  double initial_step = 1e-3;
  double min_step = 1e-14;
  long max_steps = 5'000'000;
  /// When set, a step landing at ||y|| >= 1 - guard_margin is rejected and halved.
  bool ball_guard = true;
  double guard_margin = 1e-12;
};

struct IntegrationStats {
  long accepted = 0;
  long rejected = 0;
  long guard_trips = 0;
  long rhs_evaluations = 0;

  IntegrationStats& operator+=(const IntegrationStats& o) {
    accepted += o.accepted;
    rejected += o.rejected;
    guard_trips += o.guard_trips;
    rhs_evaluations += o.rhs_evaluations;
    return *this;
  }
};

using Rhs = std::function<MatElem(double, const MatElem&)>;
using StepObserver = std::function<void(double, const MatElem&)>;

namespace detail {

/// Dormand-Prince tableau.
struct DormandPrince {
  static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b*, the embedded error weights
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

inline double scaled_error(const MatElem& err, const MatElem& y0, const MatElem& y1, const IntegratorSettings& s) {
  double out = 0.0;
  for (std::size_t i = 0; i < err.block_count(); ++i) {
    const CMatrix& e = err.block(i);
    const CMatrix& a = y0.block(i);
    const CMatrix& b = y1.block(i);
    for (Eigen::Index k = 0; k < e.size(); ++k) {
      const double scale = s.abs_tol + s.rel_tol * std::max(std::abs(a(k)), std::abs(b(k)));
      out = std::max(out, std::abs(e(k)) / scale);
    }
  }
  return out;
}

inline bool all_finite(const MatElem& y) {
  for (const auto& b : y.blocks())
    if (!b.allFinite()) return false;
  return true;
}

}  // namespace detail

/// Integrates from t0 to t1 >= t0 and returns y(t1).
inline MatElem integrate(const Rhs& f, double t0, double t1, MatElem y, const IntegratorSettings& s,
                         IntegrationStats* stats = nullptr, const StepObserver& observer = {}) {
  using DP = detail::DormandPrince;
  if (!(t1 >= t0)) throw IntegrationError("integrate: end time before start time");
  IntegrationStats local;
  IntegrationStats& st = stats ? *stats : local;
  if (observer) observer(t0, y);
  if (t1 == t0) return y;

  double t = t0;
  double h = std::min({s.initial_step, s.max_step, t1 - t0});
  MatElem k1 = f(t, y);
  ++st.rhs_evaluations;
  long steps = 0;
  while (t < t1) {
    if (++steps > s.max_steps) throw IntegrationError("integrate: step limit exceeded at t=" + std::to_string(t));
    const bool last = (t + h >= t1);
    if (last) h = t1 - t;

    const MatElem k2 = f(t + DP::c[1] * h, y + (h * DP::a21) * k1);
    const MatElem k3 = f(t + DP::c[2] * h, y + h * (DP::a31 * k1 + DP::a32 * k2));
    const MatElem k4 = f(t + DP::c[3] * h, y + h * (DP::a41 * k1 + DP::a42 * k2 + DP::a43 * k3));
    const MatElem k5 = f(t + DP::c[4] * h, y + h * (DP::a51 * k1 + DP::a52 * k2 + DP::a53 * k3 + DP::a54 * k4));
    const MatElem k6 =
        f(t + h, y + h * (DP::a61 * k1 + DP::a62 * k2 + DP::a63 * k3 + DP::a64 * k4 + DP::a65 * k5));
    const MatElem y1 = y + h * (DP::b1 * k1 + DP::b3 * k3 + DP::b4 * k4 + DP::b5 * k5 + DP::b6 * k6);
    const MatElem k7 = f(t + h, y1);
    st.rhs_evaluations += 6;

    if (!detail::all_finite(y1) || !detail::all_finite(k7))
      throw IntegrationError("integrate: non-finite state at t=" + std::to_string(t));

    const MatElem err = h * (DP::e1 * k1 + DP::e3 * k3 + DP::e4 * k4 + DP::e5 * k5 + DP::e6 * k6 + DP::e7 * k7);
    const double en = detail::scaled_error(err, y, y1, s);

    if (s.ball_guard && operator_norm(y1) >= 1.0 - s.guard_margin) {
      ++st.guard_trips;
      ++st.rejected;
      h *= 0.5;
    } else if (en <= 1.0) {
      t = last ? t1 : t + h;
      y = y1;
      k1 = k7;
      ++st.accepted;
      if (observer) observer(t, y);
      const double grow = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      h = std::min(h * grow, s.max_step);
    } else {
      ++st.rejected;
      h *= std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9);
    }
    if (t < t1 && h < s.min_step)
      throw IntegrationError("integrate: step size underflow at t=" + std::to_string(t));
  }
  return y;
}

}  // namespace qloewner
