#pragma once

// Loewner evolution on the balls of B^{m x m}: transition maps v_{s,t} of a
// Herglotz vector field, decreasing chains f_{s,t}, and numerical checks of
// the chain properties (normalization, semigroup law, injectivity, time
// regularity, starlike limits, coefficient experiments).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qloewner/algebra.hpp"
#include "qloewner/calculus.hpp"
#include "qloewner/herglotz.hpp"
#include "qloewner/integrator.hpp"

namespace qloewner {

struct TrajectoryPoint {
  double time;
  MatElem value;
};

struct EvolveResult {
  MatElem value;
  IntegrationStats stats;
  /// max over accepted states of ||zeta(tau)|| - ||z||
  double max_norm_excess = -std::numeric_limits<double>::infinity();
  std::vector<TrajectoryPoint> trajectory;
};

/// Transition maps v_{s,t} solving d/dt v = H(v, t), v_{s,s} = id.
class EvolutionFamily {
 public:
  EvolutionFamily(HerglotzField field, AlgebraShape shape, int level, IntegratorSettings settings = {})
      : field_(std::move(field)), shape_(std::move(shape)), level_(level), settings_(settings) {
    if (level_ < 1) throw ShapeError("EvolutionFamily: level must be >= 1");
  }

  const HerglotzField& field() const { return field_; }
  const AlgebraShape& shape() const { return shape_; }
  int level() const { return level_; }
  const IntegratorSettings& settings() const { return settings_; }

  EvolutionFamily with_settings(IntegratorSettings s) const { return EvolutionFamily(field_, shape_, level_, s); }

  /// v_{s,t}(z).
  MatElem evolve(double s, double t, const MatElem& z) const { return evolve_detailed(s, t, z).value; }

  EvolveResult evolve_detailed(double s, double t, const MatElem& z, bool record_trajectory = false) const {
    check_args(s, t, z);
    const HerglotzField& field = field_;
    const Rhs rhs = [&field](double tau, const MatElem& y) { return field.eval(y, tau); };
    std::vector<double> cuts;
    for (double b : field_.breakpoints())
      if (b > s && b < t) cuts.push_back(b);
    return run(rhs, s, t, cuts, z, record_trajectory, [](double tau) { return tau; });
  }

  /// f_{s,t}(z): solves d/ds f_{s,t} = -M(f_{s,t}, s) backward from f_{t,t} = z.
  MatElem evolve_decreasing(double s, double t, const MatElem& z) const {
    return evolve_decreasing_detailed(s, t, z).value;
  }

  EvolveResult evolve_decreasing_detailed(double s, double t, const MatElem& z, bool record_trajectory = false) const {
    check_args(s, t, z);
    // sigma = t - s' runs forward from 0 to t - s.
    const HerglotzField& field = field_;
    const Rhs rhs = [&field, t](double sigma, const MatElem& y) { return field.eval(y, t - sigma); };
    std::vector<double> cuts;
    for (double b : field_.breakpoints())
      if (b > s && b < t) cuts.push_back(t - b);
    std::sort(cuts.begin(), cuts.end());
    return run(rhs, 0.0, t - s, cuts, z, record_trajectory, [t](double sigma) { return t - sigma; });
  }

  /// z -> v_{s,t}(z).
  MapFn map(double s, double t) const {
    return [fam = *this, s, t](const MatElem& z) { return fam.evolve(s, t, z); };
  }

 private:
  void check_args(double s, double t, const MatElem& z) const {
    if (!(s >= 0.0 && s <= t)) throw DomainError("evolve: need 0 <= s <= t");
    if (!(z.shape() == shape_) || z.level() != level_) throw ShapeError("evolve: point not in the family's ball");
    if (!(operator_norm(z) < 1.0)) throw DomainError("evolve: starting point outside the ball");
  }

  template <class TimeMap>
  EvolveResult run(const Rhs& rhs, double a, double b, const std::vector<double>& cuts, const MatElem& z,
                   bool record, TimeMap to_time) const {
    EvolveResult out{z, {}, -std::numeric_limits<double>::infinity(), {}};
    const double z_norm = operator_norm(z);
    const StepObserver obs = [&](double tau, const MatElem& y) {
      out.max_norm_excess = std::max(out.max_norm_excess, operator_norm(y) - z_norm);
      if (record && (out.trajectory.empty() || out.trajectory.back().time != to_time(tau)))
        out.trajectory.push_back({to_time(tau), y});
    };
    double lo = a;
    MatElem y = z;
    std::vector<double> ends(cuts);
    ends.push_back(b);
    for (double hi : ends) {
      y = integrate(rhs, lo, hi, y, settings_, &out.stats, obs);
      lo = hi;
    }
    out.value = y;
    return out;
  }

  HerglotzField field_;
  AlgebraShape shape_;
  int level_;
  IntegratorSettings settings_;
};

// ---- normalization ----

/// Central-difference Jacobian of f at 0 (step 1e-5 in each coordinate direction).
template <BallMap F>
CMatrix derivative_at_zero(const F& f, const AlgebraShape& shape, int level, double step = 1e-5) {
  return jacobian(f, MatElem::zero(shape, level), step);
}

inline CMatrix derivative_at_zero(const EvolutionFamily& fam, double s, double t, double step = 1e-5) {
  return derivative_at_zero(fam.map(s, t), fam.shape(), fam.level(), step);
}

/// ||D - c I|| in the spectral norm.
inline double scalar_jacobian_defect(const CMatrix& jac, cplx c) {
  return spectral_norm(jac - c * CMatrix::Identity(jac.rows(), jac.cols()));
}

// ---- semigroup ----

struct SemigroupReport {
  double max_error = 0.0;
  double threshold = 1e-7;
  std::size_t samples = 0;
  bool passed() const { return max_error <= threshold; }
};

/// max ||v_{s,u}(z) - v_{t,u}(v_{s,t}(z))|| over samples.
inline SemigroupReport semigroup_check(const EvolutionFamily& fam, double s, double t, double u,
                                       const std::vector<MatElem>& samples, double threshold = 1e-7) {
  if (!(s <= t && t <= u)) throw DomainError("semigroup_check: need s <= t <= u");
  SemigroupReport r;
  r.threshold = threshold;
  for (const auto& z : samples) {
    const MatElem direct = fam.evolve(s, u, z);
    const MatElem composed = fam.evolve(t, u, fam.evolve(s, t, z));
    r.max_error = std::max(r.max_error, distance(direct, composed));
    ++r.samples;
  }
  return r;
}

// ---- injectivity ----

struct InjectivityReport {
  double min_ratio = std::numeric_limits<double>::infinity();
  std::size_t pairs = 0;
  double threshold = 1e-6;
  bool passed() const { return pairs > 0 && min_ratio > threshold; }
};

/// min over sample pairs of ||f(z) - f(w)|| / ||z - w||. A finite surrogate
/// for injectivity on the whole ball.
template <BallMap F>
InjectivityReport injectivity_probe(const F& f, const std::vector<MatElem>& samples, double threshold = 1e-6) {
  if (samples.size() < 2) throw DomainError("injectivity_probe: need at least two samples");
  InjectivityReport r;
  r.threshold = threshold;
  std::vector<MatElem> images;
  images.reserve(samples.size());
  for (const auto& z : samples) images.push_back(f(z));
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const double dz = distance(samples[i], samples[j]);
      if (dz == 0.0) continue;
      r.min_ratio = std::min(r.min_ratio, distance(images[i], images[j]) / dz);
      ++r.pairs;
    }
  return r;
}

// ---- Lipschitz continuity in time ----

struct LipschitzReport {
  double class_bound = 0.0;  ///< estimated M(r)
  double max_ratio = 0.0;    ///< max ||v_{s,t}(z) - v_{s,u}(z)|| / (M(r) |u - t|)
  double slack = 1.1;
  std::size_t violations = 0;
  bool passed() const { return violations == 0; }
};

/// Verifies ||v_{s,t}(z) - v_{s,u}(z)|| <= slack * M(r) |u - t| for all grid pairs.
inline LipschitzReport lipschitz_in_time_check(const EvolutionFamily& fam, double s, const MatElem& z,
                                               const std::vector<double>& grid, double r, std::size_t n_samples,
                                               Rng& rng, double slack = 1.1) {
  if (operator_norm(z) > r) throw DomainError("lipschitz_in_time_check: ||z|| exceeds r");
  std::vector<MapFn> frozen;
  std::vector<double> times(grid);
  times.push_back(s);
  for (double b : fam.field().breakpoints()) times.push_back(b);
  for (double t : times) frozen.push_back(at_time(fam.field(), t));
  LipschitzReport rep;
  rep.slack = slack;
  rep.class_bound = class_bound_estimate(frozen, fam.shape(), fam.level(), r, n_samples, rng).value;
  std::vector<MatElem> values;
  for (double t : grid) values.push_back(fam.evolve(s, t, z));
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      const double dt = std::abs(grid[j] - grid[i]);
      const double d = distance(values[i], values[j]);
      if (dt == 0.0) {
        if (d > 0.0) ++rep.violations;
        continue;
      }
      const double ratio = d / (rep.class_bound * dt);
      rep.max_ratio = std::max(rep.max_ratio, ratio);
      if (ratio > slack) ++rep.violations;
    }
  return rep;
}

// ---- starlike limits ----

struct StarlikeLimit {
  MatElem value;
  bool converged = false;
  double time_reached = 0.0;
  double last_change = std::numeric_limits<double>::infinity();
};

/// f_0(z) = lim e^t v_{0,t}(z) for an autonomous field, evaluated at t = 1, 2,
/// 4, ... (capped at t_max) until successive values differ by < tol. The
/// rescaled state w = e^t v obeys dw/dt = w + e^t H(e^{-t} w), which keeps
/// full relative precision for large t.
inline StarlikeLimit starlike_limit(const EvolutionFamily& fam, const MatElem& z, double t_max = 40.0,
                                    double tol = 1e-9) {
  if (!fam.field().is_autonomous()) throw DomainError("starlike_limit: field must be autonomous");
  if (!(operator_norm(z) < 1.0)) throw DomainError("starlike_limit: point outside the ball");
  const HerglotzField& field = fam.field();
  const Rhs rhs = [&field](double t, const MatElem& w) {
    const double shrink = std::exp(-t);
    return w + (1.0 / shrink) * field.eval(shrink * w, 0.0);
  };
  IntegratorSettings s = fam.settings();
  s.ball_guard = false;
  StarlikeLimit out{z, false, 0.0, std::numeric_limits<double>::infinity()};
  MatElem w = z;
  double t = 0.0;
  std::optional<MatElem> prev;
  for (double next = 1.0;; next = std::min(2.0 * next, t_max)) {
    w = integrate(rhs, t, next, w, s);
    t = next;
    if (prev) {
      out.last_change = distance(w, *prev);
      if (out.last_change < tol) {
        out.converged = true;
        break;
      }
    }
    prev = w;
    if (t >= t_max) break;
  }
  out.value = w;
  out.time_reached = t;
  return out;
}

/// z -> f_0(z); throws IntegrationError when the limit does not settle.
inline MapFn starlike_map(const EvolutionFamily& fam, double t_max = 40.0, double tol = 1e-9) {
  return [fam, t_max, tol](const MatElem& z) {
    StarlikeLimit l = starlike_limit(fam, z, t_max, tol);
    if (!l.converged)
      throw IntegrationError("starlike_limit: no convergence by t=" + std::to_string(l.time_reached) +
                             " (last change " + std::to_string(l.last_change) + ")");
    return l.value;
  };
}

struct ResidualReport {
  double max_error = 0.0;
  double threshold = 0.0;
  std::size_t samples = 0;
  bool passed() const { return max_error <= threshold; }
};

/// max ||f0(v_{0,T}(z)) - e^{-T} f0(z)||.
template <BallMap F>
ResidualReport starlike_identity_check(const EvolutionFamily& fam, const F& f0, double T,
                                       const std::vector<MatElem>& samples, double threshold = 1e-6) {
  ResidualReport r;
  r.threshold = threshold;
  const double c = std::exp(-T);
  for (const auto& z : samples) {
    r.max_error = std::max(r.max_error, distance(f0(fam.evolve(0.0, T, z)), c * f0(z)));
    ++r.samples;
  }
  return r;
}

inline ResidualReport starlike_identity_check(const EvolutionFamily& fam, double T, const std::vector<MatElem>& samples,
                                              double threshold = 1e-6) {
  return starlike_identity_check(fam, starlike_map(fam), T, samples, threshold);
}

/// max ||f(z) + Df(z)[h(z)]||: zero exactly when f is starlike with field h.
template <BallMap F, BallMap H>
ResidualReport starlike_pde_check(const F& f, const H& h, const std::vector<MatElem>& samples, double threshold,
                                  double step = 1e-3) {
  ResidualReport r;
  r.threshold = threshold;
  for (const auto& z : samples) {
    const MatElem hz = h(z);
    const double hn = operator_norm(hz);
    const double room = (1.0 - operator_norm(z)) / 2.5;
    const double eps = hn > 0.0 ? std::min(step, room / hn) : step;
    const MatElem df_h = directional_derivative(f, z, hz, eps);
    r.max_error = std::max(r.max_error, operator_norm(f(z) + df_h));
    ++r.samples;
  }
  return r;
}

// ---- coefficients ----

struct CoefficientReport {
  std::vector<AlgElem> coefficients;  ///< A_1, ..., A_N
  std::vector<double> norms;
  std::vector<double> ratios;         ///< ||A_n|| / n
  int samples = 0;
  double radius = 0.0;
};

/// Recovers A_n of g(z) = sum A_n z^n from samples g(zeta 1), |zeta| = radius,
/// by a discrete Fourier transform over `samples` points (>= 4N). Aliasing
/// contributes A_{n+K} radius^K + A_{n+2K} radius^{2K} + ...
template <class G>
CoefficientReport coefficient_extract(const G& g, const AlgebraShape& shape, int order, double radius,
                                      int samples = 0) {
  if (!(radius > 0.0 && radius < 1.0)) throw DomainError("coefficient_extract: radius must lie in (0, 1)");
  if (order < 1) throw DomainError("coefficient_extract: order must be >= 1");
  const int K = samples > 0 ? samples : std::max(4 * order, 64);
  if (K < 4 * order) throw DomainError("coefficient_extract: need at least 4N samples");
  const MatElem one = MatElem::identity(shape, 1);
  std::vector<MatElem> values;
  values.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) values.push_back(g(std::polar(radius, 2.0 * std::numbers::pi * k / K) * one));
  CoefficientReport rep;
  rep.samples = K;
  rep.radius = radius;
  for (int n = 1; n <= order; ++n) {
    MatElem acc = MatElem::zero(shape, 1);
    for (int k = 0; k < K; ++k)
      acc = acc + std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((static_cast<long>(n) * k) % K) / K) *
                      values[static_cast<std::size_t>(k)];
    acc = (1.0 / (K * std::pow(radius, n))) * acc;
    rep.coefficients.push_back(as_algebra(acc));
    rep.norms.push_back(operator_norm(acc));
    rep.ratios.push_back(rep.norms.back() / n);
  }
  return rep;
}

// ---- local inversion ----

struct InverseResult {
  MatElem solution;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Solves f(x) = target by damped Newton on the vectorized system, starting
/// at `seed`. Divergence is reported, never papered over.
template <BallMap F>
InverseResult local_inverse(const F& f, const MatElem& target, const MatElem& seed, int max_iter = 50,
                            double tol = 1e-12) {
  InverseResult out{seed, std::numeric_limits<double>::infinity(), 0, false};
  MatElem x = seed;
  MatElem fx = f(x);
  double res = distance(fx, target);
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it;
    if (res <= tol) break;
    const CMatrix jac = jacobian(f, x, 1e-6);
    const CVector step = jac.partialPivLu().solve(vectorize(fx - target));
    double damping = 1.0;
    bool improved = false;
    for (int k = 0; k < 30; ++k) {
      const MatElem cand = x - devectorize(x, damping * step);
      if (operator_norm(cand) < 1.0) {
        const MatElem fc = f(cand);
        const double rc = distance(fc, target);
        if (rc < res) {
          x = cand;
          fx = fc;
          res = rc;
          improved = true;
          break;
        }
      }
      damping *= 0.5;
    }
    if (!improved) break;
  }
  out.solution = x;
  out.residual = res;
  out.converged = res <= tol;
  return out;
}

/// For s <= t, each f_{0,t}(z) must lie in f_{0,s}(B): solve f_{0,s}(x) = f_{0,t}(z)
/// by Newton seeded at e^{s} f_{0,t}(z) and report the worst residual.
inline ResidualReport chain_nesting_check(const EvolutionFamily& fam, double s, double t,
                                          const std::vector<MatElem>& samples, double threshold = 1e-8) {
  if (!(s <= t)) throw DomainError("chain_nesting_check: need s <= t");
  ResidualReport r;
  r.threshold = threshold;
  const auto f_s = [&fam, s](const MatElem& x) { return fam.evolve_decreasing(0.0, s, x); };
  for (const auto& z : samples) {
    const MatElem y = fam.evolve_decreasing(0.0, t, z);
    MatElem seed = std::exp(s) * y;
    const double n = operator_norm(seed);
    if (n >= 1.0) seed = (0.99 / n) * seed;
    const InverseResult inv = local_inverse(f_s, y, seed, 50, 1e-13);
    const double res = (inv.converged || inv.residual <= threshold) && operator_norm(inv.solution) < 1.0
                           ? inv.residual
                           : std::numeric_limits<double>::infinity();
    r.max_error = std::max(r.max_error, res);
    ++r.samples;
  }
  return r;
}

}  // namespace qloewner
