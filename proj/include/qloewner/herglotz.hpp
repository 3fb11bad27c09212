#pragma once

// Herglotz functions h in M(B) (h(0) = 0, Dh(0) = -I, Re l_z(h(z)) < 0 for
// every support functional l_z of z) and time-dependent Herglotz vector fields
// built from them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qloewner/algebra.hpp"
#include "qloewner/calculus.hpp"
#include "qloewner/expectation.hpp"
#include "qloewner/random.hpp"

namespace qloewner {

class HerglotzField;

/// h(z) = -z.
struct LinearField {};

struct PTerm {
  MatElem u;  ///< unitary; level 1 terms are lifted to u (x) I_m
  double weight;
};

/// p(z) = sum_j w_j (1 + z u_j)(1 - z u_j)^{-1}, h(z) = -p(z) z.
struct PGeneratedField {
  std::vector<PTerm> terms;
};

/// h(z) = -z int (u + z)/(u - z) dmu(u) for a measure mu on the circle. The
/// scalar functional calculus makes this meaningful on every B^{m x m}.
struct CircleDrivenField {
  CircleMeasure measure;
};

/// fields[i] is active on [breaks[i-1], breaks[i]) with breaks[-1] = 0 and breaks[n] = inf.
struct PiecewiseField {
  std::vector<double> breaks;
  std::vector<HerglotzField> fields;
};

/// Field on C^{2x2} in triangular coordinates c = [[z, zeta], [c10, w]]:
/// [[h_alpha(z), -rate * zeta], [-c10, h_beta(w)]]. The lower-left entry of
/// a triangular point never moves.
struct TriangularField {
  std::shared_ptr<const HerglotzField> alpha;
  std::shared_ptr<const HerglotzField> beta;
  cplx corner_rate = 1.0;
};

class HerglotzField {
 public:
  using Variant = std::variant<LinearField, PGeneratedField, CircleDrivenField, PiecewiseField, TriangularField>;

  static HerglotzField linear() { return HerglotzField(LinearField{}); }

  /// Weights are renormalized when they sum to 1 within 1e-9.
  static HerglotzField p_generated(std::vector<PTerm> terms, double tol = kDefaultTol) {
    if (terms.empty()) throw InputError("p_generated: no terms");
    double total = 0.0;
    for (const auto& t : terms) {
      if (!(t.weight >= 0.0)) throw InputError("p_generated: negative weight");
      if (!(t.u.shape() == terms.front().u.shape())) throw ShapeError("p_generated: terms in different algebras");
      if (!is_unitary(t.u, tol)) throw DomainError("p_generated: u is not unitary");
      total += t.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InputError("p_generated: weights must sum to 1");
    for (auto& t : terms) t.weight /= total;
    return HerglotzField(PGeneratedField{std::move(terms)});
  }

  static HerglotzField p_generated(const std::vector<std::pair<AlgElem, double>>& terms) {
    std::vector<PTerm> out;
    for (const auto& [u, w] : terms) out.push_back({as_matrix(u), w});
    return p_generated(std::move(out));
  }

  static HerglotzField circle_driven(CircleMeasure m) { return HerglotzField(CircleDrivenField{std::move(m)}); }

  static HerglotzField piecewise(std::vector<double> breaks, std::vector<HerglotzField> fields) {
    if (fields.size() != breaks.size() + 1) throw InputError("piecewise: need one more field than breakpoints");
    double prev = 0.0;
    for (double b : breaks) {
      if (!(b > prev)) throw InputError("piecewise: breakpoints must be positive and increasing");
      prev = b;
    }
    return HerglotzField(PiecewiseField{std::move(breaks), std::move(fields)});
  }

  static HerglotzField triangular(HerglotzField alpha, HerglotzField beta, cplx corner_rate = 1.0) {
    return HerglotzField(TriangularField{std::make_shared<const HerglotzField>(std::move(alpha)),
                                         std::make_shared<const HerglotzField>(std::move(beta)), corner_rate});
  }

  const Variant& variant() const { return v_; }

  std::string kind() const {
    static constexpr const char* names[] = {"linear", "p_generated", "circle_driven", "piecewise", "triangular"};
    return names[v_.index()];
  }

  bool is_autonomous() const {
    if (const auto* p = std::get_if<PiecewiseField>(&v_)) {
      (void)p;
      return false;
    }
    if (const auto* tr = std::get_if<TriangularField>(&v_)) return tr->alpha->is_autonomous() && tr->beta->is_autonomous();
    return true;
  }

  /// All times where the field may jump.
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    std::visit(
        [&](const auto& f) {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, PiecewiseField>) {
            double lo = 0.0;
            for (std::size_t i = 0; i < f.fields.size(); ++i) {
              const double hi = i < f.breaks.size() ? f.breaks[i] : std::numeric_limits<double>::infinity();
              for (double b : f.fields[i].breakpoints())
                if (b > lo && b < hi) out.push_back(b);
              if (i < f.breaks.size()) out.push_back(f.breaks[i]);
              lo = hi;
            }
          } else if constexpr (std::is_same_v<F, TriangularField>) {
            for (double b : f.alpha->breakpoints()) out.push_back(b);
            for (double b : f.beta->breakpoints()) out.push_back(b);
          }
        },
        v_);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// The field active at time t (piecewise fields resolved).
  const HerglotzField& active(double t) const {
    if (const auto* p = std::get_if<PiecewiseField>(&v_)) {
      const auto it = std::upper_bound(p->breaks.begin(), p->breaks.end(), t);
      return p->fields[static_cast<std::size_t>(it - p->breaks.begin())].active(t);
    }
    return *this;
  }

  /// p(z) with h(z) = -p(z) z, for the p-generated and circle-driven variants.
  MatElem p_function(const MatElem& z, double t = 0.0) const {
    const HerglotzField& f = active(t);
    if (const auto* pg = std::get_if<PGeneratedField>(&f.v_)) {
      const MatElem one = identity_like(z);
      MatElem acc = zero_like(z);
      for (const auto& term : pg->terms) {
        const MatElem zu = z * lift(term.u, z);
        acc = acc + term.weight * right_divide(one + zu, one - zu);
      }
      return acc;
    }
    if (const auto* cd = std::get_if<CircleDrivenField>(&f.v_)) {
      const MatElem one = identity_like(z);
      MatElem acc = zero_like(z);
      for (const auto& a : cd->measure.atoms()) {
        const MatElem zu = std::polar(1.0, -a.angle) * z;  // (u + z)/(u - z) = (1 + u* z)/(1 - u* z)
        acc = acc + a.weight * right_divide(one + zu, one - zu);
      }
      return acc;
    }
    if (std::holds_alternative<LinearField>(f.v_)) return identity_like(z);
    throw DomainError("p_function: not defined for " + f.kind() + " fields");
  }

  /// h(z, t).
  MatElem eval(const MatElem& z, double t = 0.0) const {
    return std::visit(
        [&](const auto& f) -> MatElem {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, LinearField>) {
            return -z;
          } else if constexpr (std::is_same_v<F, PGeneratedField> || std::is_same_v<F, CircleDrivenField>) {
            return -(p_function(z, t) * z);
          } else if constexpr (std::is_same_v<F, PiecewiseField>) {
            return active(t).eval(z, t);
          } else {
            return eval_triangular(f, z, t);
          }
        },
        v_);
  }

  MatElem operator()(const MatElem& z, double t = 0.0) const { return eval(z, t); }

 private:
  explicit HerglotzField(Variant v) : v_(std::move(v)) {}

  static MatElem lift(const MatElem& u, const MatElem& z) {
    if (!(u.shape() == z.shape())) throw ShapeError("p_generated: u and z in different algebras");
    if (u.level() == z.level()) return u;
    if (u.level() == 1) return MatElem::diagonal(as_algebra(u), z.level());
    throw ShapeError("p_generated: term level does not match evaluation level");
  }

  static MatElem scalar_point(cplx x) { return MatElem(AlgebraShape::scalar(), 1, {CMatrix::Constant(1, 1, x)}); }

  static MatElem eval_triangular(const TriangularField& f, const MatElem& c, double t) {
    if (c.block_count() != 1 || c.block(0).rows() != 2) throw ShapeError("triangular field: expects a point of C^{2x2}");
    const CMatrix& m = c.block(0);
    CMatrix out(2, 2);
    out(0, 0) = f.alpha->eval(scalar_point(m(0, 0)), t).block(0)(0, 0);
    out(1, 1) = f.beta->eval(scalar_point(m(1, 1)), t).block(0)(0, 0);
    out(0, 1) = -f.corner_rate * m(0, 1);
    out(1, 0) = -m(1, 0);
    return c.with_blocks({out});
  }

  Variant v_;
};

/// A Herglotz field frozen at time t, as a map z -> h(z, t).
inline MapFn at_time(const HerglotzField& field, double t) {
  return [field, t](const MatElem& z) { return field.eval(z, t); };
}

// ---- support functionals ----

/// l(a) = u* a_i v on block i, with z_i v = ||z|| u.
struct SupportFunctional {
  std::size_t block;
  CVector u;
  CVector v;

  template <BlockLike T>
  cplx operator()(const T& a) const {
    return u.dot(a.block(block) * v);
  }
};

struct SupportFunctionalSet {
  std::vector<SupportFunctional> functionals;
  bool degenerate = false;  ///< top singular value not simple (gap < tolerance)
};

/// Support functionals of z from the top singular subspace(s). When the top
/// singular value is not simple, returns an orthonormal basis of pairs plus
/// `random_draws` random unit combinations.
inline SupportFunctionalSet support_functionals(const MatElem& z, Rng& rng, double gap_tol = 1e-8,
                                                int random_draws = 32) {
  SupportFunctionalSet out;
  const double norm = operator_norm(z);
  for (std::size_t i = 0; i < z.block_count(); ++i) {
    Eigen::JacobiSVD<CMatrix> svd(z.block(i), Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    if (s(0) < norm - gap_tol) continue;
    Eigen::Index d = 0;
    while (d < s.size() && s(d) >= norm - gap_tol) ++d;
    const CMatrix U = svd.matrixU().leftCols(d);
    const CMatrix V = svd.matrixV().leftCols(d);
    for (Eigen::Index j = 0; j < d; ++j) out.functionals.push_back({i, U.col(j), V.col(j)});
    if (d > 1) {
      out.degenerate = true;
      for (int r = 0; r < random_draws; ++r) {
        CVector c(d);
        for (Eigen::Index j = 0; j < d; ++j) c(j) = rng.complex_normal();
        c.normalize();
        out.functionals.push_back({i, U * c, V * c});
      }
    }
  }
  if (out.functionals.size() > 1) out.degenerate = true;
  return out;
}

// ---- membership ----

struct MembershipReport {
  double h_at_zero = 0.0;             ///< ||h(0)||, must be exactly 0
  double derivative_defect = 0.0;     ///< max ||Dh(0)[E] + E|| over coordinate directions
  std::size_t samples = 0;
  std::size_t violations = 0;         ///< samples with some Re l_z(h(z)) >= 0
  std::size_t degenerate_samples = 0; ///< samples checked through subspace sampling
  double max_re_functional = -std::numeric_limits<double>::infinity();
  double derivative_tol = 1e-6;
  bool passed() const { return h_at_zero == 0.0 && derivative_defect <= derivative_tol && violations == 0; }
};

/// Checks the defining conditions of M(B) for the map h on B^{m x m}.
template <BallMap F>
MembershipReport membership_check(const F& h, const AlgebraShape& shape, int level, const std::vector<MatElem>& samples,
                                  Rng& rng, double fd_step = 1e-5, double derivative_tol = 1e-6) {
  MembershipReport r;
  r.derivative_tol = derivative_tol;
  const MatElem zero = MatElem::zero(shape, level);
  r.h_at_zero = operator_norm(h(zero));
  for (std::size_t c = 0; c < zero.coordinate_count(); ++c) {
    const MatElem e = coordinate_unit(zero, c);
    r.derivative_defect = std::max(r.derivative_defect, operator_norm(central_difference(h, zero, e, fd_step) + e));
  }
  for (const auto& z : samples) {
    ++r.samples;
    const MatElem hz = h(z);
    const auto set = support_functionals(z, rng);
    if (set.degenerate) ++r.degenerate_samples;
    bool bad = false;
    for (const auto& l : set.functionals) {
      const double re = l(hz).real();
      r.max_re_functional = std::max(r.max_re_functional, re);
      if (!(re < 0.0)) bad = true;
    }
    if (bad) ++r.violations;
  }
  return r;
}

inline MembershipReport membership_check(const HerglotzField& field, double t, const AlgebraShape& shape, int level,
                                         const std::vector<MatElem>& samples, Rng& rng) {
  return membership_check(at_time(field, t), shape, level, samples, rng);
}

// ---- fields recovered from evolution families ----

struct DifferenceQuotient {
  MatElem quotient;      ///< (v_{t,t+dt}(z) - z)/dt
  MatElem g_decreasing;  ///< (v_{t,t+dt}(z) - z)/(1 - e^{-dt}); Dg(0) = -I when Dv(0) = e^{-dt} I
};

/// (v - z)/(1 - e^{dt}) for a transition map of an increasing family (Dv(0) = e^{dt} I).
inline MatElem normalized_quotient_increasing(const MatElem& v, const MatElem& z, double dt) {
  return (1.0 / (1.0 - std::exp(dt))) * (v - z);
}

/// (v - z)/(1 - e^{-dt}) for a transition map of a decreasing family (Dv(0) = e^{-dt} I).
inline MatElem normalized_quotient_decreasing(const MatElem& v, const MatElem& z, double dt) {
  return (1.0 / -std::expm1(-dt)) * (v - z);
}

/// Recovers the generating field of an evolution family at time t.
/// `Family` is anything with evolve(s, t, z).
template <class Family>
DifferenceQuotient difference_quotient_field(const Family& family, double t, double dt, const MatElem& z) {
  if (!(dt > 0.0 && dt <= 0.1)) throw DomainError("difference_quotient_field: dt must lie in (0, 0.1]");
  const MatElem v = family.evolve(t, t + dt, z);
  return {(1.0 / dt) * (v - z), normalized_quotient_decreasing(v, z, dt)};
}

// ---- class bound ----

struct ClassBound {
  double value = 0.0;  ///< empirical sup ||h(z)||, ||z|| <= r
  std::size_t samples = 0;
  std::size_t argmax_field = 0;
};

/// Empirical M(r) = sup ||h(z)|| over the given maps and ||z|| <= r. Samples
/// lie on the sphere ||z|| = r (maximum principle); the points +-r, +-ir
/// times the unit are always included.
template <BallMap F>
ClassBound class_bound_estimate(const std::vector<F>& fields, const AlgebraShape& shape, int level, double r,
                                std::size_t n_samples, Rng& rng) {
  if (!(r > 0.0 && r < 1.0)) throw DomainError("class_bound_estimate: r must lie in (0, 1)");
  std::vector<MatElem> pts;
  const MatElem one = MatElem::identity(shape, level);
  for (cplx c : {cplx(r), cplx(-r), cplx(0, r), cplx(0, -r)}) pts.push_back(c * one);
  for (std::size_t i = 0; i < n_samples; ++i) pts.push_back(random_sphere_point(shape, level, r, rng));
  ClassBound out;
  for (std::size_t f = 0; f < fields.size(); ++f)
    for (const auto& z : pts) {
      const double n = operator_norm(fields[f](z));
      ++out.samples;
      if (n > out.value) {
        out.value = n;
        out.argmax_field = f;
      }
    }
  return out;
}

}  // namespace qloewner
