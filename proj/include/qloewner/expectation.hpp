#pragma once

// B-valued probability spaces (A, B, Phi) realized as A = B (x) C^{k x k}
// with Phi = id (x) omega for a faithful diagonal state omega on C^{k x k},
// and the unitary distributions whose moments Phi(U b1 U b2 ... U bn) the
// transform module encodes.

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qloewner/algebra.hpp"

namespace qloewner {

class RealizedSpace {
 public:
  /// Phi = id (x) normalized trace.
  RealizedSpace(AlgebraShape base, int k) : RealizedSpace(std::move(base), std::vector<double>(k > 0 ? k : 0, 1.0 / k)) {}

  /// Phi = id (x) sum_a w_a <e_a, . e_a>; weights must be >= 0 and sum to 1.
  RealizedSpace(AlgebraShape base, std::vector<double> state_weights)
      : base_(std::move(base)), weights_(std::move(state_weights)) {
    if (weights_.empty()) throw ShapeError("RealizedSpace: amplification must be >= 1");
    double total = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0)) throw InputError("RealizedSpace: state weights must be nonnegative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InputError("RealizedSpace: state weights must sum to 1");
    ambient_ = base_.amplified(k());
  }

  const AlgebraShape& base_shape() const { return base_; }
  const AlgebraShape& ambient_shape() const { return ambient_; }
  int k() const { return static_cast<int>(weights_.size()); }
  const std::vector<double>& state_weights() const { return weights_; }

  /// b -> b (x) 1.
  template <BlockLike T>
  T embed(const T& b) const {
    if (!(b.shape() == base_)) throw ShapeError("RealizedSpace::embed: element not in base algebra");
    std::vector<CMatrix> blocks;
    for (const auto& x : b.blocks()) blocks.push_back(detail::kron_identity(x, k()));
    if constexpr (std::is_same_v<T, MatElem>)
      return MatElem(ambient_, b.level(), std::move(blocks));
    else
      return AlgElem(ambient_, std::move(blocks));
  }

  /// Phi applied entrywise: partial weighted trace over the C^{k x k} factor.
  template <BlockLike T>
  T apply(const T& x) const {
    if (!(x.shape() == ambient_)) throw ShapeError("RealizedSpace::apply: element not in ambient algebra");
    const Eigen::Index k = this->k();
    std::vector<CMatrix> blocks;
    for (const auto& a : x.blocks()) {
      const Eigen::Index outer = a.rows() / k;
      CMatrix r = CMatrix::Zero(outer, outer);
      for (Eigen::Index p = 0; p < outer; ++p)
        for (Eigen::Index q = 0; q < outer; ++q) {
          cplx s = 0.0;
          for (Eigen::Index al = 0; al < k; ++al) s += weights_[static_cast<std::size_t>(al)] * a(p * k + al, q * k + al);
          r(p, q) = s;
        }
      blocks.push_back(std::move(r));
    }
    if constexpr (std::is_same_v<T, MatElem>)
      return MatElem(base_, x.level(), std::move(blocks));
    else
      return AlgElem(base_, std::move(blocks));
  }

 private:
  AlgebraShape base_;
  std::vector<double> weights_;
  AlgebraShape ambient_;
};

/// Conditional expectation applied to x.
template <BlockLike T>
T expectation_apply(const RealizedSpace& space, const T& x) {
  return space.apply(x);
}

struct CircleAtom {
  double angle;  ///< radians
  double weight;
};

/// Atomic probability measure on the unit circle.
class CircleMeasure {
 public:
  /// Weights summing to 1 within 1e-9 are renormalized; anything else is rejected.
  explicit CircleMeasure(std::vector<CircleAtom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw InputError("CircleMeasure: no atoms");
    double total = 0.0;
    for (const auto& a : atoms_) {
      if (!(a.weight >= 0.0) || !std::isfinite(a.angle)) throw InputError("CircleMeasure: invalid atom");
      total += a.weight;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw InputError("CircleMeasure: weights sum to " + std::to_string(total) + ", expected 1");
    for (auto& a : atoms_) a.weight /= total;
  }

  /// N equally weighted atoms at the N-th roots of unity. Agrees with Haar
  /// measure on moments of order 0 < |n| < N only.
  static CircleMeasure uniform(int n) {
    std::vector<CircleAtom> atoms;
    for (int j = 0; j < n; ++j) atoms.push_back({2.0 * std::numbers::pi * j / n, 1.0 / n});
    return CircleMeasure(std::move(atoms));
  }

  static CircleMeasure point(double angle) { return CircleMeasure({{angle, 1.0}}); }

  const std::vector<CircleAtom>& atoms() const { return atoms_; }

  /// integral of x^n, x = e^{i angle}.
  cplx moment(int n) const {
    cplx s = 0.0;
    for (const auto& a : atoms_) s += a.weight * std::polar(1.0, n * a.angle);
    return s;
  }

 private:
  std::vector<CircleAtom> atoms_;
};

/// Scalar distribution given by a closed-form moment sequence with
/// |m_n| <= decay^n (decay <= 1).
struct MomentRule {
  std::string name;
  double decay = 1.0;
  double parameter = 0.0;
  std::function<cplx(int)> moment;

  static MomentRule haar() {
    return {"haar", 0.0, 0.0, [](int n) { return n == 0 ? cplx(1.0) : cplx(0.0); }};
  }

  /// Poisson kernel at radius r: m_n = r^n.
  static MomentRule poisson(double r) {
    if (!(r >= 0.0 && r <= 1.0)) throw InputError("MomentRule::poisson: r must lie in [0, 1]");
    return {"poisson", r, r, [r](int n) { return cplx(std::pow(r, n)); }};
  }
};

struct DeltaDist {
  AlgElem u;
};

struct RealizedDist {
  RealizedSpace space;
  AlgElem U;
};

/// Distribution of a unitary random variable with B-valued expectation.
class UnitaryDistribution {
 public:
  using Variant = std::variant<CircleMeasure, MomentRule, DeltaDist, RealizedDist>;

  static UnitaryDistribution circle(CircleMeasure m) { return UnitaryDistribution(Variant(std::move(m))); }
  static UnitaryDistribution moment_rule(MomentRule r) { return UnitaryDistribution(Variant(std::move(r))); }
  static UnitaryDistribution haar() { return moment_rule(MomentRule::haar()); }
  static UnitaryDistribution poisson(double r) { return moment_rule(MomentRule::poisson(r)); }

  static UnitaryDistribution delta(AlgElem u, double tol = kDefaultTol) {
    if (!is_unitary(u, tol)) throw DomainError("delta distribution requires a unitary");
    return UnitaryDistribution(Variant(DeltaDist{std::move(u)}));
  }

  static UnitaryDistribution realized(RealizedSpace space, AlgElem U, double tol = kDefaultTol) {
    if (!(U.shape() == space.ambient_shape())) throw ShapeError("realized distribution: U not in ambient algebra");
    if (!is_unitary(U, tol)) throw DomainError("realized distribution requires a unitary");
    return UnitaryDistribution(Variant(RealizedDist{std::move(space), std::move(U)}));
  }

  const Variant& variant() const { return v_; }

  /// The algebra B the distribution takes values in.
  AlgebraShape base_shape() const {
    return std::visit(
        [](const auto& d) -> AlgebraShape {
          using D = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<D, DeltaDist>)
            return d.u.shape();
          else if constexpr (std::is_same_v<D, RealizedDist>)
            return d.space.base_shape();
          else
            return AlgebraShape::scalar();
        },
        v_);
  }

  bool is_scalar() const { return base_shape().is_scalar(); }

 private:
  explicit UnitaryDistribution(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

namespace detail {

inline AlgElem scalar_elem(cplx c) { return AlgElem(AlgebraShape::scalar(), {CMatrix::Constant(1, 1, c)}); }

inline cplx scalar_value(const AlgElem& a) {
  if (!a.shape().is_scalar()) throw ShapeError("expected an element of C");
  return a.block(0)(0, 0);
}

inline void require_base(const UnitaryDistribution& d, const AlgebraShape& s, const char* what) {
  if (!(d.base_shape() == s))
    throw ShapeError(std::string(what) + ": argument shape " + s.to_string() + " does not match base algebra " +
                     d.base_shape().to_string());
}

}  // namespace detail

/// Phi(U^n); n = 0 gives 1.
inline AlgElem moment(const UnitaryDistribution& dist, int n) {
  if (n < 0) throw DomainError("moment: negative order");
  return std::visit(
      [n](const auto& d) -> AlgElem {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, CircleMeasure>)
          return detail::scalar_elem(d.moment(n));
        else if constexpr (std::is_same_v<D, MomentRule>)
          return detail::scalar_elem(n == 0 ? cplx(1.0) : d.moment(n));
        else if constexpr (std::is_same_v<D, DeltaDist>)
          return power(d.u, n);
        else
          return d.space.apply(power(d.U, n));
      },
      dist.variant());
}

/// Phi((U z)^n) for z in B^{m x m}, with Phi applied entrywise.
inline MatElem power_expectation(const UnitaryDistribution& dist, const MatElem& z, int n) {
  detail::require_base(dist, z.shape(), "power_expectation");
  return std::visit(
      [&](const auto& d) -> MatElem {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, CircleMeasure> || std::is_same_v<D, MomentRule>) {
          const cplx m = (n == 0) ? cplx(1.0) : detail::scalar_value(moment(dist, n));
          return m * power(z, n);
        } else if constexpr (std::is_same_v<D, DeltaDist>) {
          return power(MatElem::diagonal(d.u, z.level()) * z, n);
        } else {
          const MatElem uz = MatElem::diagonal(d.U, z.level()) * d.space.embed(z);
          return d.space.apply(power(uz, n));
        }
      },
      dist.variant());
}

/// Phi(U b1 U b2 ... U bn).
inline AlgElem mixed_moment(const UnitaryDistribution& dist, const std::vector<AlgElem>& bs) {
  if (bs.empty()) throw DomainError("mixed_moment: empty argument list");
  for (const auto& b : bs) detail::require_base(dist, b.shape(), "mixed_moment");
  return std::visit(
      [&](const auto& d) -> AlgElem {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, CircleMeasure> || std::is_same_v<D, MomentRule>) {
          cplx prod = 1.0;
          for (const auto& b : bs) prod *= detail::scalar_value(b);
          return detail::scalar_elem(detail::scalar_value(moment(dist, static_cast<int>(bs.size()))) * prod);
        } else if constexpr (std::is_same_v<D, DeltaDist>) {
          AlgElem out = AlgElem::identity(d.u.shape());
          for (const auto& b : bs) out = out * d.u * b;
          return out;
        } else {
          AlgElem out = AlgElem::identity(d.space.ambient_shape());
          for (const auto& b : bs) out = out * d.U * d.space.embed(b);
          return d.space.apply(out);
        }
      },
      dist.variant());
}

/// Recovers Phi(U b1 ... U bn) as the top-right entry of Phi((U b)^n), where b
/// is the nilpotent (n+1) x (n+1) shift with superdiagonal b1, ..., bn.
inline AlgElem mixed_moment_amplified(const UnitaryDistribution& dist, const std::vector<AlgElem>& bs) {
  if (bs.empty()) throw DomainError("mixed_moment_amplified: empty argument list");
  const AlgebraShape shape = dist.base_shape();
  for (const auto& b : bs) detail::require_base(dist, b.shape(), "mixed_moment_amplified");
  const int n = static_cast<int>(bs.size());
  const int m = n + 1;
  std::vector<AlgElem> entries(static_cast<std::size_t>(m * m), AlgElem::zero(shape));
  for (int j = 0; j < n; ++j) entries[static_cast<std::size_t>(j * m + j + 1)] = bs[static_cast<std::size_t>(j)];
  const MatElem shift = MatElem::from_entries(shape, m, entries);
  return power_expectation(dist, shift, n).entry(0, n);
}

}  // namespace qloewner
