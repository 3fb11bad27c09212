#pragma once

// Moment generating function psi(z) = Phi(Uz(1 - Uz)^{-1}) and the
// eta-transform eta = psi(1 + psi)^{-1} on the balls of B^{m x m}.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qloewner/algebra.hpp"
#include "qloewner/calculus.hpp"
#include "qloewner/expectation.hpp"

namespace qloewner {

/// Points must satisfy ||z|| <= 1 - margin.
inline constexpr double kBallMargin = 1e-9;
/// Lower bound of Re(psi) on the ball.
inline constexpr double kHalfSpaceConstant = -0.5;

inline void require_in_ball(const MatElem& z, double margin, const char* what) {
  const double n = operator_norm(z);
  if (!(n <= 1.0 - margin))
    throw DomainError(std::string(what) + ": point of norm " + std::to_string(n) + " outside the ball");
}

namespace detail {

/// x (1 - x)^{-1}
inline MatElem resolvent_ratio(const MatElem& x) { return right_divide(x, identity_like(x) - x); }

/// Terms needed so that q^{N+1}/(1-q) <= eps.
inline int series_terms(double q, double eps, int cap) {
  if (q <= 0.0) return 0;
  if (q >= 1.0) throw DomainError("series: ratio >= 1, no convergence");
  const double n = std::ceil(std::log(eps * (1.0 - q)) / std::log(q));
  if (!(n <= cap)) throw DomainError("series: truncation order exceeds cap");
  return std::max(0, static_cast<int>(n));
}

}  // namespace detail

/// Closed-form psi. MomentRule distributions are summed as a power series
/// truncated once the tail bound drops below 1e-17.
inline MatElem psi(const UnitaryDistribution& dist, const MatElem& z, double margin = kBallMargin) {
  detail::require_base(dist, z.shape(), "psi");
  require_in_ball(z, margin, "psi");
  return std::visit(
      [&](const auto& d) -> MatElem {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, CircleMeasure>) {
          MatElem acc = zero_like(z);
          for (const auto& a : d.atoms()) acc = acc + a.weight * detail::resolvent_ratio(std::polar(1.0, a.angle) * z);
          return acc;
        } else if constexpr (std::is_same_v<D, MomentRule>) {
          const int terms = detail::series_terms(d.decay * operator_norm(z), 1e-17, 10'000'000);
          MatElem acc = zero_like(z);
          MatElem zn = z;
          for (int n = 1; n <= terms; ++n) {
            acc = acc + d.moment(n) * zn;
            zn = zn * z;
          }
          return acc;
        } else if constexpr (std::is_same_v<D, DeltaDist>) {
          return detail::resolvent_ratio(MatElem::diagonal(d.u, z.level()) * z);
        } else {
          const MatElem uz = MatElem::diagonal(d.U, z.level()) * d.space.embed(z);
          return d.space.apply(detail::resolvent_ratio(uz));
        }
      },
      dist.variant());
}

/// Truncated series sum_{n=1}^{N} Phi((Uz)^n).
inline MatElem psi_series(const UnitaryDistribution& dist, const MatElem& z, int order) {
  MatElem acc = zero_like(z);
  for (int n = 1; n <= order; ++n) acc = acc + power_expectation(dist, z, n);
  return acc;
}

/// ||psi(z) - psi_series(z, N)|| <= ||z||^{N+1} / (1 - ||z||) by contractivity of Phi.
inline double psi_series_tail_bound(double norm, int order) { return std::pow(norm, order + 1) / (1.0 - norm); }

/// eta = psi (1 + psi)^{-1}.
inline MatElem eta_from_psi(const MatElem& p) { return right_divide(p, identity_like(p) + p); }

/// psi = eta (1 - eta)^{-1}.
inline MatElem psi_from_eta(const MatElem& e) { return right_divide(e, identity_like(e) - e); }

inline MatElem eta(const UnitaryDistribution& dist, const MatElem& z, double margin = kBallMargin) {
  return eta_from_psi(psi(dist, z, margin));
}

struct RangeReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double threshold = kHalfSpaceConstant;
  /// min over samples of the smallest eigenvalue of Re(psi) - threshold.
  double min_margin = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> violating_samples;
  bool passed() const { return violations == 0; }
};

/// Verifies Re(psi(z)) - threshold * 1 > 0 at every sample.
inline RangeReport psi_range_check(const UnitaryDistribution& dist, const std::vector<MatElem>& samples,
                                   double threshold = kHalfSpaceConstant) {
  RangeReport r;
  r.threshold = threshold;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const MatElem p = psi(dist, samples[i]);
    const double margin = min_re_eigenvalue(p) - threshold;
    r.min_margin = std::min(r.min_margin, margin);
    ++r.samples;
    if (!(margin > 0.0)) {
      ++r.violations;
      r.violating_samples.push_back(i);
    }
  }
  return r;
}

/// D eta(0) is left multiplication by Phi(U).
inline AlgElem eta_derivative_at_zero(const UnitaryDistribution& dist) { return moment(dist, 1); }

/// Largest ||D eta(0)[E] - Phi(U) E|| over coordinate directions E at the given level.
inline double eta_derivative_defect(const UnitaryDistribution& dist, int level, double step = 1e-5) {
  const AlgebraShape shape = dist.base_shape();
  const MatElem zero = MatElem::zero(shape, level);
  const MatElem lift = MatElem::diagonal(eta_derivative_at_zero(dist), level);
  const auto f = [&](const MatElem& z) { return eta(dist, z); };
  double out = 0.0;
  for (std::size_t c = 0; c < zero.coordinate_count(); ++c) {
    const MatElem e = coordinate_unit(zero, c);
    out = std::max(out, distance(central_difference(f, zero, e, step), lift * e));
  }
  return out;
}

/// Level-polymorphic eta evaluator: either a distribution's transform or any
/// normalized self-map of the balls (e.g. a flow map v_{s,t}).
class TransformHandle {
 public:
  TransformHandle(std::string label, MapFn eta_map) : label_(std::move(label)), eta_(std::move(eta_map)) {}

  static TransformHandle of(const UnitaryDistribution& dist, std::string label = "distribution") {
    TransformHandle h(std::move(label), [dist](const MatElem& z) { return qloewner::eta(dist, z); });
    h.source_ = dist;
    return h;
  }

  static TransformHandle identity() {
    return TransformHandle("identity", [](const MatElem& z) { return z; });
  }

  MatElem eta(const MatElem& z) const { return eta_(z); }
  MatElem psi(const MatElem& z) const { return psi_from_eta(eta_(z)); }
  MatElem operator()(const MatElem& z) const { return eta_(z); }

  const std::string& label() const { return label_; }
  const std::optional<UnitaryDistribution>& source() const { return source_; }
  const MapFn& map() const { return eta_; }

 private:
  std::string label_;
  MapFn eta_;
  std::optional<UnitaryDistribution> source_;
};

}  // namespace qloewner
