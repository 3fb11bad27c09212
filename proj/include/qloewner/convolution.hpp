#pragma once

// Multiplicative monotone convolution: eta_{mu |> nu} = eta_mu o eta_nu, its
// scalar moment pipelines, convolution semigroups generated by autonomous
// fields, and infinitesimal arrays cut from evolution families.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "qloewner/algebra.hpp"
#include "qloewner/expectation.hpp"
#include "qloewner/flow.hpp"
#include "qloewner/random.hpp"
#include "qloewner/series.hpp"
#include "qloewner/transform.hpp"

namespace qloewner {

/// Scalar moments m_1, ..., m_N of a unitary distribution over C.
class MomentSequence {
 public:
  explicit MomentSequence(std::vector<cplx> values, double tol = 1e-12) : m_(std::move(values)) {
    for (std::size_t n = 0; n < m_.size(); ++n)
      if (!(std::abs(m_[n]) <= 1.0 + tol))
        throw InputError("MomentSequence: |m_" + std::to_string(n + 1) + "| exceeds 1");
  }

  static MomentSequence of(const UnitaryDistribution& dist, int N) {
    if (!dist.is_scalar()) throw ShapeError("MomentSequence: distribution must live over C");
    std::vector<cplx> m;
    for (int n = 1; n <= N; ++n) m.push_back(detail::scalar_value(moment(dist, n)));
    return MomentSequence(std::move(m));
  }

  int size() const { return static_cast<int>(m_.size()); }
  /// m_n, 1-based.
  cplx operator[](int n) const { return m_.at(static_cast<std::size_t>(n - 1)); }
  const std::vector<cplx>& values() const { return m_; }

 private:
  std::vector<cplx> m_;
};

inline double max_deviation(const MomentSequence& a, const MomentSequence& b) {
  if (a.size() != b.size()) throw ShapeError("max_deviation: length mismatch");
  double out = 0.0;
  for (int n = 1; n <= a.size(); ++n) out = std::max(out, std::abs(a[n] - b[n]));
  return out;
}

// ---- convolution of transforms ----

/// eta_mu o eta_nu; mu's transform is applied outermost.
inline TransformHandle convolve(const TransformHandle& mu, const TransformHandle& nu) {
  return TransformHandle("(" + mu.label() + " |> " + nu.label() + ")",
                         [f = mu.map(), g = nu.map()](const MatElem& z) { return f(g(z)); });
}

inline TransformHandle convolve(const UnitaryDistribution& mu, const UnitaryDistribution& nu) {
  return convolve(TransformHandle::of(mu, "mu"), TransformHandle::of(nu, "nu"));
}

// ---- scalar moment pipelines ----

/// moments -> psi -> eta, eta_mu o eta_nu, -> psi -> moments, in the
/// coefficient ring T. Exact when T is exact.
template <class T>
std::vector<T> moments_via_composition(const std::vector<T>& mu, const std::vector<T>& nu, int N) {
  if (N < 1) throw DomainError("moments_via_composition: N must be >= 1");
  const auto eta_mu = eta_of_psi(TruncatedSeries<T>::from_moments(N, mu));
  const auto eta_nu = eta_of_psi(TruncatedSeries<T>::from_moments(N, nu));
  return psi_of_eta(compose(eta_mu, eta_nu)).tail();
}

inline MomentSequence moments_via_composition(const MomentSequence& mu, const MomentSequence& nu, int N) {
  if (N > mu.size() || N > nu.size()) throw DomainError("moments_via_composition: N exceeds available moments");
  return MomentSequence(moments_via_composition(mu.values(), nu.values(), N), 1e-9);
}

inline constexpr int kMaxExpansionOrder = 20;

/// Calls visit(parts) for every composition of n into k positive parts, in
/// lexicographic order.
template <class Visit>
void for_each_composition(int n, int k, Visit&& visit) {
  if (k < 1 || n < k) return;
  std::vector<int> parts(static_cast<std::size_t>(k), 1);
  parts.back() = n - k + 1;
  while (true) {
    visit(static_cast<const std::vector<int>&>(parts));
    // rightmost i >= 1 whose suffix parts[i..k-1] exceeds its length
    int suffix = 0;
    int i = k - 1;
    for (; i >= 1; --i) {
      suffix += parts[static_cast<std::size_t>(i)];
      if (suffix > k - i) break;
    }
    if (i < 1) return;
    ++parts[static_cast<std::size_t>(i - 1)];
    const int remaining = suffix - 1;
    for (int j = i; j < k; ++j) parts[static_cast<std::size_t>(j)] = 1;
    parts.back() = remaining - (k - 1 - i);
  }
}

/// Independent oracle from the monotone factorization:
/// m_n(mu |> nu) = sum_k c_k(mu) sum_{n_1+...+n_k = n} prod_i m_{n_i}(nu),
/// c_k(mu) = Phi(U (U - 1)^{k-1}) = sum_j C(k-1, j) (-1)^{k-1-j} m_{j+1}(mu).
template <class T>
std::vector<T> moments_via_monotone_expansion(const std::vector<T>& mu, const std::vector<T>& nu, int N) {
  if (N < 1) throw DomainError("moments_via_monotone_expansion: N must be >= 1");
  if (N > kMaxExpansionOrder) throw DomainError("moments_via_monotone_expansion: N > 20 rejected");
  if (static_cast<int>(mu.size()) < N || static_cast<int>(nu.size()) < N)
    throw DomainError("moments_via_monotone_expansion: N exceeds available moments");
  std::vector<T> c(static_cast<std::size_t>(N) + 1, T(0));
  for (int k = 1; k <= N; ++k) {
    long long binom = 1;  // C(k-1, j)
    T acc(0);
    for (int j = 0; j <= k - 1; ++j) {
      const T term = T(binom) * mu[static_cast<std::size_t>(j)];
      acc = ((k - 1 - j) % 2 == 0) ? acc + term : acc - term;
      binom = binom * (k - 1 - j) / (j + 1);
    }
    c[static_cast<std::size_t>(k)] = acc;
  }
  std::vector<T> out;
  for (int n = 1; n <= N; ++n) {
    T total(0);
    for (int k = 1; k <= n; ++k) {
      T inner(0);
      for_each_composition(n, k, [&](const std::vector<int>& parts) {
        T prod(1);
        for (int p : parts) prod = prod * nu[static_cast<std::size_t>(p - 1)];
        inner = inner + prod;
      });
      total = total + c[static_cast<std::size_t>(k)] * inner;
    }
    out.push_back(total);
  }
  return out;
}

inline MomentSequence moments_via_monotone_expansion(const MomentSequence& mu, const MomentSequence& nu, int N) {
  return MomentSequence(moments_via_monotone_expansion(mu.values(), nu.values(), N), 1e-9);
}

// ---- convolution semigroups ----

struct SemigroupTransforms {
  std::vector<double> times;
  std::vector<TransformHandle> transforms;  ///< eta_t = v_{0,t}
  double composition_error = 0.0;           ///< max ||v_{0,t+s} - eta_t o eta_s||
  double derivative_defect = 0.0;           ///< max ||D eta_t(0) - e^{-t} I||
  std::size_t checks = 0;
  bool passed(double comp_tol = 1e-7, double deriv_tol = 1e-5) const {
    return composition_error <= comp_tol && derivative_defect <= deriv_tol;
  }
};

/// eta_{mu_t} := v_{0,t} for an autonomous field, with the one-parameter law
/// eta_{t+s} = eta_t o eta_s checked on every pair of listed times.
inline SemigroupTransforms semigroup_transforms(const EvolutionFamily& fam, const std::vector<double>& times,
                                                const std::vector<MatElem>& samples) {
  if (!fam.field().is_autonomous()) throw DomainError("semigroup_transforms: field must be autonomous");
  SemigroupTransforms out;
  out.times = times;
  for (double t : times) {
    out.transforms.emplace_back("eta_t=" + std::to_string(t), fam.map(0.0, t));
    out.derivative_defect = std::max(
        out.derivative_defect, scalar_jacobian_defect(derivative_at_zero(fam, 0.0, t), std::exp(-t)));
  }
  for (std::size_t i = 0; i < times.size(); ++i)
    for (std::size_t j = i; j < times.size(); ++j)
      for (const auto& z : samples) {
        const MatElem direct = fam.evolve(0.0, times[i] + times[j], z);
        const MatElem composed = out.transforms[i](out.transforms[j](z));
        out.composition_error = std::max(out.composition_error, distance(direct, composed));
        ++out.checks;
      }
  return out;
}

// ---- infinitesimal arrays ----

/// Row n of the array mu_{n,j} = law of the increment over [(j-1)T/n, jT/n].
struct ArraySchedule {
  EvolutionFamily family;
  double horizon;
  int n;

  double start(int j) const { return (j - 1) * horizon / n; }
  double end(int j) const { return j == n ? horizon : j * horizon / n; }
  MatElem eta(int j, const MatElem& z) const { return family.evolve(start(j), end(j), z); }
  /// eta_{n,n} o ... o eta_{n,1}: the factors applied in time order, which
  /// reproduces v_{0,T} through the semigroup law.
  MatElem compose_row(const MatElem& z) const {
    MatElem y = z;
    for (int j = 1; j <= n; ++j) y = eta(j, y);
    return y;
  }
};

inline ArraySchedule array_build(const EvolutionFamily& fam, double T, int n) {
  if (!(T > 0.0)) throw DomainError("array_build: horizon must be positive");
  if (n < 1) throw DomainError("array_build: n must be >= 1");
  return ArraySchedule{fam, T, n};
}

struct ArrayReport {
  int n = 0;
  double sup_deviation = 0.0;    ///< sup_{j, z} ||eta_{n,j}(z) - z||
  double deviation_bound = 0.0;  ///< (1 - e^{-T/n}) M(r) slack
  double class_bound = 0.0;      ///< estimated M(r)
  double composition_error = 0.0;
  double composition_tol = 1e-6;
  bool bound_ok() const { return sup_deviation <= deviation_bound; }
  bool composition_ok() const { return composition_error <= composition_tol; }
  bool passed() const { return bound_ok() && composition_ok(); }
};

/// Checks (i) the uniform bound on ||eta_{n,j}(z) - z|| for ||z|| <= r and (ii)
/// the row composition against v_{0,T}. `class_bound` <= 0 requests an
/// estimate from frozen fields on a time grid.
inline ArrayReport array_check(const ArraySchedule& a, double r, const std::vector<MatElem>& samples, Rng& rng,
                               double class_bound = 0.0, double slack = 1.1, double composition_tol = 1e-6) {
  if (!(r > 0.0 && r < 1.0)) throw DomainError("array_check: r must lie in (0, 1)");
  ArrayReport rep;
  rep.n = a.n;
  rep.composition_tol = composition_tol;
  if (class_bound <= 0.0) {
    std::vector<MapFn> frozen;
    const int grid = a.family.field().is_autonomous() ? 1 : 33;
    for (int i = 0; i < grid; ++i) frozen.push_back(at_time(a.family.field(), a.horizon * i / std::max(1, grid - 1)));
    class_bound = class_bound_estimate(frozen, a.family.shape(), a.family.level(), r, 200, rng).value;
  }
  rep.class_bound = class_bound;
  rep.deviation_bound = -std::expm1(-a.horizon / a.n) * class_bound * slack;
  for (const auto& z : samples) {
    if (operator_norm(z) > r + 1e-15) throw DomainError("array_check: sample norm exceeds r");
    MatElem y = z;
    for (int j = 1; j <= a.n; ++j) {
      const MatElem next = a.eta(j, y);
      rep.sup_deviation = std::max(rep.sup_deviation, distance(a.eta(j, z), z));
      y = next;
    }
    rep.composition_error = std::max(rep.composition_error, distance(y, a.family.evolve(0.0, a.horizon, z)));
  }
  return rep;
}

/// Deviation sequence over several n with per-doubling ratios.
struct ArraySweep {
  std::vector<ArrayReport> rows;
  std::vector<double> ratios;  ///< sup_deviation[i] / sup_deviation[i+1]
  bool decreasing() const {
    for (std::size_t i = 0; i + 1 < rows.size(); ++i)
      if (!(rows[i + 1].sup_deviation < rows[i].sup_deviation)) return false;
    return true;
  }
};

inline ArraySweep array_sweep(const EvolutionFamily& fam, double T, const std::vector<int>& ns, double r,
                              const std::vector<MatElem>& samples, Rng& rng, double composition_tol = 1e-6) {
  ArraySweep out;
  double bound = 0.0;
  for (int n : ns) {
    ArrayReport rep = array_check(array_build(fam, T, n), r, samples, rng, bound, 1.1, composition_tol);
    bound = rep.class_bound;
    out.rows.push_back(rep);
  }
  for (std::size_t i = 0; i + 1 < out.rows.size(); ++i)
    out.ratios.push_back(out.rows[i].sup_deviation / out.rows[i + 1].sup_deviation);
  return out;
}

}  // namespace qloewner
