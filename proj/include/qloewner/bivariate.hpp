#pragma once

// Pairs of commuting unitaries (a, b) through X = diag(a, b) over C^{2x2}:
// joint transforms, eta on the triangular ball, and triangularity of flows.

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qloewner/algebra.hpp"
#include "qloewner/expectation.hpp"
#include "qloewner/flow.hpp"
#include "qloewner/herglotz.hpp"
#include "qloewner/transform.hpp"

namespace qloewner {

struct TorusAtom {
  double theta;
  double phi;
  double weight;
};

/// Joint spectral measure of (a, b): atoms at (e^{i theta}, e^{i phi}).
class TorusMeasure {
 public:
  explicit TorusMeasure(std::vector<TorusAtom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw InputError("TorusMeasure: no atoms");
    double total = 0.0;
    for (const auto& a : atoms_) {
      if (!(a.weight >= 0.0) || !std::isfinite(a.theta) || !std::isfinite(a.phi))
        throw InputError("TorusMeasure: weights must be nonnegative and angles finite");
      total += a.weight;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw InputError("TorusMeasure: weights sum to " + std::to_string(total) + ", expected 1");
    for (auto& a : atoms_) a.weight /= total;
  }

  static TorusMeasure point(double theta, double phi) { return TorusMeasure({{theta, phi, 1.0}}); }

  const std::vector<TorusAtom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  CircleMeasure marginal_alpha() const {
    std::vector<CircleAtom> out;
    for (const auto& a : atoms_) out.push_back({a.theta, a.weight});
    return CircleMeasure(std::move(out));
  }

  CircleMeasure marginal_beta() const {
    std::vector<CircleAtom> out;
    for (const auto& a : atoms_) out.push_back({a.phi, a.weight});
    return CircleMeasure(std::move(out));
  }

  /// Phi(a^j b^k).
  cplx moment(int j, int k) const {
    cplx acc = 0.0;
    for (const auto& a : atoms_) acc += a.weight * std::polar(1.0, j * a.theta + k * a.phi);
    return acc;
  }

 private:
  std::vector<TorusAtom> atoms_;
};

/// c = [[z, zeta], [0, w]].
struct TriangularPoint {
  cplx z;
  cplx zeta;
  cplx w;

  MatElem to_matrix() const {
    CMatrix m(2, 2);
    m << z, zeta, 0.0, w;
    return MatElem(AlgebraShape({2}), 1, {m});
  }

  /// Reads the upper triangle; lower_left receives the discarded entry.
  static TriangularPoint from_matrix(const MatElem& c, double* lower_left = nullptr) {
    if (c.block_count() != 1 || c.block(0).rows() != 2) throw ShapeError("TriangularPoint: expects a 2x2 point");
    const CMatrix& m = c.block(0);
    if (lower_left) *lower_left = std::abs(m(1, 0));
    return {m(0, 0), m(0, 1), m(1, 1)};
  }

  double norm() const { return operator_norm(to_matrix()); }
};

inline double distance(const TriangularPoint& a, const TriangularPoint& b) {
  return distance(a.to_matrix(), b.to_matrix());
}

namespace detail {

inline void require_disc(cplx x, const char* what) {
  if (!(std::abs(x) < 1.0)) throw DomainError(std::string(what) + ": argument outside the unit disc");
}

inline void require_triangular_ball(const TriangularPoint& c, const char* what) {
  if (!(c.norm() <= 1.0 - kBallMargin)) throw DomainError(std::string(what) + ": point outside the triangular ball");
}

}  // namespace detail

/// (psi_alpha(z), psi_beta(w)).
inline std::pair<cplx, cplx> psi_marginals(const TorusMeasure& rho, cplx z, cplx w) {
  detail::require_disc(z, "psi_marginals");
  detail::require_disc(w, "psi_marginals");
  cplx pa = 0.0, pb = 0.0;
  for (const auto& a : rho.atoms()) {
    const cplx xz = std::polar(1.0, a.theta) * z;
    const cplx yw = std::polar(1.0, a.phi) * w;
    pa += a.weight * xz / (1.0 - xz);
    pb += a.weight * yw / (1.0 - yw);
  }
  return {pa, pb};
}

/// psi(z, w) = Phi(a (1 - a z)^{-1} (1 - b w)^{-1}).
inline cplx psi_joint(const TorusMeasure& rho, cplx z, cplx w) {
  detail::require_disc(z, "psi_joint");
  detail::require_disc(w, "psi_joint");
  cplx acc = 0.0;
  for (const auto& a : rho.atoms()) {
    const cplx x = std::polar(1.0, a.theta);
    const cplx y = std::polar(1.0, a.phi);
    acc += a.weight * x / ((1.0 - x * z) * (1.0 - y * w));
  }
  return acc;
}

struct TriangularEta {
  TriangularPoint value;
  /// |corner_eta_form - corner_psi_form| / max(1, |corner|)
  double corner_gap = 0.0;
};

/// eta on the triangular ball: diag(eta_alpha(z), eta_beta(w)) with corner
/// zeta (1 - eta_alpha(z)) (1 - eta_beta(w)) psi(z, w), cross-checked against
/// zeta psi(z, w) / ((1 + psi_alpha(z)) (1 + psi_beta(w))).
inline TriangularEta eta_triangular(const TorusMeasure& rho, const TriangularPoint& c) {
  detail::require_triangular_ball(c, "eta_triangular");
  const auto [pa, pb] = psi_marginals(rho, c.z, c.w);
  const cplx pj = psi_joint(rho, c.z, c.w);
  const cplx ea = pa / (1.0 + pa);
  const cplx eb = pb / (1.0 + pb);
  const cplx corner = c.zeta * (1.0 - ea) * (1.0 - eb) * pj;
  const cplx corner_alt = c.zeta * pj / ((1.0 + pa) * (1.0 + pb));
  return {{ea, corner, eb}, std::abs(corner - corner_alt) / std::max(1.0, std::abs(corner))};
}

/// The realized space for diag(a, b): base C^{2x2}, one amplification slot
/// per atom, state weighted by the atom masses.
inline UnitaryDistribution diagonal_embedding(const TorusMeasure& rho) {
  std::vector<double> weights;
  for (const auto& a : rho.atoms()) weights.push_back(a.weight);
  RealizedSpace space(AlgebraShape({2}), weights);
  const auto k = static_cast<Eigen::Index>(rho.size());
  CVector diag(2 * k);
  for (Eigen::Index alpha = 0; alpha < k; ++alpha) {
    const auto& a = rho.atoms()[static_cast<std::size_t>(alpha)];
    diag(alpha) = std::polar(1.0, a.theta);
    diag(k + alpha) = std::polar(1.0, a.phi);
  }
  return UnitaryDistribution::realized(space, AlgElem(space.ambient_shape(), {CMatrix(diag.asDiagonal())}));
}

struct DirectEta {
  TriangularPoint value;
  double lower_left = 0.0;
};

/// eta of X = diag(a, b) evaluated by the generic transform at level 1 over C^{2x2}.
inline DirectEta eta_triangular_direct(const TorusMeasure& rho, const TriangularPoint& c) {
  detail::require_triangular_ball(c, "eta_triangular_direct");
  const MatElem e = eta(diagonal_embedding(rho), c.to_matrix());
  DirectEta out;
  out.value = TriangularPoint::from_matrix(e, &out.lower_left);
  return out;
}

// ---- triangular fields and flows ----

/// h(c) = -p(c) c with p(c) = sum_j w_j (1 + c u_j)(1 - c u_j)^{-1}, u_j = diag(e^{i theta_j}, e^{i phi_j}).
/// Herglotz on the whole ball of C^{2x2}, and upper triangular on triangular points.
inline HerglotzField triangular_p_field(const TorusMeasure& rho) {
  std::vector<PTerm> terms;
  for (const auto& a : rho.atoms()) {
    CMatrix u = CMatrix::Zero(2, 2);
    u(0, 0) = std::polar(1.0, a.theta);
    u(1, 1) = std::polar(1.0, a.phi);
    terms.push_back({MatElem(AlgebraShape({2}), 1, {u}), a.weight});
  }
  return HerglotzField::p_generated(std::move(terms));
}

/// The 1-D fields driving the diagonal entries of a triangular field, when
/// they can be read off: linear, triangular, and p-generated fields whose
/// terms are diagonal 2x2 unitaries.
inline std::optional<std::pair<HerglotzField, HerglotzField>> marginal_fields(const HerglotzField& field) {
  if (std::holds_alternative<LinearField>(field.variant()))
    return std::make_pair(HerglotzField::linear(), HerglotzField::linear());
  if (const auto* t = std::get_if<TriangularField>(&field.variant())) return std::make_pair(*t->alpha, *t->beta);
  if (const auto* pg = std::get_if<PGeneratedField>(&field.variant())) {
    std::vector<CircleAtom> a, b;
    for (const auto& term : pg->terms) {
      if (term.u.level() != 1 || term.u.block_count() != 1 || term.u.block(0).rows() != 2) return std::nullopt;
      const CMatrix& u = term.u.block(0);
      if (std::abs(u(0, 1)) > 1e-14 || std::abs(u(1, 0)) > 1e-14) return std::nullopt;
      a.push_back({-std::arg(u(0, 0)), term.weight});
      b.push_back({-std::arg(u(1, 1)), term.weight});
    }
    return std::make_pair(HerglotzField::circle_driven(CircleMeasure(std::move(a))),
                          HerglotzField::circle_driven(CircleMeasure(std::move(b))));
  }
  return std::nullopt;
}

struct TriangularFlowReport {
  double max_lower_left = 0.0;       ///< along all recorded trajectory states
  double max_marginal_error = -1.0;  ///< diagonal vs 1-D flows; negative when marginals are unknown
  double lower_left_tol = 1e-10;
  double marginal_tol = 1e-9;
  std::size_t samples = 0;
  bool passed() const {
    return max_lower_left <= lower_left_tol && (max_marginal_error < 0.0 || max_marginal_error <= marginal_tol);
  }
};

/// Integrates the level-1 flow over C^{2x2} from triangular points and checks
/// that the lower-left entry stays zero and the diagonal follows the
/// marginal 1-D fields.
inline TriangularFlowReport triangular_flow_check(const HerglotzField& field, const std::vector<TriangularPoint>& samples,
                                                  const std::vector<double>& times, IntegratorSettings settings = {}) {
  const EvolutionFamily fam(field, AlgebraShape({2}), 1, settings);
  const auto marg = marginal_fields(field);
  std::optional<EvolutionFamily> fa, fb;
  if (marg) {
    fa.emplace(marg->first, AlgebraShape::scalar(), 1, settings);
    fb.emplace(marg->second, AlgebraShape::scalar(), 1, settings);
  }
  const auto scalar = [](cplx x) { return MatElem(AlgebraShape::scalar(), 1, {CMatrix::Constant(1, 1, x)}); };
  TriangularFlowReport rep;
  if (marg) rep.max_marginal_error = 0.0;
  for (const auto& c : samples) {
    detail::require_triangular_ball(c, "triangular_flow_check");
    for (double t : times) {
      const EvolveResult r = fam.evolve_detailed(0.0, t, c.to_matrix(), true);
      for (const auto& p : r.trajectory) rep.max_lower_left = std::max(rep.max_lower_left, std::abs(p.value.block(0)(1, 0)));
      if (marg) {
        const CMatrix& m = r.value.block(0);
        const cplx za = fa->evolve(0.0, t, scalar(c.z)).block(0)(0, 0);
        const cplx wb = fb->evolve(0.0, t, scalar(c.w)).block(0)(0, 0);
        rep.max_marginal_error = std::max({rep.max_marginal_error, std::abs(m(0, 0) - za), std::abs(m(1, 1) - wb)});
      }
    }
    ++rep.samples;
  }
  return rep;
}

// ---- moments from transforms ----

/// Phi(a^j b^k) for j + k <= max_total recovered from psi_joint (j >= 1) and
/// psi_beta (j = 0) by discrete Fourier inversion on circles of radius rho_r.
inline std::map<std::pair<int, int>, cplx> joint_moments_from_transforms(const TorusMeasure& rho, int max_total,
                                                                         double radius = 0.5, int samples = 64) {
  if (!(radius > 0.0 && radius < 1.0)) throw DomainError("joint_moments_from_transforms: radius must lie in (0, 1)");
  if (samples < 4 * (max_total + 1)) throw DomainError("joint_moments_from_transforms: too few samples");
  const int K = samples;
  std::vector<cplx> nodes;
  for (int i = 0; i < K; ++i) nodes.push_back(std::polar(radius, 2.0 * std::numbers::pi * i / K));
  const auto unit_root = [K](long e) { return std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(e % K) / K); };

  std::vector<cplx> joint(static_cast<std::size_t>(K * K));
  for (int i = 0; i < K; ++i)
    for (int l = 0; l < K; ++l) joint[static_cast<std::size_t>(i * K + l)] = psi_joint(rho, nodes[i], nodes[l]);
  std::vector<cplx> beta(static_cast<std::size_t>(K));
  for (int l = 0; l < K; ++l) beta[static_cast<std::size_t>(l)] = psi_marginals(rho, 0.0, nodes[l]).second;

  std::map<std::pair<int, int>, cplx> out;
  out[{0, 0}] = 1.0;
  for (int k = 1; k <= max_total; ++k) {
    cplx acc = 0.0;
    for (int l = 0; l < K; ++l) acc += beta[static_cast<std::size_t>(l)] * unit_root(static_cast<long>(k) * l);
    out[{0, k}] = acc / (K * std::pow(radius, k));
  }
  // coefficient of z^p w^q in psi_joint is Phi(a^{p+1} b^q)
  for (int p = 0; p + 1 <= max_total; ++p)
    for (int q = 0; p + 1 + q <= max_total; ++q) {
      cplx acc = 0.0;
      for (int i = 0; i < K; ++i)
        for (int l = 0; l < K; ++l)
          acc += joint[static_cast<std::size_t>(i * K + l)] * unit_root(static_cast<long>(p) * i + static_cast<long>(q) * l);
      out[{p + 1, q}] = acc / (static_cast<double>(K) * K * std::pow(radius, p + q));
    }
  return out;
}

}  // namespace qloewner
