#pragma once

// Randomized property suites shared by the CLI verify subcommands and the
// test binaries: the Cayley-transform lemma, conditional-expectation axioms
// with moment recovery by amplification, and Herglotz membership sweeps.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "qloewner/algebra.hpp"
#include "qloewner/expectation.hpp"
#include "qloewner/herglotz.hpp"
#include "qloewner/random.hpp"

namespace qloewner {

// ---- random distributions and fields ----

inline CircleMeasure random_circle_measure(Rng& rng, int max_atoms) {
  const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_atoms)));
  std::vector<CircleAtom> atoms;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    atoms.push_back({rng.uniform(-std::numbers::pi, std::numbers::pi), 0.05 + rng.uniform()});
    total += atoms.back().weight;
  }
  for (auto& a : atoms) a.weight /= total;
  return CircleMeasure(std::move(atoms));
}

inline UnitaryDistribution random_realized(const AlgebraShape& base, int k, Rng& rng) {
  const RealizedSpace space(base, k);
  return UnitaryDistribution::realized(space, random_unitary(space.ambient_shape(), rng));
}

/// Element of norm exactly `norm` in a random direction.
template <BlockLike T>
T random_with_norm(const T& like, double norm, Rng& rng) {
  std::vector<CMatrix> blocks;
  for (const auto& b : like.blocks()) blocks.push_back(random_gaussian(b.rows(), b.cols(), rng));
  const T x = like.with_blocks(std::move(blocks));
  return (norm / operator_norm(x)) * x;
}

/// p-generated field with `terms` random unitaries of the given level (level-1
/// unitaries when lift_from_base is set) and random weights.
inline HerglotzField random_p_generated(const AlgebraShape& shape, int level, int terms, Rng& rng,
                                        bool lift_from_base = false) {
  std::vector<PTerm> out;
  double total = 0.0;
  for (int i = 0; i < terms; ++i) {
    const MatElem u = lift_from_base ? as_matrix(random_unitary(shape, rng)) : random_unitary(shape, level, rng);
    out.push_back({u, 0.1 + rng.uniform()});
    total += out.back().weight;
  }
  for (auto& t : out) t.weight /= total;
  return HerglotzField::p_generated(std::move(out));
}

inline HerglotzField random_circle_driven(Rng& rng, int max_atoms = 3) {
  return HerglotzField::circle_driven(random_circle_measure(rng, max_atoms));
}

// ---- Cayley-transform lemma ----

struct LemmaSuiteReport {
  AlgebraShape shape = AlgebraShape::scalar();
  std::size_t cases = 0;
  std::size_t failures_a = 0;          ///< Re a > 0 but a not invertible or Re(a^{-1}) not > 0
  std::size_t failures_b_forward = 0;  ///< ||a|| < 1 but 1 - aa* not > 0
  std::size_t failures_b_converse = 0; ///< ||a|| > 1 but 1 - aa* > 0
  std::size_t failures_c = 0;          ///< Re a > 0 but ||(1-a)(1+a)^{-1}|| >= 1
  std::size_t failures_d = 0;          ///< ||w|| < 1 but Re((1-w)(1+w)^{-1}) not > 0
  double max_roundtrip = 0.0;          ///< relative Cayley round-trip error, both directions
  double min_margin = std::numeric_limits<double>::infinity();  ///< smallest positivity margin over tol
  double roundtrip_tol = 1e-12;
  std::size_t failures() const { return failures_a + failures_b_forward + failures_b_converse + failures_c + failures_d; }
  bool passed() const { return failures() == 0 && max_roundtrip <= roundtrip_tol; }
};

inline LemmaSuiteReport lemma_suite(const AlgebraShape& shape, std::size_t n, Rng& rng, double tol = kDefaultTol,
                                    double roundtrip_tol = 1e-12) {
  LemmaSuiteReport r;
  r.shape = shape;
  r.roundtrip_tol = roundtrip_tol;
  const AlgElem zero = AlgElem::zero(shape);
  const AlgElem one = AlgElem::identity(shape);
  const auto margin = [&](double m) { r.min_margin = std::min(r.min_margin, m - tol); };
  for (std::size_t i = 0; i < n; ++i) {
    ++r.cases;
    // (a)
    const AlgElem a = random_positive_real_part(zero, rng);
    try {
      const AlgElem inv = inverse(a);
      const double m = min_re_eigenvalue(inv);
      margin(m);
      if (!(distance(a * inv, one) <= 1e-10) || !is_strictly_positive(re_part(inv), tol)) ++r.failures_a;
    } catch (const SingularError&) {
      ++r.failures_a;
    }
    // (b), both directions
    const AlgElem inside = random_with_norm(zero, rng.uniform(0.001, 0.999), rng);
    const AlgElem gap_in = one - inside * adjoint(inside);
    margin(min_re_eigenvalue(gap_in));
    if (!is_strictly_positive(gap_in, tol)) ++r.failures_b_forward;
    const AlgElem outside = random_with_norm(zero, rng.uniform(1.001, 3.0), rng);
    if (is_strictly_positive(one - outside * adjoint(outside), tol)) ++r.failures_b_converse;
    // (c) and its round trip
    try {
      const AlgElem w = cayley_halfplane_to_ball(a, tol);
      if (!(operator_norm(w) < 1.0)) ++r.failures_c;
      r.max_roundtrip =
          std::max(r.max_roundtrip, distance(cayley_ball_to_halfplane(w), a) / std::max(1.0, operator_norm(a)));
    } catch (const DomainError&) {
      ++r.failures_c;
    }
    // (d) and its round trip
    const AlgElem b = random_with_norm(zero, rng.uniform(0.0, 0.999), rng);
    const AlgElem h = cayley_ball_to_halfplane(b);
    margin(min_re_eigenvalue(h));
    if (!is_strictly_positive(re_part(h), tol)) ++r.failures_d;
    try {
      r.max_roundtrip = std::max(r.max_roundtrip, distance(cayley_halfplane_to_ball(h, tol), b));
    } catch (const DomainError&) {
      ++r.failures_d;
    }
  }
  return r;
}

// ---- conditional expectations and mixed moments ----

struct ExpectationSuiteReport {
  std::size_t cases = 0;
  double max_amplification_gap = 0.0;  ///< mixed_moment vs mixed_moment_amplified
  double max_unital = 0.0;             ///< ||Phi(1) - 1||
  double min_positivity = std::numeric_limits<double>::infinity();  ///< min eig Phi(a*a)
  double max_bimodule = 0.0;           ///< ||Phi(b a b') - b Phi(a) b'||
  double max_contractivity = 0.0;      ///< max(||Phi(a)|| - ||a||, 0)
  double max_adjoint = 0.0;            ///< ||Phi(a*) - Phi(a)*||
  double max_right_module = 0.0;       ///< ||Phi(U b) - Phi(U) b||
  double max_k1_vs_delta = 0.0;        ///< realized with k = 1 against delta
  double tol = 1e-12;
  bool passed() const {
    return max_amplification_gap <= tol && max_unital <= tol && min_positivity >= -tol && max_bimodule <= tol &&
           max_contractivity <= tol && max_adjoint <= tol && max_right_module <= tol && max_k1_vs_delta <= tol;
  }
};

/// `cases` random trials cycling through every distribution variant, with
/// argument lists of length 1..max_order of norm-one elements.
inline ExpectationSuiteReport expectation_suite(std::size_t cases, int max_order, Rng& rng, double tol = 1e-12) {
  ExpectationSuiteReport r;
  r.tol = tol;
  const std::vector<AlgebraShape> shapes = {AlgebraShape({1}), AlgebraShape({2}), AlgebraShape({1, 2})};
  for (std::size_t i = 0; i < cases; ++i) {
    ++r.cases;
    const int n = 1 + static_cast<int>(i % static_cast<std::size_t>(max_order));
    const std::size_t variant = (i / static_cast<std::size_t>(max_order)) % 5;
    const AlgebraShape shape = variant < 3 ? AlgebraShape::scalar() : shapes[rng.below(shapes.size())];
    UnitaryDistribution dist = UnitaryDistribution::haar();
    switch (variant) {
      case 0: dist = UnitaryDistribution::circle(random_circle_measure(rng, 4)); break;
      case 1: dist = UnitaryDistribution::poisson(rng.uniform(0.0, 0.95)); break;
      case 2: dist = UnitaryDistribution::haar(); break;
      case 3: dist = UnitaryDistribution::delta(random_unitary(shape, rng)); break;
      default: dist = random_realized(shape, 1 + static_cast<int>(rng.below(3)), rng); break;
    }
    std::vector<AlgElem> bs;
    for (int j = 0; j < n; ++j) bs.push_back(random_with_norm(AlgElem::zero(shape), 1.0, rng));
    r.max_amplification_gap =
        std::max(r.max_amplification_gap, distance(mixed_moment(dist, bs), mixed_moment_amplified(dist, bs)));

    if (const auto* rd = std::get_if<RealizedDist>(&dist.variant())) {
      const RealizedSpace& sp = rd->space;
      const AlgElem one = AlgElem::identity(sp.ambient_shape());
      r.max_unital = std::max(r.max_unital, distance(sp.apply(one), AlgElem::identity(shape)));
      const AlgElem a = random_with_norm(one, 1.0, rng);
      const AlgElem pa = sp.apply(a);
      r.min_positivity = std::min(r.min_positivity, min_re_eigenvalue(sp.apply(adjoint(a) * a)));
      const AlgElem b = random_element(shape, rng);
      const AlgElem b2 = random_element(shape, rng);
      r.max_bimodule = std::max(r.max_bimodule, distance(sp.apply(sp.embed(b) * a * sp.embed(b2)), b * pa * b2) /
                                                    std::max(1.0, operator_norm(b) * operator_norm(b2)));
      r.max_contractivity = std::max(r.max_contractivity, operator_norm(pa) - operator_norm(a));
      r.max_adjoint = std::max(r.max_adjoint, distance(sp.apply(adjoint(a)), adjoint(pa)));
      r.max_right_module = std::max(r.max_right_module,
                                    distance(sp.apply(rd->U * sp.embed(b)), sp.apply(rd->U) * b) / std::max(1.0, operator_norm(b)));
    }
    // realized with k = 1 against delta at the same unitary
    const AlgElem u = random_unitary(shape, rng);
    const auto k1 = UnitaryDistribution::realized(RealizedSpace(shape, 1), u);
    r.max_k1_vs_delta = std::max(r.max_k1_vs_delta, distance(mixed_moment(k1, bs), mixed_moment(UnitaryDistribution::delta(u), bs)));
  }
  return r;
}

// ---- Herglotz membership ----

struct NamedField {
  std::string name;
  HerglotzField field;
};

/// One field of each constructible variant for the given algebra and level.
inline std::vector<NamedField> constructed_fields(const AlgebraShape& shape, int level, Rng& rng) {
  std::vector<NamedField> out;
  out.push_back({"linear", HerglotzField::linear()});
  out.push_back({"p_generated", random_p_generated(shape, level, 3, rng)});
  out.push_back({"p_generated_lifted", random_p_generated(shape, level, 2, rng, true)});
  out.push_back({"circle_driven", random_circle_driven(rng)});
  out.push_back({"piecewise", HerglotzField::piecewise({0.5}, {random_p_generated(shape, level, 2, rng), random_circle_driven(rng)})});
  return out;
}

struct HerglotzSuiteReport {
  std::vector<std::string> names;
  std::vector<MembershipReport> reports;
  MembershipReport anti_field;  ///< h(z) = +z; expected to fail at every sample
  bool anti_rejected_everywhere() const { return anti_field.violations == anti_field.samples; }
  bool passed() const {
    for (const auto& r : reports)
      if (!r.passed()) return false;
    return anti_rejected_everywhere();
  }
};

inline HerglotzSuiteReport herglotz_suite(const std::vector<NamedField>& fields, const AlgebraShape& shape, int level,
                                          std::size_t samples, Rng& rng, double t = 0.0) {
  std::vector<MatElem> pts;
  for (std::size_t i = 0; i < samples; ++i) pts.push_back(random_ball_point(shape, level, 0.95, rng));
  HerglotzSuiteReport out;
  for (const auto& f : fields) {
    out.names.push_back(f.name);
    out.reports.push_back(membership_check(f.field, t, shape, level, pts, rng));
  }
  out.anti_field = membership_check([](const MatElem& z) { return z; }, shape, level, pts, rng);
  return out;
}

}  // namespace qloewner
