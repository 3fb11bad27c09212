// Herglotz fields, the integrator, evolution families, starlike limits and
// infinitesimal arrays.

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qloewner/qloewner.hpp"

using namespace qloewner;

namespace {

MatElem scalar_point(cplx c) { return MatElem(AlgebraShape::scalar(), 1, {CMatrix::Constant(1, 1, c)}); }
cplx value(const MatElem& z) { return z.block(0)(0, 0); }

const EvolutionFamily& koebe_family() {
  static const EvolutionFamily fam(HerglotzField::circle_driven(CircleMeasure::point(0.0)), AlgebraShape::scalar(), 1);
  return fam;
}

}  // namespace

// ---- fields ----

TEST(Herglotz, CircleDrivenPointMassIsKoebeField) {
  Rng rng(1);
  const HerglotzField h = HerglotzField::circle_driven(CircleMeasure::point(0.0));
  for (int i = 0; i < 20; ++i) {
    const cplx z = value(random_ball_point(AlgebraShape::scalar(), 1, 0.95, rng));
    EXPECT_LE(std::abs(value(h.eval(scalar_point(z), 0.0)) - oracle::koebe_field(z)), 1e-14);
  }
}

TEST(Herglotz, PGeneratedMatchesDefinition) {
  Rng rng(2);
  const AlgebraShape s({1, 2});
  const MatElem u = random_unitary(s, 2, rng);
  const HerglotzField h = HerglotzField::p_generated({{u, 1.0}});
  const MatElem z = random_ball_point(s, 2, 0.8, rng);
  const MatElem one = MatElem::identity(s, 2);
  const MatElem expect = -1.0 * (right_divide(one + z * u, one - z * u) * z);
  EXPECT_LE(distance(h.eval(z, 0.0), expect), 1e-13);
}

TEST(Herglotz, PGeneratedValidatesTerms) {
  Rng rng(3);
  const MatElem u = random_unitary(AlgebraShape({2}), 1, rng);
  EXPECT_THROW(HerglotzField::p_generated({{u, 0.5}}), Error);                  // weights sum to 1/2
  EXPECT_THROW(HerglotzField::p_generated({{2.0 * u, 1.0}}), Error);            // not unitary
  EXPECT_THROW(HerglotzField::p_generated(std::vector<PTerm>{}), Error);
}

TEST(Herglotz, PiecewiseSwitchesAtBreaks) {
  const HerglotzField pw = HerglotzField::piecewise({0.5}, {HerglotzField::linear(), koebe_family().field()});
  const MatElem z = scalar_point(0.3);
  EXPECT_EQ(value(pw.eval(z, 0.2)), cplx(-0.3));
  EXPECT_LE(std::abs(value(pw.eval(z, 0.7)) - oracle::koebe_field(0.3)), 1e-15);
  EXPECT_EQ(pw.breakpoints(), std::vector<double>{0.5});
  EXPECT_FALSE(pw.is_autonomous());
}

TEST(HerglotzProperty, ConstructedFieldsAreMembersAndAntiFieldIsNot) {
  Rng rng(4);
  for (const auto& [shape, level] : std::vector<std::pair<AlgebraShape, int>>{{AlgebraShape({2}), 1}, {AlgebraShape({1, 2}), 2}}) {
    const HerglotzSuiteReport r = herglotz_suite(constructed_fields(shape, level, rng), shape, level, 100, rng);
    for (std::size_t i = 0; i < r.reports.size(); ++i) EXPECT_TRUE(r.reports[i].passed()) << r.names[i];
    EXPECT_TRUE(r.anti_rejected_everywhere());
  }
}

TEST(Herglotz, TriangularFieldNormalizedOnlyForUnitCornerRate) {
  Rng rng(5);
  const AlgebraShape s({2});
  std::vector<MatElem> pts;
  for (int i = 0; i < 100; ++i) pts.push_back(random_ball_point(s, 1, 0.95, rng));
  const auto alpha = HerglotzField::circle_driven(CircleMeasure::point(0.4));
  const auto ok = membership_check(HerglotzField::triangular(alpha, HerglotzField::linear(), 1.0), 0.0, s, 1, pts, rng);
  EXPECT_TRUE(ok.passed());
  const auto off = membership_check(HerglotzField::triangular(alpha, HerglotzField::linear(), 0.5), 0.0, s, 1, pts, rng);
  EXPECT_EQ(off.violations, 0u);
  EXPECT_NEAR(off.derivative_defect, 0.5, 1e-8);
  EXPECT_FALSE(off.passed());
}

TEST(Herglotz, SupportFunctionalsOfDegenerateTopSingularValue) {
  Rng rng(6);
  const MatElem z = 0.5 * MatElem::identity(AlgebraShape({2}), 1);
  const auto set = support_functionals(z, rng);
  EXPECT_TRUE(set.degenerate);
  for (const auto& l : set.functionals) EXPECT_NEAR(std::abs(l(z) - cplx(0.5)), 0.0, 1e-12);
}

TEST(Herglotz, DifferenceQuotientRecoversField) {
  Rng rng(7);
  const AlgebraShape s({1, 2});
  const HerglotzField h = random_p_generated(s, 1, 2, rng);
  const EvolutionFamily fam(h, s, 1);
  const MatElem z = random_ball_point(s, 1, 0.6, rng);
  const DifferenceQuotient q = difference_quotient_field(fam, 0.3, 1e-4, z);
  EXPECT_LE(distance(q.quotient, h.eval(z, 0.3)), 1e-3);
  EXPECT_LE(distance(q.g_decreasing, h.eval(z, 0.3)), 1e-3);
  EXPECT_THROW(difference_quotient_field(fam, 0.3, 0.5, z), DomainError);
}

TEST(Herglotz, ClassBoundOfLinearFieldIsRadius) {
  Rng rng(8);
  const std::vector<MapFn> fields = {at_time(HerglotzField::linear(), 0.0)};
  EXPECT_NEAR(class_bound_estimate(fields, AlgebraShape({1, 2}), 2, 0.7, 20, rng).value, 0.7, 1e-12);
}

// ---- integrator ----

TEST(Integrator, ExponentialDecayToTolerance) {
  const Rhs f = [](double, const MatElem& y) { return -1.0 * y; };
  IntegrationStats stats;
  const MatElem y = integrate(f, 0.0, 2.0, scalar_point(0.5), IntegratorSettings{}, &stats);
  EXPECT_LE(std::abs(value(y) - 0.5 * std::exp(-2.0)), 1e-11);
  EXPECT_GT(stats.accepted, 0);
  EXPECT_EQ(stats.guard_trips, 0);
}

TEST(Integrator, BlowUpIsReported) {
  const Rhs f = [](double, const MatElem& y) { return y * y; };
  IntegratorSettings s;
  s.ball_guard = false;
  s.max_steps = 10000;
  EXPECT_THROW(integrate(f, 0.0, 3.0, scalar_point(1.0), s), IntegrationError);
}

// ---- evolution families ----

TEST(Flow, LinearFieldScalesExactly) {
  Rng rng(9);
  const AlgebraShape s({1, 2});
  const EvolutionFamily fam(HerglotzField::linear(), s, 2);
  const MatElem z = random_ball_point(s, 2, 0.9, rng);
  EXPECT_LE(distance(fam.evolve(0.5, 2.0, z), std::exp(-1.5) * z), 1e-10);
  EXPECT_LE(distance(fam.evolve_decreasing(0.5, 2.0, z), std::exp(-1.5) * z), 1e-10);
  EXPECT_EQ(distance(fam.evolve(1.0, 1.0, z), z), 0.0);
}

TEST(Flow, KoebeClosedForm) {
  Rng rng(10);
  for (int i = 0; i < 30; ++i) {
    const cplx z = value(random_ball_point(AlgebraShape::scalar(), 1, 0.95, rng));
    const double T = rng.uniform(0.0, 2.0);
    EXPECT_LE(std::abs(value(koebe_family().evolve(0.0, T, scalar_point(z))) - oracle::koebe_flow(z, T)), 1e-8);
  }
}

TEST(Flow, DecreasingConventionMatchesForwardForAutonomousFields) {
  Rng rng(11);
  const AlgebraShape s({1, 2});
  const EvolutionFamily fam(random_p_generated(s, 1, 2, rng), s, 1);
  const MatElem z = random_ball_point(s, 1, 0.8, rng);
  EXPECT_LE(distance(fam.evolve(0.0, 0.7, z), fam.evolve_decreasing(0.0, 0.7, z)), 1e-9);
}

TEST(Flow, DecreasingFamilyComposesBackward) {
  // f_{s,u} = f_{s,t} o f_{t,u} for a time-dependent field
  Rng rng(12);
  const AlgebraShape s({1, 2});
  const EvolutionFamily fam(HerglotzField::piecewise({0.4}, {random_p_generated(s, 1, 2, rng), HerglotzField::linear()}), s, 1);
  const MatElem z = random_ball_point(s, 1, 0.8, rng);
  const MatElem direct = fam.evolve_decreasing(0.0, 1.0, z);
  const MatElem composed = fam.evolve_decreasing(0.0, 0.6, fam.evolve_decreasing(0.6, 1.0, z));
  EXPECT_LE(distance(direct, composed), 1e-9);
}

TEST(FlowProperty, SemigroupSchwarzAndNormalization) {
  Rng rng(13);
  for (const auto& f : constructed_fields(AlgebraShape({1, 2}), 1, rng)) {
    const EvolutionFamily fam(f.field, AlgebraShape({1, 2}), 1);
    std::vector<MatElem> pts;
    for (int i = 0; i < 5; ++i) pts.push_back(random_ball_point(fam.shape(), 1, 0.95, rng));
    EXPECT_TRUE(semigroup_check(fam, 0.1, 0.6, 1.3, pts).passed()) << f.name;
    for (const auto& z : pts) {
      const EvolveResult r = fam.evolve_detailed(0.0, 1.3, z, true);
      EXPECT_LE(r.max_norm_excess, 1e-9) << f.name;
      EXPECT_EQ(r.stats.guard_trips, 0);
      for (const auto& p : r.trajectory) EXPECT_LE(operator_norm(p.value), operator_norm(z) + 1e-9);
    }
    EXPECT_LE(scalar_jacobian_defect(derivative_at_zero(fam, 0.2, 0.7), std::exp(-0.5)), 1e-5) << f.name;
  }
}

TEST(Flow, RejectsBadArguments) {
  const EvolutionFamily& fam = koebe_family();
  EXPECT_THROW(fam.evolve(1.0, 0.5, scalar_point(0.1)), DomainError);
  EXPECT_THROW(fam.evolve(0.0, 1.0, scalar_point(1.0)), DomainError);
  EXPECT_THROW(fam.evolve(0.0, 1.0, MatElem::zero(AlgebraShape({2}), 1)), ShapeError);
}

TEST(Flow, InjectivityAndLipschitzInTime) {
  Rng rng(14);
  std::vector<MatElem> pts;
  for (int i = 0; i < 8; ++i) pts.push_back(random_ball_point(AlgebraShape::scalar(), 1, 0.9, rng));
  EXPECT_TRUE(injectivity_probe(koebe_family().map(0.0, 1.0), pts).passed());
  const LipschitzReport lr = lipschitz_in_time_check(koebe_family(), 0.0, scalar_point(0.5), {0.1, 0.3, 0.6, 1.0}, 0.6, 50, rng);
  EXPECT_TRUE(lr.passed()) << lr.max_ratio;
}

TEST(Flow, ChainNestingAndLocalInverse) {
  Rng rng(15);
  std::vector<MatElem> pts;
  for (int i = 0; i < 4; ++i) pts.push_back(random_ball_point(AlgebraShape::scalar(), 1, 0.7, rng));
  EXPECT_TRUE(chain_nesting_check(koebe_family(), 0.3, 1.0, pts).passed());
  // Newton recovers z from f(z) for the Koebe map
  const auto f = [](const MatElem& z) { return scalar_point(oracle::koebe(value(z))); };
  const InverseResult inv = local_inverse(f, f(scalar_point(cplx(0.2, 0.3))), scalar_point(0.1));
  EXPECT_TRUE(inv.converged);
  EXPECT_LE(std::abs(value(inv.solution) - cplx(0.2, 0.3)), 1e-10);
}

// ---- starlike limits and coefficients ----

TEST(Starlike, KoebeLimitIsTheKoebeMap) {
  Rng rng(16);
  const MapFn f0 = starlike_map(koebe_family());
  for (int i = 0; i < 10; ++i) {
    const cplx z = value(random_ball_point(AlgebraShape::scalar(), 1, 0.8, rng));
    EXPECT_LE(std::abs(value(f0(scalar_point(z))) - oracle::koebe(z)), 1e-8);
  }
}

TEST(Starlike, NonAutonomousFieldRejected) {
  const EvolutionFamily fam(HerglotzField::piecewise({1.0}, {HerglotzField::linear(), koebe_family().field()}),
                            AlgebraShape::scalar(), 1);
  EXPECT_THROW(starlike_limit(fam, scalar_point(0.2)), DomainError);
}

TEST(Starlike, LinearFieldGivesIdentity) {
  Rng rng(17);
  const EvolutionFamily fam(HerglotzField::linear(), AlgebraShape({1, 2}), 1);
  const MatElem z = random_ball_point(fam.shape(), 1, 0.9, rng);
  EXPECT_LE(distance(starlike_map(fam)(z), z), 1e-10);
}

TEST(Coefficients, KoebeAndDftGuards) {
  const auto f = [](const MatElem& z) { return scalar_point(oracle::koebe(value(z))); };
  const CoefficientReport c = coefficient_extract(f, AlgebraShape::scalar(), 12, 0.5);
  for (int n = 1; n <= 12; ++n)
    EXPECT_LE(std::abs(value(as_matrix(c.coefficients[n - 1])) - oracle::koebe_coefficient(n)), 1e-8);
  EXPECT_THROW(coefficient_extract(f, AlgebraShape::scalar(), 12, 0.5, 20), DomainError);
  EXPECT_THROW(coefficient_extract(f, AlgebraShape::scalar(), 4, 1.0), DomainError);
}

// ---- semigroups and arrays ----

TEST(Arrays, SemigroupTransformsComposeAdditively) {
  Rng rng(18);
  std::vector<MatElem> pts;
  for (int i = 0; i < 3; ++i) pts.push_back(random_ball_point(AlgebraShape::scalar(), 1, 0.8, rng));
  const SemigroupTransforms st = semigroup_transforms(koebe_family(), {0.2, 0.5}, pts);
  EXPECT_TRUE(st.passed()) << st.composition_error << " " << st.derivative_defect;
}

TEST(Arrays, RowCompositionIsTheTransitionMap) {
  Rng rng(19);
  const AlgebraShape s({1, 2});
  const EvolutionFamily fam(HerglotzField::piecewise({0.3}, {random_p_generated(s, 1, 2, rng), random_circle_driven(rng)}), s, 1);
  const ArraySchedule a = array_build(fam, 1.0, 5);
  const MatElem z = random_ball_point(s, 1, 0.6, rng);
  EXPECT_LE(distance(a.compose_row(z), fam.evolve(0.0, 1.0, z)), 1e-9);
  EXPECT_EQ(a.end(5), 1.0);
}

TEST(Arrays, LinearDeviationLaw) {
  Rng rng(20);
  const EvolutionFamily fam(HerglotzField::linear(), AlgebraShape::scalar(), 1);
  for (int n : {2, 8}) {
    const ArraySchedule a = array_build(fam, 2.0, n);
    const MatElem z = scalar_point(cplx(0.3, -0.4));
    double sup = 0.0;
    for (int j = 1; j <= n; ++j) sup = std::max(sup, distance(a.eta(j, z), z));
    EXPECT_NEAR(sup, -std::expm1(-2.0 / n) * 0.5, 1e-10);
  }
  EXPECT_THROW(array_build(fam, 0.0, 4), DomainError);
  EXPECT_THROW(array_build(fam, 1.0, 0), DomainError);
}
