// Acceptance run: one line per criterion, pinned tolerances, exit 1 on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qloewner/cli/runner.hpp"
#include "qloewner/qloewner.hpp"

using namespace qloewner;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

MatElem scalar_point(cplx c) { return MatElem(AlgebraShape::scalar(), 1, {CMatrix::Constant(1, 1, c)}); }

cplx value(const MatElem& z) { return z.block(0)(0, 0); }

/// The fields every flow criterion runs over, with the ball they act on.
struct FlowCase {
  std::string name;
  EvolutionFamily fam;
};

std::vector<FlowCase> flow_cases(Rng& rng) {
  std::vector<FlowCase> out;
  const AlgebraShape s12({1, 2});
  for (const auto& f : constructed_fields(AlgebraShape::scalar(), 1, rng))
    out.push_back({f.name + "@[1]x1", EvolutionFamily(f.field, AlgebraShape::scalar(), 1)});
  for (const auto& f : constructed_fields(s12, 2, rng))
    out.push_back({f.name + "@[1,2]x2", EvolutionFamily(f.field, s12, 2)});
  return out;
}

// 1
Outcome lemma_calc() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  std::size_t failures = 0;
  double roundtrip = 0.0, margin = 1.0;
  for (const AlgebraShape& s : {AlgebraShape({1}), AlgebraShape({2}), AlgebraShape({3}), AlgebraShape({1, 2})}) {
    const LemmaSuiteReport r = lemma_suite(s, 1000, rng);
    failures += r.failures_a + r.failures_b_forward + r.failures_b_converse + r.failures_c + r.failures_d;
    roundtrip = std::max(roundtrip, r.max_roundtrip);
    margin = std::min(margin, r.min_margin);
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && roundtrip <= 1e-12 && margin >= 0.0 && secs < 10.0,
          fmt("failures=%.0f roundtrip=%.3g (<=1e-12) margin=%.3g (>=0) time=%.2fs (<10)", static_cast<double>(failures),
              roundtrip, margin, secs)};
}

// 2
Outcome transform_identities() {
  Rng rng(202);
  const auto haar = UnitaryDistribution::haar();
  double haar_err = 0.0, delta_err = 0.0;
  std::vector<MatElem> pts;
  for (int i = 0; i < 100; ++i) {
    const int level = 1 + i % 3;
    const MatElem z = random_ball_point(AlgebraShape::scalar(), level, 0.95, rng);
    haar_err = std::max({haar_err, operator_norm(eta(haar, z)), operator_norm(psi(haar, z))});
  }
  const AlgebraShape s12({1, 2});
  const AlgElem u = random_unitary(s12, rng);
  const auto delta = UnitaryDistribution::delta(u);
  for (int i = 0; i < 100; ++i) {
    const int level = 1 + i % 2;
    const MatElem z = random_ball_point(s12, level, 0.95, rng);
    delta_err = std::max(delta_err, distance(eta(delta, z), MatElem::diagonal(u, level) * z));
  }
  std::vector<MatElem> scalar_pts, s12_pts;
  for (int i = 0; i < 12; ++i) {
    scalar_pts.push_back(random_ball_point(AlgebraShape::scalar(), 1, 0.9, rng));
    s12_pts.push_back(random_ball_point(s12, 1, 0.9, rng));
  }
  const bool haar_injective = injectivity_probe([&](const MatElem& z) { return eta(haar, z); }, scalar_pts).passed();
  const bool delta_injective = injectivity_probe([&](const MatElem& z) { return eta(delta, z); }, s12_pts).passed();
  return {haar_err <= 1e-14 && delta_err <= 1e-12 && !haar_injective && delta_injective,
          fmt("haar=%.3g (<=1e-14) delta=%.3g (<=1e-12) probe(haar)=%.0f (0) probe(delta)=%.0f (1)", haar_err,
              delta_err, haar_injective, delta_injective)};
}

// 3
Outcome amplification() {
  Rng rng(303);
  const ExpectationSuiteReport r = expectation_suite(200, 5, rng, 1e-12);
  // dense oracle for the realized variant
  double dense = 0.0;
  for (int i = 0; i < 20; ++i) {
    const AlgebraShape base({2});
    const int k = 1 + i % 3;
    std::vector<double> w(static_cast<std::size_t>(k));
    double tot = 0.0;
    for (auto& x : w) tot += (x = 0.2 + rng.uniform());
    for (auto& x : w) x /= tot;
    const RealizedSpace space(base, w);
    const AlgElem U = random_unitary(space.ambient_shape(), rng);
    const auto dist = UnitaryDistribution::realized(space, U);
    std::vector<AlgElem> bs;
    CMatrix prod = CMatrix::Identity(2 * k, 2 * k);
    for (int j = 0; j < 1 + i % 5; ++j) {
      bs.push_back(random_element(base, rng));
      prod = prod * U.block(0) * oracle::lift(bs.back().block(0), k);
    }
    dense = std::max(dense, (mixed_moment_amplified(dist, bs).block(0) - oracle::partial_state(prod, w)).norm());
  }
  return {r.max_amplification_gap <= 1e-12 && dense <= 1e-12,
          fmt("amplified_vs_direct=%.3g dense_oracle=%.3g (<=1e-12) cases=%.0f", r.max_amplification_gap, dense,
              static_cast<double>(r.cases))};
}

// 4
Outcome monotone_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(404);
  double dev = 0.0, naive = 0.0;
  for (int c = 0; c < 100; ++c) {
    const auto mu = UnitaryDistribution::circle(random_circle_measure(rng, 4));
    const auto nu = UnitaryDistribution::circle(random_circle_measure(rng, 4));
    const MomentSequence mm = MomentSequence::of(mu, 8), mn = MomentSequence::of(nu, 8);
    const MomentSequence a = moments_via_composition(mm, mn, 8);
    const MomentSequence b = moments_via_monotone_expansion(mm, mn, 8);
    dev = std::max(dev, max_deviation(a, b));
    const auto o = oracle::monotone_moments(mm.values(), mn.values(), 8);
    for (int n = 1; n <= 8; ++n) naive = std::max(naive, std::abs(a[n] - o[static_cast<std::size_t>(n - 1)]));
  }
  const double secs = seconds_since(t0);
  return {dev <= 1e-10 && naive <= 1e-10 && secs < 30.0,
          fmt("composition_vs_expansion=%.3g naive_series=%.3g (<=1e-10) time=%.2fs (<30)", dev, naive, secs)};
}

// 5
Outcome flow_exactness() {
  Rng rng(505);
  double err = 0.0;
  const std::vector<std::pair<AlgebraShape, int>> spaces = {{AlgebraShape::scalar(), 1}, {AlgebraShape({1, 2}), 2}};
  for (const auto& [shape, level] : spaces) {
    const EvolutionFamily fam(HerglotzField::linear(), shape, level);
    for (int i = 0; i < 20; ++i) {
      const MatElem z = random_ball_point(shape, level, 0.9, rng);
      for (double t : {0.25, 1.0, 2.0, 3.0}) err = std::max(err, distance(fam.evolve(0.0, t, z), std::exp(-t) * z));
    }
  }
  return {err <= 1e-9, fmt("max |v - e^{-t} z| = %.3g (<=1e-9)", err)};
}

// 6
Outcome koebe_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(606);
  const EvolutionFamily fam(HerglotzField::circle_driven(CircleMeasure::point(0.0)), AlgebraShape::scalar(), 1);
  double err = 0.0;
  for (int i = 0; i < 100; ++i) {
    const cplx z = value(random_ball_point(AlgebraShape::scalar(), 1, 0.95, rng));
    const double T = 2.0 * (i + 1) / 100.0;
    err = std::max(err, std::abs(value(fam.evolve(0.0, T, scalar_point(z))) - oracle::koebe_flow(z, T)));
  }
  const double secs = seconds_since(t0);
  return {err <= 1e-7 && secs < 5.0, fmt("max |v_{0,T} - f^{-1}(e^{-T} f)| = %.3g (<=1e-7) time=%.2fs (<5)", err, secs)};
}

// 7
Outcome normalization(const std::vector<FlowCase>& cases) {
  double worst = 0.0;
  for (const auto& c : cases)
    for (double d : {0.1, 0.5, 1.0, 2.0})
      for (double s : {0.0, 0.3})
        worst = std::max(worst, scalar_jacobian_defect(derivative_at_zero(c.fam, s, s + d), std::exp(-d)));
  return {worst <= 1e-5, fmt("max ||Dv_{s,t}(0) - e^{-(t-s)} I|| = %.3g (<=1e-5) over %.0f fields", worst,
                             static_cast<double>(cases.size()))};
}

// 8 and 9 share trajectories
struct SemigroupData {
  double semigroup = 0.0;
  double norm_excess = -1.0;
  long guard_trips = 0;
};

SemigroupData semigroup_data(const std::vector<FlowCase>& cases) {
  SemigroupData out;
  Rng rng(808);
  for (const auto& c : cases) {
    std::vector<MatElem> pts;
    for (int i = 0; i < 50; ++i) pts.push_back(random_ball_point(c.fam.shape(), c.fam.level(), 0.95, rng));
    for (int k = 0; k < 10; ++k) {
      double a = rng.uniform(0.0, 1.5), b = rng.uniform(0.0, 1.5), u = rng.uniform(0.0, 1.5);
      if (a > b) std::swap(a, b);
      if (b > u) std::swap(b, u);
      if (a > b) std::swap(a, b);
      for (const auto& z : pts) {
        const EvolveResult su = c.fam.evolve_detailed(a, u, z);
        const EvolveResult st = c.fam.evolve_detailed(a, b, z);
        const EvolveResult tu = c.fam.evolve_detailed(b, u, st.value);
        out.semigroup = std::max(out.semigroup, distance(su.value, tu.value));
        for (const EvolveResult* r : {&su, &st})
          out.norm_excess = std::max(out.norm_excess, r->max_norm_excess);
        out.guard_trips += su.stats.guard_trips + st.stats.guard_trips + tu.stats.guard_trips;
      }
    }
  }
  return out;
}

// 10
Outcome starlike_identities() {
  Rng rng(1010);
  // analytic pair
  const auto f = [](const MatElem& z) { return scalar_point(oracle::koebe(value(z))); };
  const auto h = [](const MatElem& z) { return scalar_point(oracle::koebe_field(value(z))); };
  std::vector<MatElem> pts;
  for (int i = 0; i < 50; ++i) pts.push_back(random_ball_point(AlgebraShape::scalar(), 1, 0.7, rng));
  const double analytic = starlike_pde_check(f, h, pts, 1e-8).max_error;
  // numerically obtained f0 for several autonomous fields
  double identity = 0.0, numeric = 0.0;
  const AlgebraShape s12({1, 2});
  const std::vector<EvolutionFamily> fams = {
      EvolutionFamily(HerglotzField::circle_driven(CircleMeasure::point(0.0)), AlgebraShape::scalar(), 1),
      EvolutionFamily(random_circle_driven(rng), AlgebraShape::scalar(), 1),
      EvolutionFamily(random_p_generated(s12, 1, 2, rng), s12, 1)};
  for (const auto& fam : fams) {
    std::vector<MatElem> zs;
    for (int i = 0; i < 8; ++i) zs.push_back(random_ball_point(fam.shape(), 1, 0.6, rng));
    const MapFn f0 = starlike_map(fam);
    identity = std::max(identity, starlike_identity_check(fam, f0, 1.0, zs).max_error);
    numeric = std::max(numeric, starlike_pde_check(f0, at_time(fam.field(), 0.0), zs, 1e-5).max_error);
  }
  return {analytic <= 1e-8 && identity <= 1e-6 && numeric <= 1e-5,
          fmt("pde(analytic)=%.3g (<=1e-8) identity=%.3g (<=1e-6) pde(numeric f0)=%.3g (<=1e-5)", analytic, identity,
              numeric)};
}

// 11
Outcome herglotz_membership() {
  Rng rng(1111);
  std::size_t bad = 0, fields = 0, anti_missed = 0;
  const std::vector<std::pair<AlgebraShape, int>> spaces = {
      {AlgebraShape::scalar(), 1}, {AlgebraShape({2}), 1}, {AlgebraShape({1, 2}), 2}};
  for (const auto& [shape, level] : spaces) {
    auto named = constructed_fields(shape, level, rng);
    if (shape == AlgebraShape({2}))
      named.push_back({"triangular_p", triangular_p_field(TorusMeasure({{0.4, -1.0, 0.5}, {2.0, 0.7, 0.5}}))});
    const HerglotzSuiteReport r = herglotz_suite(named, shape, level, 500, rng);
    for (const auto& m : r.reports) bad += m.passed() ? 0 : 1;
    fields += r.reports.size();
    anti_missed += r.anti_field.samples - r.anti_field.violations;
  }
  return {bad == 0 && anti_missed == 0,
          fmt("failing fields=%.0f of %.0f, anti-field accepted at %.0f samples (both 0)", static_cast<double>(bad),
              static_cast<double>(fields), static_cast<double>(anti_missed))};
}

// 12
Outcome infinitesimal_arrays() {
  Rng rng(1212);
  const double T = 1.0;
  // exact law for the linear field
  double exact = 0.0;
  const AlgebraShape s12({1, 2});
  const EvolutionFamily lin(HerglotzField::linear(), s12, 1);
  for (int n : {4, 16}) {
    const ArraySchedule a = array_build(lin, T, n);
    for (int i = 0; i < 10; ++i) {
      const MatElem z = random_ball_point(s12, 1, 0.9, rng);
      double sup = 0.0;
      for (int j = 1; j <= n; ++j) sup = std::max(sup, distance(a.eta(j, z), z));
      exact = std::max(exact, std::abs(sup - (-std::expm1(-T / n)) * operator_norm(z)));
    }
  }
  // p-generated field
  const EvolutionFamily pg(random_p_generated(s12, 1, 3, rng), s12, 1);
  std::vector<MatElem> pts;
  for (int i = 0; i < 4; ++i) pts.push_back(random_ball_point(s12, 1, 0.7, rng));
  const ArraySweep sw = array_sweep(pg, T, {8, 16, 32, 64}, 0.7, pts, rng);
  double ratio = 1e300, comp = 0.0;
  for (double r : sw.ratios) ratio = std::min(ratio, r);
  for (const auto& row : sw.rows) comp = std::max(comp, row.composition_error);
  return {exact <= 1e-10 && sw.decreasing() && ratio >= 1.7 && comp <= 1e-6,
          fmt("linear law=%.3g (<=1e-10) min ratio=%.4g (>=1.7) composition=%.3g (<=1e-6) decreasing=%.0f", exact, ratio,
              comp, sw.decreasing())};
}

// 13
Outcome bivariate() {
  Rng rng(1313);
  double agree = 0.0, lower = 0.0;
  for (int c = 0; c < 100; ++c) {
    std::vector<TorusAtom> atoms;
    const int n = 1 + static_cast<int>(rng.below(4));
    for (int i = 0; i < n; ++i) atoms.push_back({rng.uniform(-3.1, 3.1), rng.uniform(-3.1, 3.1), 0.1 + rng.uniform()});
    double tot = 0.0;
    for (const auto& a : atoms) tot += a.weight;
    for (auto& a : atoms) a.weight /= tot;
    const TorusMeasure rho(atoms);
    TriangularPoint p{rng.complex_normal(), rng.complex_normal(), rng.complex_normal()};
    const double s = rng.uniform(0.05, 0.95) / p.norm();
    p = {s * p.z, s * p.zeta, s * p.w};
    const DirectEta d = eta_triangular_direct(rho, p);
    agree = std::max(agree, distance(eta_triangular(rho, p).value, d.value));
    lower = std::max(lower, d.lower_left);
  }
  const TorusMeasure id = TorusMeasure::point(0.0, 0.0);
  const TriangularPoint c{cplx(0.3, -0.2), cplx(0.1, 0.4), cplx(-0.5, 0.1)};
  const double identity = std::max(distance(eta_triangular(id, c).value, c), distance(eta_triangular_direct(id, c).value, c));
  return {agree <= 1e-10 && lower <= 1e-12 && identity <= 1e-14,
          fmt("formula_vs_direct=%.3g (<=1e-10) lower_left=%.3g (<=1e-12) delta_at_identity=%.3g (<=1e-14)", agree,
              lower, identity)};
}

// 14
Outcome coefficients() {
  Rng rng(1414);
  const auto f = [](const MatElem& z) { return scalar_point(oracle::koebe(value(z))); };
  const CoefficientReport k = coefficient_extract(f, AlgebraShape::scalar(), 12, 0.5);
  double err = 0.0, extremal = 0.0;
  for (int n = 1; n <= 12; ++n) {
    err = std::max(err, std::abs(value(as_matrix(k.coefficients[static_cast<std::size_t>(n - 1)])) - oracle::koebe_coefficient(n)));
    extremal = std::max(extremal, std::abs(k.ratios[static_cast<std::size_t>(n - 1)] - 1.0));
  }
  // eta of flow-embedded distributions: v_{0,t} of p-generated fields
  double worst = 0.0;
  const AlgebraShape s12({1, 2});
  for (int i = 0; i < 3; ++i) {
    const EvolutionFamily fam(random_p_generated(s12, 1, 2, rng), s12, 1);
    const SemigroupTransforms st = semigroup_transforms(fam, {0.5}, {});
    const CoefficientReport c = coefficient_extract(st.transforms[0].map(), s12, 8, 0.5);
    for (double r : c.ratios) worst = std::max(worst, r);
  }
  return {err <= 1e-8 && extremal <= 1e-8 && worst <= 1.0 + 1e-6,
          fmt("|A_n - (-1)^{n-1} n|=%.3g (<=1e-8) | ||A_n||/n - 1 |=%.3g flow-embedded max ratio=%.8f (<=1+1e-6)", err,
              extremal, worst)};
}

// 15
Outcome determinism() {
  const std::string data = QLOEWNER_DEMO_DATA;
  const std::vector<std::pair<std::string, Json>> runs = {
      {"verify lemma-calc", {{"n", 50}}},
      {"verify expectation", {{"n", 20}}},
      {"verify herglotz", {{"samples", 20}}},
      {"eval-transform", {{"dist", data + "/mu_two_atoms.json"}, {"samples", 5}}},
      {"convolve", {{"mu", data + "/mu_two_atoms.json"}, {"nu", data + "/nu_poisson.json"}, {"N", 6}}},
      {"flow", {{"field", data + "/field_p_generated.json"}, {"level", 2}, {"samples", 2}}},
      {"semigroup", {{"field", data + "/field_circle.json"}, {"samples", 3}}},
      {"starlike", {{"field", data + "/field_circle.json"}, {"samples", 2}}},
      {"array-limit", {{"field", data + "/field_circle.json"}, {"samples", 2}, {"n", "8,16"}}},
      {"bivariate", {{"measure", data + "/torus.json"}, {"samples", 3}}},
      {"bieberbach", {{"field", data + "/field_circle.json"}, {"N", 4}}},
  };
  std::size_t differing = 0, failed = 0;
  for (const auto& [command, params] : runs)
    for (const std::string format : {"csv", "json"}) {
      cli::ExperimentConfig cfg;
      cfg.command = command;
      cfg.params = params;
      cfg.seed = 15;
      cfg.format = format;
      const cli::RunOutcome a = cli::run(cfg), b = cli::run(cfg);
      if (a.rendered != b.rendered || plotdata_csv(a.report.series) != plotdata_csv(b.report.series)) ++differing;
      if (a.exit_code != cli::kExitPass) ++failed;
    }
  return {differing == 0 && failed == 0,
          fmt("reports differing=%.0f, runs not passing=%.0f over %.0f subcommands x 2 formats",
              static_cast<double>(differing), static_cast<double>(failed), static_cast<double>(runs.size()))};
}

}  // namespace

int main() {
  Rng field_rng(700);
  const std::vector<FlowCase> cases = flow_cases(field_rng);
  std::optional<SemigroupData> sg;
  const auto semigroup_cached = [&]() -> const SemigroupData& {
    if (!sg) sg = semigroup_data(cases);
    return *sg;
  };
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"lemma-calc suite", lemma_calc},
      {"transform identities", transform_identities},
      {"amplification", amplification},
      {"monotone convolution oracles", monotone_oracles},
      {"flow exactness", flow_exactness},
      {"radial closed-form oracle", koebe_oracle},
      {"normalization", [&] { return normalization(cases); }},
      {"semigroup",
       [&] {
         const double e = semigroup_cached().semigroup;
         return Outcome{e <= 1e-7, fmt("max ||v_{s,u} - v_{t,u} o v_{s,t}|| = %.3g (<=1e-7), 50 samples x 10 triples x %.0f fields",
                                       e, static_cast<double>(cases.size()))};
       }},
      {"ball invariance",
       [&] {
         const SemigroupData& d = semigroup_cached();
         return Outcome{d.norm_excess <= 1e-9 && d.guard_trips == 0,
                        fmt("max ||v|| - ||z|| = %.3g (<=1e-9) guard trips=%.0f (0)", d.norm_excess,
                            static_cast<double>(d.guard_trips))};
       }},
      {"starlike identities", starlike_identities},
      {"herglotz membership", herglotz_membership},
      {"infinitesimal arrays", infinitesimal_arrays},
      {"bivariate", bivariate},
      {"coefficient experiment", coefficients},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %2zu %-30s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
