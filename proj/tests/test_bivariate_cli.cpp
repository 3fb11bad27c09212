// Bivariate triangular reduction, JSON input, reports and the experiment runner.

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "qloewner/cli/runner.hpp"
#include "qloewner/qloewner.hpp"

using namespace qloewner;

namespace {

const std::string kData = QLOEWNER_DEMO_DATA;

TorusMeasure random_torus(Rng& rng, int max_atoms = 4) {
  std::vector<TorusAtom> atoms;
  const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_atoms)));
  double tot = 0.0;
  for (int i = 0; i < n; ++i) {
    atoms.push_back({rng.uniform(-3.1, 3.1), rng.uniform(-3.1, 3.1), 0.1 + rng.uniform()});
    tot += atoms.back().weight;
  }
  for (auto& a : atoms) a.weight /= tot;
  return TorusMeasure(atoms);
}

TriangularPoint random_triangular(Rng& rng, double max_norm) {
  TriangularPoint p{rng.complex_normal(), rng.complex_normal(), rng.complex_normal()};
  const double s = rng.uniform(0.01, max_norm) / p.norm();
  return {s * p.z, s * p.zeta, s * p.w};
}

MatElem scalar_point(cplx c) { return MatElem(AlgebraShape::scalar(), 1, {CMatrix::Constant(1, 1, c)}); }

cli::RunOutcome run(const std::string& command, Json params, std::optional<std::uint64_t> seed = 5,
                    const std::string& format = "csv") {
  cli::ExperimentConfig cfg;
  cfg.command = command;
  cfg.params = std::move(params);
  cfg.seed = seed;
  cfg.format = format;
  return cli::run(cfg);
}

}  // namespace

// ---- bivariate ----

TEST(Bivariate, TorusValidation) {
  EXPECT_THROW(TorusMeasure({{0.0, 0.0, 0.5}, {1.0, 1.0, 0.4}}), InputError);
  EXPECT_THROW(TorusMeasure({}), InputError);
  const TorusMeasure m({{0.1, 0.2, 0.3}, {0.4, 0.5, 0.7}});
  EXPECT_NEAR(std::abs(m.moment(2, 1) - (0.3 * std::polar(1.0, 0.4) + 0.7 * std::polar(1.0, 1.3))), 0.0, 1e-15);
}

TEST(Bivariate, DeltaAtIdentityFixesEveryPoint) {
  Rng rng(1);
  const TorusMeasure id = TorusMeasure::point(0.0, 0.0);
  for (int i = 0; i < 20; ++i) {
    const TriangularPoint c = random_triangular(rng, 0.95);
    EXPECT_LE(distance(eta_triangular(id, c).value, c), 1e-14);
    EXPECT_LE(distance(eta_triangular_direct(id, c).value, c), 1e-14);
  }
}

TEST(BivariateProperty, MarginalConsistencyAndInvariance) {
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const TorusMeasure rho = random_torus(rng);
    const TriangularPoint c = random_triangular(rng, 0.95);
    const TriangularEta e = eta_triangular(rho, c);
    const auto ea = eta(UnitaryDistribution::circle(rho.marginal_alpha()), scalar_point(c.z));
    const auto eb = eta(UnitaryDistribution::circle(rho.marginal_beta()), scalar_point(c.w));
    EXPECT_LE(std::abs(e.value.z - ea.block(0)(0, 0)), 1e-13);
    EXPECT_LE(std::abs(e.value.w - eb.block(0)(0, 0)), 1e-13);
    EXPECT_LE(e.value.norm(), c.norm() + 1e-12);
    const DirectEta d = eta_triangular_direct(rho, c);
    EXPECT_LE(d.lower_left, 1e-12);
    EXPECT_LE(distance(d.value, e.value), 1e-10);
  }
}

TEST(BivariateProperty, CornerIsLinearInZeta) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const TorusMeasure rho = random_torus(rng);
    TriangularPoint c = random_triangular(rng, 0.5);
    const cplx base = eta_triangular(rho, c).value.zeta;
    const cplx lambda(0.6, -0.3);
    c.zeta *= lambda;
    EXPECT_LE(std::abs(eta_triangular(rho, c).value.zeta - lambda * base), 1e-13 * (1.0 + std::abs(base)));
  }
}

TEST(BivariateProperty, EmbeddingReproducesJointMoments) {
  Rng rng(4);
  for (int i = 0; i < 5; ++i) {
    const TorusMeasure rho = random_torus(rng);
    for (const auto& [jk, v] : joint_moments_from_transforms(rho, 4))
      EXPECT_LE(std::abs(v - rho.moment(jk.first, jk.second)), 1e-10) << jk.first << "," << jk.second;
  }
}

TEST(BivariateFlow, LinearFieldScalesTriangularPoints) {
  Rng rng(5);
  std::vector<TriangularPoint> pts = {random_triangular(rng, 0.9), random_triangular(rng, 0.9)};
  const TriangularFlowReport r = triangular_flow_check(HerglotzField::linear(), pts, {0.5, 2.0});
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.max_lower_left, 0.0);
  const EvolutionFamily fam(HerglotzField::linear(), AlgebraShape({2}), 1);
  EXPECT_LE(distance(fam.evolve(0.0, 2.0, pts[0].to_matrix()), std::exp(-2.0) * pts[0].to_matrix()), 1e-10);
}

TEST(BivariateFlow, DiagonalFollowsKoebeWithoutCornerCoupling) {
  const auto koebe = HerglotzField::circle_driven(CircleMeasure::point(0.0));
  const HerglotzField f = HerglotzField::triangular(koebe, koebe, 0.0);
  const TriangularPoint c{cplx(0.3, 0.1), cplx(0.2, 0.0), cplx(-0.4, 0.2)};
  const EvolutionFamily fam(f, AlgebraShape({2}), 1);
  const CMatrix m = fam.evolve(0.0, 1.5, c.to_matrix()).block(0);
  EXPECT_LE(std::abs(m(0, 0) - oracle::koebe_flow(c.z, 1.5)), 1e-8);
  EXPECT_LE(std::abs(m(1, 1) - oracle::koebe_flow(c.w, 1.5)), 1e-8);
  EXPECT_LE(std::abs(m(0, 1) - c.zeta), 1e-10);  // zero coupling: the corner is frozen
  EXPECT_EQ(m(1, 0), cplx(0.0));
}

TEST(BivariateFlow, TorusDrivenFieldStaysTriangular) {
  Rng rng(6);
  const TorusMeasure rho = random_torus(rng, 3);
  std::vector<TriangularPoint> pts;
  for (int i = 0; i < 4; ++i) pts.push_back(random_triangular(rng, 0.9));
  const TriangularFlowReport r = triangular_flow_check(triangular_p_field(rho), pts, {0.3, 1.0});
  EXPECT_LE(r.max_lower_left, 1e-10);
  EXPECT_GE(r.max_marginal_error, 0.0);
  EXPECT_LE(r.max_marginal_error, 1e-9);
  // the field recovered from the flow by a difference quotient is triangular too
  const EvolutionFamily fam(triangular_p_field(rho), AlgebraShape({2}), 1);
  const DifferenceQuotient q = difference_quotient_field(fam, 0.0, 1e-3, pts[0].to_matrix());
  EXPECT_LE(std::abs(q.g_decreasing.block(0)(1, 0)), 1e-10);
}

TEST(Bivariate, OutsideTriangularBallRejected) {
  const TorusMeasure rho = TorusMeasure::point(0.1, 0.2);
  EXPECT_THROW(eta_triangular(rho, {cplx(0.9), cplx(0.9), cplx(0.0)}), DomainError);
}

// ---- JSON input ----

TEST(JsonIo, ParsesEveryDistributionKind) {
  using json_io::distribution_from_json;
  EXPECT_TRUE(distribution_from_json(json_io::read_file(kData + "/mu_two_atoms.json")).is_scalar());
  EXPECT_TRUE(distribution_from_json(Json::parse(R"({"type":"moment_rule","rule":"haar"})")).is_scalar());
  const auto delta = distribution_from_json(Json::parse(R"({"type":"delta","u":{"shape":[1,2],
      "blocks":[[[[0,1]]], [[0,1],[1,0]]]}})"));
  EXPECT_EQ(delta.base_shape(), AlgebraShape({1, 2}));
  const auto realized = distribution_from_json(Json::parse(R"({"type":"realized","shape":[1],"k":2,"state":[0.25,0.75],
      "U":{"shape":[2],"blocks":[[[0,1],[1,0]]]}})"));
  EXPECT_NEAR(std::abs(detail::scalar_value(moment(realized, 2)) - 1.0), 0.0, 1e-15);
}

TEST(JsonIo, RejectsMalformedInput) {
  using json_io::distribution_from_json;
  EXPECT_THROW(distribution_from_json(json_io::read_file(kData + "/bad_weights.json")), InputError);
  EXPECT_THROW(distribution_from_json(Json::parse(R"({"type":"circle","atoms":[],"extra":1})")), InputError);
  EXPECT_THROW(distribution_from_json(Json::parse(R"({"type":"nope"})")), InputError);
  EXPECT_THROW(distribution_from_json(Json::parse(R"({"type":"delta","u":{"shape":[2],"blocks":[[[2,0],[0,1]]]}})")),
               InputError);
  EXPECT_THROW(json_io::field_from_json(Json::parse(R"({"type":"linear","typo":1})")), InputError);
  EXPECT_THROW(json_io::read_file(kData + "/does_not_exist.json"), InputError);
}

TEST(JsonIo, FieldsRoundTripThroughEvaluation) {
  for (const char* f : {"field_linear.json", "field_circle.json", "field_p_generated.json", "field_piecewise.json",
                        "field_triangular.json"})
    EXPECT_NO_THROW(json_io::field_from_json(json_io::read_file(kData + "/" + f))) << f;
  const HerglotzField pg = json_io::field_from_json(json_io::read_file(kData + "/field_p_generated.json"));
  EXPECT_EQ(json_io::field_shape(pg), AlgebraShape({1, 2}));
}

TEST(JsonIo, PointsRoundTrip) {
  Rng rng(7);
  const MatElem z = random_ball_point(AlgebraShape({1, 2}), 2, 0.5, rng);
  EXPECT_EQ(distance(json_io::point_from_json(Json::parse(json_io::to_json(z).dump())), z), 0.0);
}

// ---- reports ----

TEST(Report, NumberFormattingIsExactAndStable) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
}

TEST(Report, PassIffAllChecksPass) {
  RunReport r;
  r.check("a", 1e-12, 1e-10);
  r.check("b", 2.0, 1.7, ">=");
  EXPECT_TRUE(r.passed());
  r.check("c", 0.0, 0.0, "<");
  EXPECT_FALSE(r.passed());
}

TEST(Report, CsvSectionsAndPlotData) {
  RunReport r;
  r.command = "demo";
  r.check("x, with comma", 0.5, 1.0);
  r.table("t", {"a", "b"}).add({1, "s"});
  const std::string csv = render_csv(r);
  EXPECT_NE(csv.find("# table: checks\ncheck,deviation,threshold,relation,pass\n\"x, with comma\",0.5,1,<=,true\n"),
            std::string::npos);
  EXPECT_NE(csv.find("# table: t\na,b\n1,s\n"), std::string::npos);
  EXPECT_EQ(plotdata_csv({}), "series,x,y_re,y_im\n");
}

// ---- runner ----

TEST(Runner, ExitCodes) {
  EXPECT_EQ(run("verify lemma-calc", {{"n", 20}}).exit_code, cli::kExitPass);
  EXPECT_EQ(run("verify lemma-calc", {{"n", 20}}, std::nullopt).exit_code, cli::kExitInputError);
  EXPECT_EQ(run("verify lemma-calc", {{"bogus", 1}}).exit_code, cli::kExitInputError);
  EXPECT_EQ(run("no-such-command", Json::object()).exit_code, cli::kExitInputError);
  EXPECT_EQ(run("convolve", {{"mu", kData + "/bad_weights.json"}, {"nu", kData + "/haar.json"}}).exit_code,
            cli::kExitInputError);
  EXPECT_EQ(run("flow", {{"field", Json::parse(R"({"type":"linear"})")}, {"level", "x"}}).exit_code,
            cli::kExitInputError);
  EXPECT_EQ(run("flow", {{"field", Json::parse(R"({"type":7})")}}).exit_code, cli::kExitInputError);
  const auto failing = run("semigroup", {{"field", kData + "/field_circle.json"}, {"samples", 2},
                                         {"tolerances", Json{{"semigroup", 0.0}}}});
  EXPECT_EQ(failing.exit_code, cli::kExitCheckFailed);
  EXPECT_EQ(run("semigroup", {{"field", kData + "/field_circle.json"}, {"tolerances", Json{{"typo", 1.0}}}}).exit_code,
            cli::kExitInputError);
}

TEST(Runner, HaarConvolutionIsZero) {
  const auto out = run("convolve", {{"mu", kData + "/haar.json"}, {"nu", kData + "/mu_two_atoms.json"}, {"N", 6}});
  ASSERT_EQ(out.exit_code, cli::kExitPass);
  for (const auto& row : out.report.tables.at(0).rows)
    for (std::size_t c = 1; c < row.size(); ++c) EXPECT_EQ(row[c].get<double>(), 0.0);
}

TEST(Runner, TolScaleTightensThresholds) {
  const Json p = {{"field", kData + "/field_circle.json"}, {"samples", 2}};
  cli::ExperimentConfig cfg;
  cfg.command = "semigroup";
  cfg.params = p;
  cfg.seed = 1;
  const double base = cli::run(cfg).report.checks.at(0).threshold;
  cfg.tol_scale = 0.5;
  EXPECT_EQ(cli::run(cfg).report.checks.at(0).threshold, 0.5 * base);
}

TEST(Runner, FlowPlotDataFollowsLinearLaw) {
  const auto out = run("flow", {{"field", Json{{"type", "linear"}}}, {"points", Json::array({Json::array({0.5, 0.25})})},
                                {"grid", 4}, {"to", 2.0}});
  ASSERT_EQ(out.exit_code, cli::kExitPass);
  ASSERT_EQ(out.report.series.size(), 1u);
  const PlotSeries& s = out.report.series[0];
  for (std::size_t i = 0; i < s.x.size(); ++i)
    EXPECT_LE(std::abs(s.y[i] - std::exp(-s.x[i]) * cplx(0.5, 0.25)), 1e-10);
  std::istringstream csv(plotdata_csv(out.report.series));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "series,x,y_re,y_im");
}

TEST(Runner, SameSeedSameBytes) {
  for (const std::string format : {"csv", "json"}) {
    const Json p = {{"measure", kData + "/torus.json"}, {"samples", 3}};
    EXPECT_EQ(run("bivariate", p, 9, format).rendered, run("bivariate", p, 9, format).rendered);
    EXPECT_NE(run("bivariate", p, 9, format).rendered, run("bivariate", p, 10, format).rendered);
  }
}

TEST(Runner, ArraySweepReportsDeviationSeries) {
  const auto out = run("array-limit", {{"field", kData + "/field_p_generated.json"}, {"samples", 2}, {"n", "8,16,32,64"}});
  EXPECT_EQ(out.exit_code, cli::kExitPass) << out.rendered;
  bool found = false;
  for (const auto& s : out.report.series) found = found || (s.x.size() == 4);
  EXPECT_TRUE(found);
}
