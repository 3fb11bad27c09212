#pragma once

// Batch runner behind the qloewner command line tool. A run is a pure
// function of its ExperimentConfig: same config and seed, same bytes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qloewner/bivariate.hpp"
#include "qloewner/convolution.hpp"
#include "qloewner/flow.hpp"
#include "qloewner/herglotz.hpp"
#include "qloewner/json_io.hpp"
#include "qloewner/random.hpp"
#include "qloewner/report.hpp"
#include "qloewner/transform.hpp"
#include "qloewner/verify.hpp"

namespace qloewner::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInputError = 2;

struct ExperimentConfig {
  std::string command;             ///< e.g. "flow", "verify herglotz"
  Json params = Json::object();    ///< subcommand parameters; file paths or inline objects
  std::optional<std::uint64_t> seed;
  double tol_scale = 1.0;
  std::string format = "csv";      ///< csv | json
  std::string out;                 ///< report path; empty for stdout
  std::string plot;                ///< optional plot-data path
};

struct RunOutcome {
  int exit_code = kExitPass;
  RunReport report;
  std::string rendered;  ///< report in the requested format
  std::string error;     ///< message for exit code 2 or internal failures
};

/// Parameter keys accepted by each subcommand.
inline const std::map<std::string, std::set<std::string>>& command_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"eval-transform", {"dist", "points", "samples", "level", "shape", "radius", "tolerances"}},
      {"convolve", {"mu", "nu", "N", "oracle", "tolerances"}},
      {"flow", {"field", "points", "samples", "level", "shape", "radius", "from", "to", "direction", "grid", "tolerances"}},
      {"semigroup", {"field", "points", "samples", "level", "shape", "radius", "check", "tolerances"}},
      {"starlike", {"field", "points", "samples", "level", "shape", "radius", "T", "t_max", "tolerances"}},
      {"array-limit", {"field", "samples", "level", "shape", "T", "n", "r", "tolerances"}},
      {"bivariate", {"measure", "point", "samples", "mode", "field", "times", "tolerances"}},
      {"verify lemma-calc", {"n", "shapes", "tolerances"}},
      {"verify herglotz", {"field", "samples", "level", "shape", "time", "tolerances"}},
      {"verify expectation", {"n", "order", "tolerances"}},
      {"bieberbach", {"field", "N", "rho", "mode", "T", "K", "level", "shape", "tolerances"}},
  };
  return keys;
}

namespace detail {

/// Parameter access with file-or-inline objects, tolerance bookkeeping and a
/// per-check seeded stream.
class Context {
 public:
  explicit Context(const ExperimentConfig& cfg) : cfg_(cfg), p_(cfg.params) {
    if (p_.contains("tolerances")) {
      const Json tj = inline_or_file(p_["tolerances"], "tolerances");
      if (!tj.is_object()) throw InputError("tolerances: expected an object of check thresholds");
      for (const auto& [k, v] : tj.items()) tol_overrides_[k] = json_io::get_number(v, "tolerances." + k);
    }
  }

  bool has(const std::string& key) const { return p_.contains(key) && !p_[key].is_null(); }

  double number(const std::string& key, double def) const {
    if (!has(key)) return def;
    const Json& v = p_[key];
    if (v.is_string()) return parse_double(v.get<std::string>(), key);
    return json_io::get_number(v, key);
  }

  int integer(const std::string& key, int def) const {
    if (!has(key)) return def;
    const Json& v = p_[key];
    const double x = v.is_string() ? parse_double(v.get<std::string>(), key) : json_io::get_number(v, key);
    if (x != std::floor(x) || std::abs(x) > 1e9) throw InputError(key + ": expected an integer");
    return static_cast<int>(x);
  }

  std::string string(const std::string& key, const std::string& def) const {
    if (!has(key)) return def;
    if (!p_[key].is_string()) throw InputError(key + ": expected a string");
    return p_[key].get<std::string>();
  }

  /// Object given inline or as a path to a JSON file.
  Json object(const std::string& key) const {
    if (!has(key)) throw InputError("missing required parameter \"" + key + "\"");
    return inline_or_file(p_[key], key);
  }

  /// "8,16,32" or [8, 16, 32].
  std::vector<double> list(const std::string& key, std::vector<double> def) const {
    if (!has(key)) return def;
    const Json& v = p_[key];
    std::vector<double> out;
    if (v.is_array()) {
      for (const auto& x : v) out.push_back(json_io::get_number(x, key));
    } else if (v.is_number()) {
      out.push_back(v.get<double>());
    } else if (v.is_string()) {
      std::stringstream ss(v.get<std::string>());
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(parse_double(item, key));
    } else {
      throw InputError(key + ": expected a list");
    }
    if (out.empty()) throw InputError(key + ": empty list");
    return out;
  }

  std::optional<AlgebraShape> shape() const {
    if (!has("shape")) return std::nullopt;
    const Json& v = p_["shape"];
    if (v.is_array()) return json_io::shape_from_json(v);
    std::vector<double> d = list("shape", {});
    Json arr = Json::array();
    for (double x : d) arr.push_back(static_cast<int>(x));
    return json_io::shape_from_json(arr);
  }

  /// Threshold for a named check: explicit override, else default * tol-scale.
  double tol(const std::string& name, double def) {
    used_tols_.insert(name);
    const auto it = tol_overrides_.find(name);
    return it != tol_overrides_.end() ? it->second : def * cfg_.tol_scale;
  }

  /// Threshold that --tol-scale leaves alone (lower bounds, experiment limits).
  double fixed_tol(const std::string& name, double def) {
    used_tols_.insert(name);
    const auto it = tol_overrides_.find(name);
    return it != tol_overrides_.end() ? it->second : def;
  }

  void finish() const {
    for (const auto& [k, v] : tol_overrides_)
      if (!used_tols_.count(k)) throw InputError("tolerances: unknown check \"" + k + "\"");
  }

  /// Independent stream per named use; requires a seed.
  Rng rng(const std::string& name) const {
    if (!cfg_.seed) throw InputError(cfg_.command + ": --seed is required for randomized sampling");
    return Rng(stream_seed(*cfg_.seed, cfg_.command + "/" + name));
  }

  /// Points from "points", or `samples` random points of norm <= radius.
  std::vector<MatElem> points(const AlgebraShape& shape, int level, int default_samples, double default_radius) const {
    if (has("points")) {
      std::vector<MatElem> pts = json_io::points_from_json(object("points"));
      for (const auto& z : pts)
        if (!(z.shape() == shape) || z.level() != level)
          throw InputError("points: expected shape " + shape.to_string() + " at level " + std::to_string(level));
      return pts;
    }
    const int n = integer("samples", default_samples);
    const double r = number("radius", default_radius);
    if (n < 1) throw InputError("samples must be >= 1");
    if (!(r > 0.0 && r < 1.0)) throw InputError("radius must lie in (0, 1)");
    Rng g = rng("points");
    std::vector<MatElem> out;
    for (int i = 0; i < n; ++i) out.push_back(random_ball_point(shape, level, r, g));
    return out;
  }

 private:
  /// A string starting with '{' or '[' is inline JSON, any other string a path.
  static Json inline_or_file(const Json& v, const std::string& key) {
    if (!v.is_string()) return v;
    const std::string text = v.get<std::string>();
    const auto first = text.find_first_not_of(" \t\n");
    if (first == std::string::npos || (text[first] != '{' && text[first] != '[')) return json_io::read_file(text);
    try {
      return Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw InputError(key + ": malformed JSON: " + e.what());
    }
  }

  static double parse_double(const std::string& s, const std::string& key) {
    try {
      std::size_t used = 0;
      const double x = std::stod(s, &used);
      if (used != s.size()) throw InputError(key + ": not a number: " + s);
      return x;
    } catch (const std::logic_error&) {
      throw InputError(key + ": not a number: " + s);
    }
  }

  const ExperimentConfig& cfg_;
  const Json& p_;
  std::map<std::string, double> tol_overrides_;
  std::set<std::string> used_tols_;
};

inline Json entry_json(double x) { return number_json(x); }

/// Point shape: explicit parameter, else the field's algebra, else points, else C.
inline AlgebraShape resolve_shape(const Context& ctx, const std::optional<AlgebraShape>& from_object) {
  if (auto s = ctx.shape()) return *s;
  if (from_object) return *from_object;
  if (ctx.has("points")) {
    const auto pts = json_io::points_from_json(ctx.object("points"));
    if (!pts.empty()) return pts.front().shape();
  }
  return AlgebraShape::scalar();
}

inline int resolve_level(const Context& ctx) {
  if (!ctx.has("level") && ctx.has("points")) {
    const auto pts = json_io::points_from_json(ctx.object("points"));
    if (!pts.empty()) return pts.front().level();
  }
  const int m = ctx.integer("level", 1);
  if (m < 1) throw InputError("level must be >= 1");
  return m;
}

inline void add_entries(std::vector<PlotSeries>& series, const std::string& prefix, const MatElem& z, double x) {
  std::size_t idx = 0;
  for (std::size_t b = 0; b < z.block_count(); ++b) {
    const CMatrix& m = z.block(b);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c, ++idx) {
        const std::string name = prefix + ".b" + std::to_string(b) + "[" + std::to_string(r) + "," + std::to_string(c) + "]";
        auto it = std::find_if(series.begin(), series.end(), [&](const PlotSeries& s) { return s.name == name; });
        if (it == series.end()) {
          series.push_back({name, {}, {}});
          it = series.end() - 1;
        }
        it->x.push_back(x);
        it->y.push_back(m(r, c));
      }
  }
}

// ---- subcommands ----

inline void run_eval_transform(Context& ctx, RunReport& rep) {
  const UnitaryDistribution dist = json_io::distribution_from_json(ctx.object("dist"));
  const AlgebraShape shape = resolve_shape(ctx, dist.base_shape());
  const int level = resolve_level(ctx);
  const auto pts = ctx.points(shape, level, 100, 0.9);
  auto& t = rep.table("values", {"sample_id", "level", "norm_z", "norm_psi", "norm_eta", "min_eig_re_psi_plus_half"});
  double worst_margin = std::numeric_limits<double>::infinity(), schwarz = -std::numeric_limits<double>::infinity(),
         involution = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const MatElem p = psi(dist, pts[i]);
    const MatElem e = eta_from_psi(p);
    const double margin = min_re_eigenvalue(p) - kHalfSpaceConstant;
    worst_margin = std::min(worst_margin, margin);
    schwarz = std::max(schwarz, operator_norm(e) - operator_norm(pts[i]));
    involution = std::max(involution, distance(psi_from_eta(e), p) / std::max(1.0, operator_norm(p)));
    t.add({static_cast<long long>(i), level, entry_json(operator_norm(pts[i])), entry_json(operator_norm(p)),
           entry_json(operator_norm(e)), entry_json(margin)});
  }
  rep.check("psi_halfspace", -worst_margin, 0.0, "<", "Re psi > -1/2 at every sample; deviation = -(min margin)");
  rep.check("eta_schwarz", schwarz, ctx.tol("eta_schwarz", 1e-12), "<=", "max ||eta(z)|| - ||z||");
  rep.check("psi_eta_involution", involution, ctx.tol("psi_eta_involution", 1e-12));
  rep.check("eta_derivative_at_zero", eta_derivative_defect(dist, level), ctx.tol("eta_derivative_at_zero", 1e-6));
  if (pts.size() >= 2) {
    // informational: Haar is not injective, so this is not a pass/fail check
    const InjectivityReport inj = injectivity_probe([&dist](const MatElem& z) { return eta(dist, z); }, pts);
    rep.table("injectivity", {"pairs", "min_ratio", "threshold", "injective_on_samples"})
        .add({static_cast<long long>(inj.pairs), entry_json(inj.min_ratio), entry_json(inj.threshold), inj.passed()});
  }
}

inline void run_convolve(Context& ctx, RunReport& rep) {
  const UnitaryDistribution mu = json_io::distribution_from_json(ctx.object("mu"));
  const UnitaryDistribution nu = json_io::distribution_from_json(ctx.object("nu"));
  const int N = ctx.integer("N", 8);
  const std::string oracle = ctx.string("oracle", "both");
  if (oracle != "composition" && oracle != "expansion" && oracle != "both")
    throw InputError("oracle must be composition, expansion or both");
  if (N < 1) throw InputError("N must be >= 1");
  if (!mu.is_scalar() || !nu.is_scalar()) throw InputError("convolve: moment pipelines need distributions over C");
  if (oracle != "composition" && N > kMaxExpansionOrder) throw InputError("convolve: expansion oracle limited to N <= 20");
  const MomentSequence mm = MomentSequence::of(mu, N);
  const MomentSequence mn = MomentSequence::of(nu, N);
  std::optional<MomentSequence> comp, expn;
  if (oracle != "expansion") comp = moments_via_composition(mm, mn, N);
  if (oracle != "composition") expn = moments_via_monotone_expansion(mm, mn, N);
  auto& t = rep.table("moments", {"n", "composition_re", "composition_im", "expansion_re", "expansion_im"});
  double bound = 0.0;
  PlotSeries s{"moment", {}, {}};
  for (int n = 1; n <= N; ++n) {
    const Json cr = comp ? entry_json((*comp)[n].real()) : Json();
    const Json ci = comp ? entry_json((*comp)[n].imag()) : Json();
    const Json er = expn ? entry_json((*expn)[n].real()) : Json();
    const Json ei = expn ? entry_json((*expn)[n].imag()) : Json();
    t.add({n, cr, ci, er, ei});
    const cplx m = comp ? (*comp)[n] : (*expn)[n];
    bound = std::max(bound, std::abs(m) - 1.0);
    s.x.push_back(n);
    s.y.push_back(m);
  }
  rep.series.push_back(s);
  if (comp && expn) rep.check("oracle_agreement", max_deviation(*comp, *expn), ctx.tol("oracle_agreement", 1e-10));
  rep.check("moment_bound", bound, ctx.tol("moment_bound", 1e-9), "<=", "max |m_n| - 1");
}

inline HerglotzField load_field(const Context& ctx) { return json_io::field_from_json(ctx.object("field")); }

inline void run_flow(Context& ctx, RunReport& rep) {
  const HerglotzField field = load_field(ctx);
  const AlgebraShape shape = resolve_shape(ctx, json_io::field_shape(field));
  const int level = resolve_level(ctx);
  const double s = ctx.number("from", 0.0);
  const double t = ctx.number("to", 1.0);
  const int grid = ctx.integer("grid", 10);
  const std::string dir = ctx.string("direction", "increasing");
  if (dir != "increasing" && dir != "decreasing") throw InputError("direction must be increasing or decreasing");
  if (!(s >= 0.0 && s <= t)) throw InputError("flow: need 0 <= from <= to");
  if (grid < 1) throw InputError("grid must be >= 1");
  const auto pts = ctx.points(shape, level, 5, 0.9);
  const EvolutionFamily fam(field, shape, level);
  auto& tab = rep.table("trajectory", {"point_id", "time", "block", "row", "col", "re", "im", "norm"});
  double excess = -std::numeric_limits<double>::infinity();
  long trips = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (int g = 0; g <= grid; ++g) {
      const double tau = s + (t - s) * g / grid;
      // increasing: v_{s,tau}; decreasing: f_{s,tau} from the chain ODE in the first time variable
      const EvolveResult r =
          dir == "increasing" ? fam.evolve_detailed(s, tau, pts[i]) : fam.evolve_decreasing_detailed(s, tau, pts[i]);
      excess = std::max(excess, r.max_norm_excess);
      trips += r.stats.guard_trips;
      const double nrm = operator_norm(r.value);
      for (std::size_t b = 0; b < r.value.block_count(); ++b) {
        const CMatrix& m = r.value.block(b);
        for (Eigen::Index row = 0; row < m.rows(); ++row)
          for (Eigen::Index col = 0; col < m.cols(); ++col)
            tab.add({static_cast<long long>(i), entry_json(tau), static_cast<long long>(b), static_cast<long long>(row),
                     static_cast<long long>(col), entry_json(m(row, col).real()), entry_json(m(row, col).imag()),
                     entry_json(nrm)});
      }
      add_entries(rep.series, "p" + std::to_string(i), r.value, tau);
    }
  }
  rep.check("ball_invariance", excess, ctx.tol("ball_invariance", 1e-9), "<=", "max ||v(z)|| - ||z|| along trajectories");
  rep.check("guard_trips", static_cast<double>(trips), 0.0);
  if (t > s) {
    const CMatrix jac = dir == "increasing" ? derivative_at_zero(fam, s, t)
                                            : derivative_at_zero([&](const MatElem& z) { return fam.evolve_decreasing(s, t, z); },
                                                                 shape, level);
    rep.check("normalization", scalar_jacobian_defect(jac, std::exp(-(t - s))), ctx.tol("normalization", 1e-5), "<=",
              "||Dv(0) - e^{-(t-s)} I||");
  }
}

inline void run_semigroup(Context& ctx, RunReport& rep) {
  const HerglotzField field = load_field(ctx);
  const AlgebraShape shape = resolve_shape(ctx, json_io::field_shape(field));
  const int level = resolve_level(ctx);
  std::vector<std::array<double, 3>> triples;
  const std::string spec = ctx.string("check", "0,0.5,1;0.2,0.7,1.5;0,1,2");
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ';')) {
    std::stringstream is(item);
    std::string x;
    std::vector<double> v;
    while (std::getline(is, x, ',')) {
      try {
        v.push_back(std::stod(x));
      } catch (const std::logic_error&) {
        throw InputError("check: not a number: " + x);
      }
    }
    if (v.size() != 3 || !(v[0] >= 0.0 && v[0] <= v[1] && v[1] <= v[2]))
      throw InputError("check: expected triples s,t,u with 0 <= s <= t <= u, separated by ';'");
    triples.push_back({v[0], v[1], v[2]});
  }
  const auto pts = ctx.points(shape, level, 20, 0.9);
  const EvolutionFamily fam(field, shape, level);
  auto& tab = rep.table("semigroup", {"s", "t", "u", "max_error"});
  double worst = 0.0, norm_defect = 0.0;
  for (const auto& [s, t, u] : triples) {
    const SemigroupReport r = semigroup_check(fam, s, t, u, pts);
    worst = std::max(worst, r.max_error);
    tab.add({entry_json(s), entry_json(t), entry_json(u), entry_json(r.max_error)});
    if (u > s)
      norm_defect = std::max(norm_defect, scalar_jacobian_defect(derivative_at_zero(fam, s, u), std::exp(-(u - s))));
  }
  rep.check("semigroup", worst, ctx.tol("semigroup", 1e-7));
  rep.check("normalization", norm_defect, ctx.tol("normalization", 1e-5));
}

inline void run_starlike(Context& ctx, RunReport& rep) {
  const HerglotzField field = load_field(ctx);
  if (!field.is_autonomous()) throw InputError("starlike: field must be autonomous");
  const AlgebraShape shape = resolve_shape(ctx, json_io::field_shape(field));
  const int level = resolve_level(ctx);
  const double T = ctx.number("T", 1.0);
  const double t_max = ctx.number("t_max", 40.0);
  if (!(T >= 0.0)) throw InputError("T must be >= 0");
  const auto pts = ctx.points(shape, level, 10, 0.6);
  const EvolutionFamily fam(field, shape, level);
  const MapFn f0 = [&](const MatElem& z) {
    const StarlikeLimit l = starlike_limit(fam, z, t_max);
    if (!l.converged) throw IntegrationError("starlike limit did not converge by t = " + format_number(l.time_reached));
    return l.value;
  };
  auto& tab = rep.table("starlike", {"point_id", "norm_z", "norm_f0", "identity_residual", "pde_residual"});
  double id_worst = 0.0, pde_worst = 0.0;
  const MapFn h = at_time(field, 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const MatElem fz = f0(pts[i]);
    const double id_res = distance(f0(fam.evolve(0.0, T, pts[i])), std::exp(-T) * fz);
    const double pde_res = starlike_pde_check(f0, h, {pts[i]}, 0.0).max_error;
    id_worst = std::max(id_worst, id_res);
    pde_worst = std::max(pde_worst, pde_res);
    tab.add({static_cast<long long>(i), entry_json(operator_norm(pts[i])), entry_json(operator_norm(fz)), entry_json(id_res),
             entry_json(pde_res)});
  }
  rep.check("starlike_identity", id_worst, ctx.tol("starlike_identity", 1e-6), "<=", "||f0(v_{0,T}(z)) - e^{-T} f0(z)||");
  rep.check("starlike_pde", pde_worst, ctx.tol("starlike_pde", 1e-5), "<=", "||f0(z) + Df0(z)[h(z)]||, numerical f0");
}

inline void run_array_limit(Context& ctx, RunReport& rep) {
  const HerglotzField field = load_field(ctx);
  const AlgebraShape shape = resolve_shape(ctx, json_io::field_shape(field));
  const int level = resolve_level(ctx);
  const double T = ctx.number("T", 1.0);
  const double r = ctx.number("r", 0.5);
  if (!(T > 0.0)) throw InputError("T must be positive");
  if (!(r > 0.0 && r < 1.0)) throw InputError("r must lie in (0, 1)");
  std::vector<int> ns;
  for (double x : ctx.list("n", {8, 16, 32, 64})) {
    if (x < 1 || x != std::floor(x)) throw InputError("n: expected positive integers");
    ns.push_back(static_cast<int>(x));
  }
  const int count = ctx.integer("samples", 8);
  if (count < 1) throw InputError("samples must be >= 1");
  Rng g = ctx.rng("points");
  std::vector<MatElem> pts;
  for (int i = 0; i < count; ++i) pts.push_back(random_sphere_point(shape, level, r * (1.0 - 0.5 * g.uniform()), g));
  Rng gb = ctx.rng("class_bound");
  const EvolutionFamily fam(field, shape, level);
  const ArraySweep sweep = array_sweep(fam, T, ns, r, pts, gb, ctx.tol("array_composition", 1e-6));
  auto& tab = rep.table("array", {"n", "sup_deviation", "bound", "class_bound", "composition_error"});
  PlotSeries s{"sup_deviation", {}, {}};
  for (const auto& row : sweep.rows) {
    tab.add({row.n, entry_json(row.sup_deviation), entry_json(row.deviation_bound), entry_json(row.class_bound),
             entry_json(row.composition_error)});
    rep.check("array_bound[n=" + std::to_string(row.n) + "]", row.sup_deviation, row.deviation_bound, "<=",
              "(1 - e^{-T/n}) M(r) 1.1");
    rep.check("array_composition[n=" + std::to_string(row.n) + "]", row.composition_error, row.composition_tol);
    s.x.push_back(row.n);
    s.y.push_back(row.sup_deviation);
  }
  rep.series.push_back(s);
  if (!sweep.ratios.empty()) {
    double min_ratio = std::numeric_limits<double>::infinity();
    for (double q : sweep.ratios) min_ratio = std::min(min_ratio, q);
    rep.check("array_decreasing", sweep.decreasing() ? 0.0 : 1.0, 0.0, "<=", "1 when the deviation sequence fails to decrease");
    rep.check("array_ratio", min_ratio, ctx.fixed_tol("array_ratio", 1.7), ">=", "min deviation ratio between consecutive n");
  }
}

inline void run_bivariate(Context& ctx, RunReport& rep) {
  const TorusMeasure rho = json_io::torus_measure_from_json(ctx.object("measure"));
  const std::string mode = ctx.string("mode", "both");
  if (mode != "formula" && mode != "direct" && mode != "both") throw InputError("mode must be formula, direct or both");
  std::vector<TriangularPoint> pts;
  if (ctx.has("point")) {
    const Json pj = ctx.object("point");
    if (pj.is_array())
      for (const auto& p : pj) pts.push_back(json_io::triangular_point_from_json(p));
    else
      pts.push_back(json_io::triangular_point_from_json(pj));
  } else {
    const int n = ctx.integer("samples", 20);
    if (n < 1) throw InputError("samples must be >= 1");
    Rng g = ctx.rng("points");
    for (int i = 0; i < n; ++i) {
      TriangularPoint c{g.complex_normal(), g.complex_normal(), g.complex_normal()};
      const double s = g.uniform(0.05, 0.9) / c.norm();
      pts.push_back({s * c.z, s * c.zeta, s * c.w});
    }
  }
  for (const auto& c : pts)
    if (!(c.norm() < 1.0 - kBallMargin)) throw InputError("bivariate: point outside the triangular ball");
  auto& tab = rep.table("eta", {"point_id", "path", "z_re", "z_im", "zeta_re", "zeta_im", "w_re", "w_im"});
  double gap = 0.0, lower = 0.0, agree = 0.0, schwarz = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::optional<TriangularPoint> f, d;
    if (mode != "direct") {
      const TriangularEta e = eta_triangular(rho, pts[i]);
      gap = std::max(gap, e.corner_gap);
      f = e.value;
    }
    if (mode != "formula") {
      const DirectEta e = eta_triangular_direct(rho, pts[i]);
      lower = std::max(lower, e.lower_left);
      d = e.value;
    }
    for (const auto& [path, v] : {std::pair{"formula", f}, std::pair{"direct", d}}) {
      if (!v) continue;
      schwarz = std::max(schwarz, v->norm() - pts[i].norm());
      tab.add({static_cast<long long>(i), path, entry_json(v->z.real()), entry_json(v->z.imag()), entry_json(v->zeta.real()),
               entry_json(v->zeta.imag()), entry_json(v->w.real()), entry_json(v->w.imag())});
    }
    if (f && d) agree = std::max(agree, distance(*f, *d));
  }
  if (mode != "direct") rep.check("corner_forms", gap, ctx.tol("corner_forms", 1e-12));
  if (mode != "formula") rep.check("lower_left", lower, ctx.tol("lower_left", 1e-12));
  if (mode == "both") rep.check("formula_vs_direct", agree, ctx.tol("formula_vs_direct", 1e-10));
  rep.check("triangular_schwarz", schwarz, ctx.tol("triangular_schwarz", 1e-12));

  // moments through the 2x2 embedding against direct sums over the atoms
  const auto rec = joint_moments_from_transforms(rho, 4);
  auto& mt = rep.table("joint_moments", {"j", "k", "recovered_re", "recovered_im", "direct_re", "direct_im"});
  double moment_err = 0.0;
  for (const auto& [jk, v] : rec) {
    const cplx d = rho.moment(jk.first, jk.second);
    moment_err = std::max(moment_err, std::abs(v - d));
    mt.add({jk.first, jk.second, entry_json(v.real()), entry_json(v.imag()), entry_json(d.real()), entry_json(d.imag())});
  }
  rep.check("embedding_moments", moment_err, ctx.tol("embedding_moments", 1e-10));

  // triangular flow: the given field, else the p-field driven by the measure
  const HerglotzField field = ctx.has("field") ? json_io::field_from_json(ctx.object("field")) : triangular_p_field(rho);
  const std::vector<double> times = ctx.list("times", {0.5, 1.0, 2.0});
  for (double t : times)
    if (!(t >= 0.0)) throw InputError("times must be nonnegative");
  const TriangularFlowReport fr = triangular_flow_check(field, pts, times);
  rep.check("flow_lower_left", fr.max_lower_left, ctx.tol("flow_lower_left", 1e-10));
  if (fr.max_marginal_error >= 0.0)
    rep.check("flow_marginals", fr.max_marginal_error, ctx.tol("flow_marginals", 1e-9), "<=",
              "diagonal entries against the 1-D marginal flows");
}

inline void run_verify_lemma(Context& ctx, RunReport& rep) {
  const int n = ctx.integer("n", 1000);
  if (n < 1) throw InputError("n must be >= 1");
  std::vector<AlgebraShape> shapes;
  const std::string spec = ctx.string("shapes", "1;2;3;1,2");
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ';')) {
    Json arr = Json::array();
    std::stringstream is(item);
    std::string x;
    while (std::getline(is, x, ',')) {
      try {
        arr.push_back(std::stoi(x));
      } catch (const std::logic_error&) {
        throw InputError("shapes: not an integer: " + x);
      }
    }
    shapes.push_back(json_io::shape_from_json(arr));
  }
  auto& tab = rep.table("lemma", {"shape", "cases", "failures_a", "failures_b_forward", "failures_b_converse", "failures_c",
                                  "failures_d", "max_roundtrip", "min_margin"});
  const double rt = ctx.tol("roundtrip", 1e-12);
  for (const auto& s : shapes) {
    Rng g = ctx.rng("lemma/" + s.to_string());
    const LemmaSuiteReport r = lemma_suite(s, static_cast<std::size_t>(n), g, kDefaultTol, rt);
    tab.add({s.to_string(), static_cast<long long>(r.cases), static_cast<long long>(r.failures_a),
             static_cast<long long>(r.failures_b_forward), static_cast<long long>(r.failures_b_converse),
             static_cast<long long>(r.failures_c), static_cast<long long>(r.failures_d), entry_json(r.max_roundtrip),
             entry_json(r.min_margin)});
    const std::string tag = "[" + s.to_string() + "]";
    rep.check("lemma_a" + tag, static_cast<double>(r.failures_a), 0.0);
    rep.check("lemma_b" + tag, static_cast<double>(r.failures_b_forward + r.failures_b_converse), 0.0);
    rep.check("lemma_c" + tag, static_cast<double>(r.failures_c), 0.0);
    rep.check("lemma_d" + tag, static_cast<double>(r.failures_d), 0.0);
    rep.check("cayley_roundtrip" + tag, r.max_roundtrip, rt);
  }
}

inline void run_verify_herglotz(Context& ctx, RunReport& rep) {
  const int samples = ctx.integer("samples", 500);
  if (samples < 1) throw InputError("samples must be >= 1");
  const double t = ctx.number("time", 0.0);
  std::vector<NamedField> fields;
  AlgebraShape shape = AlgebraShape::scalar();
  int level = 1;
  if (ctx.has("field")) {
    const HerglotzField f = load_field(ctx);
    shape = resolve_shape(ctx, json_io::field_shape(f));
    level = resolve_level(ctx);
    fields.push_back({f.kind(), f});
  } else {
    shape = ctx.shape().value_or(AlgebraShape::scalar());
    level = resolve_level(ctx);
    Rng g = ctx.rng("fields");
    fields = constructed_fields(shape, level, g);
  }
  Rng g = ctx.rng("membership");
  const HerglotzSuiteReport r = herglotz_suite(fields, shape, level, static_cast<std::size_t>(samples), g, t);
  auto& tab = rep.table("membership", {"field", "samples", "violations", "degenerate_samples", "max_re_functional",
                                       "derivative_defect", "h_at_zero"});
  const double dtol = ctx.tol("derivative_at_zero", 1e-6);
  for (std::size_t i = 0; i < r.reports.size(); ++i) {
    const auto& m = r.reports[i];
    tab.add({r.names[i], static_cast<long long>(m.samples), static_cast<long long>(m.violations),
             static_cast<long long>(m.degenerate_samples), entry_json(m.max_re_functional), entry_json(m.derivative_defect),
             entry_json(m.h_at_zero)});
    rep.check("membership[" + r.names[i] + "]", static_cast<double>(m.violations), 0.0, "<=",
              "samples with Re l_z(h(z)) >= 0");
    rep.check("h_at_zero[" + r.names[i] + "]", m.h_at_zero, 0.0);
    rep.check("derivative_at_zero[" + r.names[i] + "]", m.derivative_defect, dtol);
  }
  tab.add({"anti_field", static_cast<long long>(r.anti_field.samples), static_cast<long long>(r.anti_field.violations),
           static_cast<long long>(r.anti_field.degenerate_samples), entry_json(r.anti_field.max_re_functional),
           entry_json(r.anti_field.derivative_defect), entry_json(r.anti_field.h_at_zero)});
  rep.check("anti_field_rejected", static_cast<double>(r.anti_field.samples - r.anti_field.violations), 0.0, "<=",
            "samples where h(z) = +z was not rejected");
}

inline void run_verify_expectation(Context& ctx, RunReport& rep) {
  const int n = ctx.integer("n", 200);
  const int order = ctx.integer("order", 5);
  if (n < 1 || order < 1) throw InputError("n and order must be >= 1");
  Rng g = ctx.rng("expectation");
  const double tol = ctx.tol("expectation", 1e-12);
  const ExpectationSuiteReport r = expectation_suite(static_cast<std::size_t>(n), order, g, tol);
  rep.check("amplification", r.max_amplification_gap, tol, "<=", "mixed_moment vs mixed_moment_amplified");
  rep.check("unital", r.max_unital, tol);
  rep.check("positivity", r.min_positivity, -tol, ">=", "min eigenvalue of Phi(a*a)");
  rep.check("bimodule", r.max_bimodule, tol);
  rep.check("contractivity", r.max_contractivity, tol);
  rep.check("adjoint", r.max_adjoint, tol);
  rep.check("right_module", r.max_right_module, tol);
  rep.check("realized_k1_vs_delta", r.max_k1_vs_delta, tol);
}

inline void run_bieberbach(Context& ctx, RunReport& rep) {
  const HerglotzField field = load_field(ctx);
  const AlgebraShape shape = resolve_shape(ctx, json_io::field_shape(field));
  const int level = resolve_level(ctx);
  if (level != 1) throw InputError("bieberbach: coefficients are taken at level 1");
  const int N = ctx.integer("N", 12);
  const double rho = ctx.number("rho", 0.5);
  const int K = ctx.integer("K", 0);
  const std::string mode = ctx.string("mode", "starlike");
  if (N < 1) throw InputError("N must be >= 1");
  if (!(rho > 0.0 && rho < 1.0)) throw InputError("rho must lie in (0, 1)");
  if (K != 0 && K < 4 * N) throw InputError("K must be >= 4N");
  const EvolutionFamily fam(field, shape, level);
  MapFn g;
  if (mode == "starlike") {
    if (!field.is_autonomous()) throw InputError("bieberbach: starlike mode needs an autonomous field");
    g = starlike_map(fam);
  } else if (mode == "flow") {
    const double T = ctx.number("T", 1.0);
    if (!(T >= 0.0)) throw InputError("T must be >= 0");
    g = fam.map(0.0, T);
  } else {
    throw InputError("mode must be starlike or flow");
  }
  const CoefficientReport c = coefficient_extract(g, shape, N, rho, K);
  auto& tab = rep.table("coefficients", {"n", "norm", "ratio"});
  PlotSeries s{"ratio", {}, {}};
  double worst = 0.0;
  for (int n = 1; n <= N; ++n) {
    const double ratio = c.ratios[static_cast<std::size_t>(n - 1)];
    tab.add({n, entry_json(c.norms[static_cast<std::size_t>(n - 1)]), entry_json(ratio)});
    worst = std::max(worst, ratio);
    s.x.push_back(n);
    s.y.push_back(ratio);
  }
  rep.series.push_back(s);
  rep.check("coefficient_ratio", worst, ctx.fixed_tol("coefficient_ratio", 1.0 + 1e-6), "<=",
            "experiment: max ||A_n||/n, not a proven bound");
}

}  // namespace detail

/// Validates the parameter set against the subcommand's accepted keys.
inline void validate_config(const ExperimentConfig& cfg) {
  const auto& keys = command_keys();
  const auto it = keys.find(cfg.command);
  if (it == keys.end()) throw InputError("unknown subcommand \"" + cfg.command + "\"");
  if (!cfg.params.is_object()) throw InputError("parameters must form a JSON object");
  for (const auto& [k, v] : cfg.params.items())
    if (!it->second.count(k)) throw InputError(cfg.command + ": unknown parameter \"" + k + "\"");
  if (cfg.format != "csv" && cfg.format != "json") throw InputError("format must be csv or json");
  if (!(cfg.tol_scale > 0.0) || !std::isfinite(cfg.tol_scale)) throw InputError("tol-scale must be positive");
}

inline Json config_echo(const ExperimentConfig& cfg) {
  Json j;
  j["command"] = cfg.command;
  j["seed"] = cfg.seed ? Json(*cfg.seed) : Json();
  j["tol_scale"] = cfg.tol_scale;
  j["format"] = cfg.format;
  j["params"] = cfg.params;
  return j;
}

/// Runs one experiment; never throws for input or math errors.
inline RunOutcome run(const ExperimentConfig& cfg) {
  RunOutcome out;
  out.report.command = cfg.command;
  try {
    validate_config(cfg);
    out.report.config = config_echo(cfg);
    detail::Context ctx(cfg);
    const std::string& c = cfg.command;
    if (c == "eval-transform") detail::run_eval_transform(ctx, out.report);
    else if (c == "convolve") detail::run_convolve(ctx, out.report);
    else if (c == "flow") detail::run_flow(ctx, out.report);
    else if (c == "semigroup") detail::run_semigroup(ctx, out.report);
    else if (c == "starlike") detail::run_starlike(ctx, out.report);
    else if (c == "array-limit") detail::run_array_limit(ctx, out.report);
    else if (c == "bivariate") detail::run_bivariate(ctx, out.report);
    else if (c == "verify lemma-calc") detail::run_verify_lemma(ctx, out.report);
    else if (c == "verify herglotz") detail::run_verify_herglotz(ctx, out.report);
    else if (c == "verify expectation") detail::run_verify_expectation(ctx, out.report);
    else if (c == "bieberbach") detail::run_bieberbach(ctx, out.report);
    ctx.finish();
    out.exit_code = out.report.passed() ? kExitPass : kExitCheckFailed;
  } catch (const InputError& e) {
    out.exit_code = kExitInputError;
    out.error = e.what();
  } catch (const ShapeError& e) {
    out.exit_code = kExitInputError;
    out.error = e.what();
  } catch (const DomainError& e) {
    out.exit_code = kExitInputError;
    out.error = e.what();
  } catch (const Json::exception& e) {
    out.exit_code = kExitInputError;
    out.error = std::string("malformed input: ") + e.what();
  } catch (const Error& e) {
    // numerical breakdown (singular resolvent, integrator failure) counts as a failed check
    out.report.check("numerical_failure", 1.0, 0.0, "<=", e.what());
    out.exit_code = kExitCheckFailed;
  }
  if (out.exit_code != kExitInputError)
    out.rendered = cfg.format == "json" ? render_json(out.report) : render_csv(out.report);
  return out;
}

}  // namespace qloewner::cli
