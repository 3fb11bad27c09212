#pragma once

// JSON encoding shared by the CLI and the demos. Complex numbers are [re, im];
// unknown keys are rejected with InputError.

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qloewner/algebra.hpp"
#include "qloewner/bivariate.hpp"
#include "qloewner/errors.hpp"
#include "qloewner/expectation.hpp"
#include "qloewner/herglotz.hpp"

namespace qloewner::json_io {

using Json = nlohmann::ordered_json;

inline void require_keys(const Json& j, std::initializer_list<const char*> allowed, std::initializer_list<const char*> required,
                         const std::string& what) {
  if (!j.is_object()) throw InputError(what + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw InputError(what + ": unknown key \"" + key + "\"");
  for (const char* r : required)
    if (!j.contains(r)) throw InputError(what + ": missing key \"" + std::string(r) + "\"");
}

inline double get_number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw InputError(what + ": expected a number");
  return j.get<double>();
}

inline int get_int(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) throw InputError(what + ": expected an integer");
  return j.get<int>();
}

inline Json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError("malformed JSON in " + path + ": " + e.what());
  }
}

// ---- numbers and matrices ----

inline Json to_json(cplx c) { return Json::array({c.real(), c.imag()}); }

/// [re, im] or a bare real number.
inline cplx complex_from_json(const Json& j, const std::string& what = "complex") {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw InputError(what + ": expected [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Json to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

inline CMatrix matrix_from_json(const Json& j, Eigen::Index n, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) throw InputError(what + ": expected " + std::to_string(n) + " rows");
  CMatrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw InputError(what + ": expected " + std::to_string(n) + " columns");
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)], what);
  }
  return m;
}

inline Json to_json(const AlgebraShape& s) { return Json(s.block_dims()); }

inline AlgebraShape shape_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw InputError("shape: expected a non-empty array of block sizes");
  std::vector<int> dims;
  for (const auto& d : j) dims.push_back(get_int(d, "shape"));
  try {
    return AlgebraShape(dims);
  } catch (const Error& e) {
    throw InputError(std::string("shape: ") + e.what());
  }
}

inline Json to_json(const AlgElem& a) {
  Json blocks = Json::array();
  for (const auto& b : a.blocks()) blocks.push_back(to_json(b));
  return Json{{"shape", to_json(a.shape())}, {"blocks", blocks}};
}

inline AlgElem alg_from_json(const Json& j, const std::string& what = "algebra element") {
  require_keys(j, {"shape", "blocks"}, {"shape", "blocks"}, what);
  const AlgebraShape shape = shape_from_json(j["shape"]);
  const Json& bj = j["blocks"];
  if (!bj.is_array() || bj.size() != shape.block_count()) throw InputError(what + ": block count does not match shape");
  std::vector<CMatrix> blocks;
  for (std::size_t i = 0; i < shape.block_count(); ++i) blocks.push_back(matrix_from_json(bj[i], shape.block_dim(i), what));
  try {
    return AlgElem(shape, std::move(blocks));
  } catch (const Error& e) {
    throw InputError(what + ": " + e.what());
  }
}

/// {"shape", "level", "entries"}: entries is an m x m array of block lists.
inline Json to_json(const MatElem& z) {
  Json entries = Json::array();
  for (int r = 0; r < z.level(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < z.level(); ++c) row.push_back(to_json(z.entry(r, c))["blocks"]);
    entries.push_back(row);
  }
  return Json{{"shape", to_json(z.shape())}, {"level", z.level()}, {"entries", entries}};
}

/// A MatElem object, or a complex number read as a scalar point at level 1.
inline MatElem point_from_json(const Json& j, const std::string& what = "point") {
  if (j.is_number() || j.is_array()) {
    const cplx c = complex_from_json(j, what);
    return MatElem(AlgebraShape::scalar(), 1, {CMatrix::Constant(1, 1, c)});
  }
  require_keys(j, {"shape", "level", "entries"}, {"shape", "level", "entries"}, what);
  const AlgebraShape shape = shape_from_json(j["shape"]);
  const int m = get_int(j["level"], what + ".level");
  if (m < 1) throw InputError(what + ": level must be >= 1");
  const Json& ej = j["entries"];
  if (!ej.is_array() || static_cast<int>(ej.size()) != m) throw InputError(what + ": expected " + std::to_string(m) + " entry rows");
  std::vector<AlgElem> entries;
  for (const auto& row : ej) {
    if (!row.is_array() || static_cast<int>(row.size()) != m) throw InputError(what + ": ragged entries");
    for (const auto& e : row) entries.push_back(alg_from_json(Json{{"shape", j["shape"]}, {"blocks", e}}, what));
  }
  try {
    return MatElem::from_entries(shape, m, entries);
  } catch (const Error& e) {
    throw InputError(what + ": " + e.what());
  }
}

inline std::vector<MatElem> points_from_json(const Json& j) {
  if (!j.is_array()) throw InputError("points: expected an array");
  std::vector<MatElem> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(point_from_json(j[i], "points[" + std::to_string(i) + "]"));
  return out;
}

// ---- measures and distributions ----

inline CircleMeasure circle_measure_from_json(const Json& j) {
  require_keys(j, {"type", "atoms"}, {"atoms"}, "circle measure");
  if (!j["atoms"].is_array() || j["atoms"].empty()) throw InputError("circle measure: atoms must be a non-empty array");
  std::vector<CircleAtom> atoms;
  for (const auto& a : j["atoms"]) {
    require_keys(a, {"angle", "weight"}, {"angle", "weight"}, "circle atom");
    atoms.push_back({get_number(a["angle"], "angle"), get_number(a["weight"], "weight")});
  }
  return CircleMeasure(std::move(atoms));
}

inline Json to_json(const CircleMeasure& m) {
  Json atoms = Json::array();
  for (const auto& a : m.atoms()) atoms.push_back({{"angle", a.angle}, {"weight", a.weight}});
  return Json{{"atoms", atoms}};
}

inline UnitaryDistribution distribution_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw InputError("distribution: missing \"type\"");
  const std::string type = j["type"];
  try {
    if (type == "circle") return UnitaryDistribution::circle(circle_measure_from_json(j));
    if (type == "moment_rule") {
      require_keys(j, {"type", "rule", "r"}, {"rule"}, "moment_rule");
      const std::string rule = j["rule"].is_string() ? j["rule"].get<std::string>() : "";
      if (rule == "haar") return UnitaryDistribution::haar();
      if (rule == "poisson") {
        if (!j.contains("r")) throw InputError("moment_rule poisson: missing \"r\"");
        return UnitaryDistribution::poisson(get_number(j["r"], "r"));
      }
      throw InputError("moment_rule: unknown rule (expected haar or poisson)");
    }
    if (type == "delta") {
      require_keys(j, {"type", "u"}, {"u"}, "delta");
      return UnitaryDistribution::delta(alg_from_json(j["u"], "delta.u"));
    }
    if (type == "realized") {
      require_keys(j, {"type", "shape", "k", "U", "state"}, {"shape", "k", "U"}, "realized");
      const AlgebraShape base = shape_from_json(j["shape"]);
      const int k = get_int(j["k"], "realized.k");
      if (k < 1) throw InputError("realized: k must be >= 1");
      std::vector<double> weights(static_cast<std::size_t>(k), 1.0 / k);
      if (j.contains("state")) {
        if (!j["state"].is_array() || static_cast<int>(j["state"].size()) != k)
          throw InputError("realized: state must list k weights");
        for (int a = 0; a < k; ++a) weights[static_cast<std::size_t>(a)] = get_number(j["state"][a], "state");
      }
      return UnitaryDistribution::realized(RealizedSpace(base, weights), alg_from_json(j["U"], "realized.U"));
    }
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    throw InputError("distribution (" + type + "): " + e.what());
  }
  throw InputError("distribution: unknown type \"" + type + "\"");
}

// ---- fields ----

inline HerglotzField field_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) throw InputError("field: missing \"type\"");
  const std::string type = j["type"];
  try {
    if (type == "linear") {
      require_keys(j, {"type"}, {}, "linear field");
      return HerglotzField::linear();
    }
    if (type == "p_generated") {
      require_keys(j, {"type", "terms"}, {"terms"}, "p_generated field");
      if (!j["terms"].is_array()) throw InputError("p_generated: terms must be an array");
      std::vector<PTerm> terms;
      for (const auto& t : j["terms"]) {
        require_keys(t, {"u", "w"}, {"u", "w"}, "p_generated term");
        const MatElem u = t["u"].contains("level") ? point_from_json(t["u"], "term.u") : as_matrix(alg_from_json(t["u"], "term.u"));
        terms.push_back({u, get_number(t["w"], "w")});
      }
      return HerglotzField::p_generated(std::move(terms));
    }
    if (type == "circle_driven") {
      require_keys(j, {"type", "measure"}, {"measure"}, "circle_driven field");
      return HerglotzField::circle_driven(circle_measure_from_json(j["measure"]));
    }
    if (type == "piecewise") {
      require_keys(j, {"type", "breaks", "fields"}, {"breaks", "fields"}, "piecewise field");
      std::vector<double> breaks;
      for (const auto& b : j["breaks"]) breaks.push_back(get_number(b, "breaks"));
      std::vector<HerglotzField> fields;
      for (const auto& f : j["fields"]) fields.push_back(field_from_json(f));
      return HerglotzField::piecewise(std::move(breaks), std::move(fields));
    }
    if (type == "triangular") {
      require_keys(j, {"type", "alpha", "beta", "corner_rate"}, {"alpha", "beta"}, "triangular field");
      const cplx rate = j.contains("corner_rate") ? complex_from_json(j["corner_rate"], "corner_rate") : cplx(1.0);
      return HerglotzField::triangular(field_from_json(j["alpha"]), field_from_json(j["beta"]), rate);
    }
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    throw InputError("field (" + type + "): " + e.what());
  }
  throw InputError("field: unknown type \"" + type + "\"");
}

/// The algebra a field's point must live in, when the field fixes it.
inline std::optional<AlgebraShape> field_shape(const HerglotzField& f) {
  if (const auto* pg = std::get_if<PGeneratedField>(&f.variant())) return pg->terms.front().u.shape();
  if (std::holds_alternative<CircleDrivenField>(f.variant())) return std::nullopt;
  if (std::holds_alternative<TriangularField>(f.variant())) return AlgebraShape({2});
  if (const auto* pw = std::get_if<PiecewiseField>(&f.variant()))
    for (const auto& sub : pw->fields)
      if (auto s = field_shape(sub)) return s;
  return std::nullopt;
}

// ---- bivariate ----

inline TorusMeasure torus_measure_from_json(const Json& j) {
  require_keys(j, {"atoms"}, {"atoms"}, "torus measure");
  if (!j["atoms"].is_array() || j["atoms"].empty()) throw InputError("torus measure: atoms must be a non-empty array");
  std::vector<TorusAtom> atoms;
  for (const auto& a : j["atoms"]) {
    require_keys(a, {"theta", "phi", "w"}, {"theta", "phi", "w"}, "torus atom");
    atoms.push_back({get_number(a["theta"], "theta"), get_number(a["phi"], "phi"), get_number(a["w"], "w")});
  }
  return TorusMeasure(std::move(atoms));
}

inline TriangularPoint triangular_point_from_json(const Json& j) {
  require_keys(j, {"z", "zeta", "w"}, {"z", "zeta", "w"}, "triangular point");
  return {complex_from_json(j["z"], "z"), complex_from_json(j["zeta"], "zeta"), complex_from_json(j["w"], "w")};
}

inline Json to_json(const TriangularPoint& c) {
  return Json{{"z", to_json(c.z)}, {"zeta", to_json(c.zeta)}, {"w", to_json(c.w)}};
}

}  // namespace qloewner::json_io
