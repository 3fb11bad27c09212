#pragma once

// Run reports: named checks (deviation against threshold), data tables and
// plot series, rendered deterministically as JSON or CSV.

#include <Eigen/Core>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qloewner/algebra.hpp"
#include "qloewner/errors.hpp"
#include "qloewner/json_io.hpp"

namespace qloewner {

using json_io::Json;

inline constexpr const char* kLibraryVersion = "0.1.0";

/// Shortest round-trip decimal form is not needed; %.17g is exact and stable.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct CheckRecord {
  std::string name;
  double deviation = 0.0;
  double threshold = 0.0;
  /// "<=": pass iff deviation <= threshold; "<": strict; ">=": lower bound.
  std::string relation = "<=";
  std::string note;

  bool passed() const {
    if (relation == "<") return deviation < threshold;
    if (relation == ">=") return deviation >= threshold;
    return deviation <= threshold;
  }
};

struct DataTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;

  void add(std::vector<Json> row) {
    if (row.size() != columns.size()) throw Error("DataTable " + name + ": row width mismatch");
    rows.push_back(std::move(row));
  }
};

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<cplx> y;
};

/// Deterministic build description; no clocks, hosts or paths.
inline Json environment_stamp() {
  Json env;
  env["library"] = "qloewner";
  env["version"] = kLibraryVersion;
#if defined(__clang__)
  env["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  env["compiler"] = std::string("gcc ") + __VERSION__;
#else
  env["compiler"] = "unknown";
#endif
  env["cplusplus"] = static_cast<long>(__cplusplus);
  env["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
  return env;
}

struct RunReport {
  std::string command;
  Json config = Json::object();
  Json environment = environment_stamp();
  std::vector<CheckRecord> checks;
  std::vector<DataTable> tables;
  std::vector<PlotSeries> series;

  bool passed() const {
    for (const auto& c : checks)
      if (!c.passed()) return false;
    return true;
  }

  CheckRecord& check(std::string name, double deviation, double threshold, std::string relation = "<=",
                     std::string note = {}) {
    checks.push_back({std::move(name), deviation, threshold, std::move(relation), std::move(note)});
    return checks.back();
  }

  DataTable& table(std::string name, std::vector<std::string> columns) {
    tables.push_back({std::move(name), std::move(columns), {}});
    return tables.back();
  }
};

inline Json number_json(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

inline Json to_json(const RunReport& r) {
  Json j;
  j["command"] = r.command;
  j["passed"] = r.passed();
  j["environment"] = r.environment;
  j["config"] = r.config;
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    Json cj{{"name", c.name},
            {"deviation", number_json(c.deviation)},
            {"threshold", number_json(c.threshold)},
            {"relation", c.relation},
            {"pass", c.passed()}};
    if (!c.note.empty()) cj["note"] = c.note;
    checks.push_back(cj);
  }
  j["checks"] = checks;
  Json tables = Json::object();
  for (const auto& t : r.tables) {
    Json rows = Json::array();
    for (const auto& row : t.rows) {
      Json o = Json::object();
      for (std::size_t i = 0; i < t.columns.size(); ++i) o[t.columns[i]] = row[i];
      rows.push_back(o);
    }
    tables[t.name] = rows;
  }
  j["tables"] = tables;
  return j;
}

inline std::string csv_cell(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_number(v.get<double>());
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  return csv_cell(Json(v.dump()));
}

inline std::string render_json(const RunReport& r) { return to_json(r).dump(2) + "\n"; }

/// Sections introduced by "# " comment lines: environment, config, checks,
/// then one block per table.
inline std::string render_csv(const RunReport& r) {
  std::ostringstream out;
  out << "# command: " << r.command << "\n";
  out << "# environment: " << r.environment.dump() << "\n";
  out << "# config: " << r.config.dump() << "\n";
  out << "# passed: " << (r.passed() ? "true" : "false") << "\n";
  out << "# table: checks\n";
  out << "check,deviation,threshold,relation,pass\n";
  for (const auto& c : r.checks)
    out << csv_cell(c.name) << ',' << format_number(c.deviation) << ',' << format_number(c.threshold) << ','
        << csv_cell(c.relation) << ',' << (c.passed() ? "true" : "false") << "\n";
  for (const auto& t : r.tables) {
    out << "# table: " << t.name << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << "\n";
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_cell(row[i]);
      out << "\n";
    }
  }
  return out.str();
}

/// Long-format plot data: series,x,y_re,y_im.
inline std::string plotdata_csv(const std::vector<PlotSeries>& series) {
  std::ostringstream out;
  out << "series,x,y_re,y_im\n";
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out << csv_cell(s.name) << ',' << format_number(s.x[i]) << ',' << format_number(s.y[i].real()) << ','
          << format_number(s.y[i].imag()) << "\n";
  return out.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
  if (!f) throw Error("write failed for " + path);
}

inline void emit_plotdata(const std::vector<PlotSeries>& series, const std::string& path) {
  write_text(path, plotdata_csv(series));
}

inline void emit_plotdata(const RunReport& report, const std::string& path) { emit_plotdata(report.series, path); }

}  // namespace qloewner
