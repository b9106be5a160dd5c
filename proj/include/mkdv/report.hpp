#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mkdv/evolution.hpp"
#include "mkdv/identities.hpp"
#include "mkdv/spectral.hpp"

namespace mkdv {

using Json = nlohmann::ordered_json;

/// Doubles with 17 significant digits; non-finite values become null.
inline std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void write_json(const Json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        write_json(it.value(), out, indent, depth + 1);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      out += flat ? "[" : "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",\n";
        first = false;
        if (!flat) out += pad;
        write_json(e, out, indent, depth + 1);
      }
      out += flat ? "]" : "\n" + close + "]";
      return;
    }
    case Json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Deterministic rendering: key order as inserted, fixed float format.
inline std::string to_json_text(const Json& j) {
  std::string out;
  detail::write_json(j, out, 2, 0);
  out += "\n";
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("write failed: " + path.string());
}

inline Json to_json(const BreatherParams& p) {
  return Json{{"kind", "breather"}, {"order", p.order.value()}, {"alpha", p.alpha},
              {"beta", p.beta},     {"x1", p.x1},                {"x2", p.x2}};
}

inline Json to_json(const SolitonParams& p) {
  return Json{{"kind", "soliton"}, {"order", p.order.value()}, {"c", p.c}};
}

inline Json to_json(const IdentityParams& p) {
  return std::visit([](const auto& q) { return to_json(q); }, p);
}

inline Json to_json(const Window& w) {
  return Json{{"center", w.center}, {"half_width", w.half_width}, {"n_points", w.n_points}};
}

inline Json to_json(const ResidualReport& r) {
  return Json{{"identity_id", r.identity_id},   {"params", to_json(r.params)}, {"order", r.order.value()},
              {"t", r.t},                       {"sample_spec", r.sample_spec}, {"samples", r.samples},
              {"sup_residual", r.sup_residual}, {"rel_scale", r.rel_scale},     {"normalized", r.normalized()},
              {"variant", r.variant}};
}

/// Spectrum summary without eigenvectors; `lowest` eigenvalues are listed.
inline Json to_json(const SpectrumSummary& s, int lowest = 12) {
  Json ev = Json::array();
  for (int i = 0; i < std::min<int>(lowest, static_cast<int>(s.eigenvalues.size())); ++i) ev.push_back(s.eigenvalues[i]);
  return Json{{"lowest_eigenvalues", ev},
              {"negative_eigenvalues", s.negative_eigenvalues},
              {"kernel_eigenvalues", s.kernel_eigenvalues},
              {"kernel_tol", s.kernel_tol},
              {"continuum_edge_estimate", s.continuum_edge_estimate},
              {"continuum_edge_exact", s.continuum_edge_exact},
              {"lambda0_sq", s.lambda0_sq},
              {"negative_count", s.negative_count()},
              {"kernel_count", s.kernel_count()}};
}

inline Json to_json(const StabilityReport& r) {
  Json drifts = Json::object();
  for (const auto& [name, d] : r.drifts) drifts[name] = d;
  return Json{{"params", to_json(r.params)},
              {"eta", r.eta},
              {"perturbation", r.perturbation},
              {"initial_distance", r.initial_distance},
              {"sup_distance", r.sup_distance()},
              {"max_phase_speed", r.max_phase_speed()},
              {"drifts", drifts},
              {"times", r.times},
              {"distances", r.distances},
              {"x1", r.x1},
              {"x2", r.x2}};
}

/// One pass/fail line of a suite: pass iff measured <= budget.
struct CheckRecord {
  std::string id;
  Json params;
  double measured = 0.0;
  double budget = 0.0;
  bool pass = false;
  Json detail;  ///< optional structured payload
};

inline CheckRecord make_check(std::string id, Json params, double measured, double budget, Json detail = nullptr) {
  CheckRecord r{std::move(id), std::move(params), measured, budget, false, std::move(detail)};
  r.pass = std::isfinite(measured) && measured <= budget;
  return r;
}

struct SuiteReport {
  std::string command;
  std::string tool_version;
  Json config;
  std::vector<CheckRecord> records;

  int passed() const {
    return static_cast<int>(std::count_if(records.begin(), records.end(), [](const auto& r) { return r.pass; }));
  }
  int failed() const { return static_cast<int>(records.size()) - passed(); }
  bool all_pass() const { return failed() == 0; }

  Json to_json() const {
    Json recs = Json::array();
    for (const auto& r : records) {
      Json j{{"id", r.id}, {"params", r.params}, {"measured", r.measured}, {"budget", r.budget}, {"pass", r.pass}};
      if (!r.detail.is_null()) j["detail"] = r.detail;
      recs.push_back(std::move(j));
    }
    return Json{{"command", command},
                {"tool_version", tool_version},
                {"summary", Json{{"total", records.size()}, {"passed", passed()}, {"failed", failed()}}},
                {"config", config},
                {"records", recs}};
  }
};

/// Writes the snapshots of a trajectory as CSV field files plus a manifest.
/// Returns the manifest.
inline Json write_trajectory(const Trajectory& tr, const std::vector<FunctionalKind>& monitors,
                             const std::filesystem::path& dir, const std::string& stem) {
  Json snaps = Json::array();
  for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
    const Snapshot& s = tr.snapshots[i];
    char name[64];
    std::snprintf(name, sizeof name, "%s_%04zu.csv", stem.c_str(), i);
    std::string csv = "x,u\n";
    for (int j = 0; j < s.field.window.n_points; ++j)
      csv += format_double(s.field.window.x(j)) + "," + format_double(s.field.values[j]) + "\n";
    write_text(dir / name, csv);
    Json f = Json::object();
    for (std::size_t k = 0; k < monitors.size(); ++k) f[to_string(monitors[k])] = s.functionals[k].value;
    snaps.push_back(Json{{"t", s.t}, {"window", to_json(s.field.window)}, {"file", name}, {"functionals", f},
                         {"spectral_tail", s.spectral_tail}});
  }
  Json drifts = Json::object();
  for (std::size_t k = 0; k < monitors.size(); ++k) drifts[to_string(monitors[k])] = tr.drift(k);
  return Json{{"steps", tr.steps}, {"resolution_warning", tr.resolution_warning}, {"drifts", drifts},
              {"snapshots", snaps}};
}

}  // namespace mkdv
