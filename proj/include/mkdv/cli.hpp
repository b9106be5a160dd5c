#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mkdv/evolution.hpp"
#include "mkdv/functionals.hpp"
#include "mkdv/identities.hpp"
#include "mkdv/report.hpp"
#include "mkdv/spectral.hpp"

namespace mkdv::cli {

inline constexpr const char* kToolVersion = "mkdv_lab 1.0.0";

enum ExitCode : int { kAllPass = 0, kCheckFailure = 1, kUsage = 2, kInternal = 3 };

/// Bad command line or config file (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Command { kVerify, kSpectrum, kEvolve, kStability };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::kVerify: return "verify";
    case Command::kSpectrum: return "spectrum";
    case Command::kEvolve: return "evolve";
    case Command::kStability: return "stability";
  }
  return "?";
}

inline Command command_from_string(const std::string& s) {
  for (auto c : {Command::kVerify, Command::kSpectrum, Command::kEvolve, Command::kStability})
    if (to_string(c) == s) return c;
  throw ConfigError("unknown command '" + s + "'");
}

/// Resolved run configuration. Every field has a per-command default, and
/// the whole struct is echoed into the report.
struct RunConfig {
  Command command = Command::kVerify;
  std::vector<int> orders;
  std::vector<double> alphas, betas;
  std::uint64_t seed = 0;
  std::optional<double> budget;  ///< replaces every tolerance when set

  // verify
  std::vector<double> times{0.0, 0.37, 1.1};
  std::vector<double> soliton_c{0.25, 1.0, 4.0};
  int quadrature_points = 2048;
  int expansion_points = 1024;
  double expansion_eps = 0.01, tol_expansion = 0.4;  ///< |ratio - 8| budget
  double tol_ode4 = 1e-8, tol_soliton = 1e-9, tol_energy = 1e-8, tol_reduction = 1e-7, tol_identity = 1e-7;

  // spectrum
  int spectrum_n = 1024, spectrum_coarse_n = 512;
  int wronskian_points = 400;
  bool dump_matrix = false;
  double tol_edge = 0.02, tol_signed_forms = 1e-4, tol_b0 = 1e-4, tol_wronskian = 1e-8, tol_spread = 1e-5;

  // evolve
  int evolve_n = 512;
  double evolve_dt = 1.25e-4;
  double evolve_t_end = 0.0;  ///< 0: 0.2 / (alpha^2 + beta^2)^2
  int evolve_snapshots = 5;
  Integrator integrator = Integrator::kGauss4;
  double soliton_speed_c = 1.5, soliton_t_end = 0.5, soliton_dt = 5e-4;
  double tol_evolve = 1e-5, tol_drift = 1e-7;

  // stability
  int stability_n = 512;
  double stability_dt = 1e-3, stability_t_end = 5.0, stability_snapshot_every = 0.05;
  std::vector<double> etas{0.0, 1e-2};
  std::vector<std::string> perturbations{"gaussian", "kernel", "scaling"};
  double budget_factor = 10.0, tol_control = 1e-5;

  double tol(double t) const { return budget ? *budget : t; }

  void validate() const {
    auto positive = [](double v, const char* what) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
    };
    if (orders.empty() || alphas.empty() || betas.empty()) throw ConfigError("sweep lists must be non-empty");
    for (int o : orders) {
      if (o < 3 || o > 11 || o % 2 == 0) throw ConfigError("orders must be odd and in 3..11");
      if (command == Command::kEvolve || command == Command::kStability)
        if (o < 3 || o > 9) throw ConfigError("evolution supports orders 3..9");
    }
    for (double a : alphas) positive(a, "alpha");
    for (double b : betas) positive(b, "beta");
    if (times.empty() || soliton_c.empty()) throw ConfigError("sweep lists must be non-empty");
    for (double c : soliton_c) positive(c, "soliton c");
    if (budget && (!(*budget >= 0.0) || !std::isfinite(*budget))) throw ConfigError("budget must be >= 0");
    for (double t : {tol_ode4, tol_soliton, tol_energy, tol_reduction, tol_identity, tol_edge, tol_signed_forms,
                     tol_b0, tol_wronskian, tol_spread, tol_expansion, tol_evolve, tol_drift, tol_control, budget_factor})
      positive(t, "tolerances");
    positive(evolve_dt, "evolve.dt");
    positive(stability_dt, "stability.dt");
    positive(stability_t_end, "stability.t_end");
    positive(stability_snapshot_every, "stability.snapshot_every");
    if (evolve_snapshots < 1) throw ConfigError("evolve.snapshots must be >= 1");
    if (command == Command::kSpectrum && (orders.size() != 1 || orders[0] != 5))
      throw ConfigError("spectrum supports order 5 only");
    positive(expansion_eps, "expansion.eps");
    if (expansion_eps > 0.1) throw ConfigError("expansion.eps must be <= 0.1");
    for (int n : {quadrature_points, expansion_points, spectrum_n, spectrum_coarse_n, evolve_n, stability_n})
      if (n < 16 || (n & (n - 1)) != 0) throw ConfigError("grid sizes must be powers of two >= 16");
    if (wronskian_points < 1) throw ConfigError("spectrum.wronskian_points must be >= 1");
    positive(soliton_speed_c, "evolve.soliton_c");
    positive(soliton_t_end, "evolve.soliton_t_end");
    positive(soliton_dt, "evolve.soliton_dt");
    if (!(evolve_t_end >= 0.0)) throw ConfigError("evolve.t_end must be >= 0");
    if (etas.empty() || perturbations.empty()) throw ConfigError("sweep lists must be non-empty");
    for (double e : etas)
      if (!(e >= 0.0) || e > 0.1) throw ConfigError("eta must lie in [0, 0.1]");
    for (const auto& p : perturbations) {
      try {
        perturbation_from_string(p);
      } catch (const DomainError& e) {
        throw ConfigError(e.what());
      }
    }
  }

  Json to_json() const {
    Json j{{"command", to_string(command)}, {"orders", orders}, {"alphas", alphas}, {"betas", betas},
           {"seed", seed}, {"budget", budget ? Json(*budget) : Json(nullptr)}};
    switch (command) {
      case Command::kVerify:
        j["times"] = times;
        j["soliton_c"] = soliton_c;
        j["quadrature_points"] = quadrature_points;
        j["expansion"] = Json{{"n_points", expansion_points}, {"eps", expansion_eps}};
        j["tol"] = Json{{"ode4", tol_ode4}, {"soliton", tol_soliton}, {"energy", tol_energy},
                        {"reduction", tol_reduction}, {"identity", tol_identity},
                        {"expansion", tol_expansion}};
        break;
      case Command::kSpectrum:
        j["spectrum"] = Json{{"n_points", spectrum_n}, {"coarse_n_points", spectrum_coarse_n},
                             {"wronskian_points", wronskian_points}, {"dump_matrix", dump_matrix}};
        j["tol"] = Json{{"edge", tol_edge}, {"signed_forms", tol_signed_forms}, {"b0", tol_b0},
                        {"wronskian", tol_wronskian}, {"spread", tol_spread}};
        break;
      case Command::kEvolve:
        j["evolve"] = Json{{"n_points", evolve_n},      {"dt", evolve_dt},
                           {"t_end", evolve_t_end},     {"snapshots", evolve_snapshots},
                           {"integrator", mkdv::to_string(integrator)}, {"soliton_c", soliton_speed_c},
                           {"soliton_t_end", soliton_t_end}, {"soliton_dt", soliton_dt}};
        j["tol"] = Json{{"evolve", tol_evolve}, {"drift", tol_drift}};
        break;
      case Command::kStability:
        j["stability"] = Json{{"n_points", stability_n}, {"dt", stability_dt}, {"t_end", stability_t_end},
                              {"snapshot_every", stability_snapshot_every}, {"etas", etas},
                              {"perturbations", perturbations}, {"budget_factor", budget_factor}};
        j["tol"] = Json{{"control", tol_control}, {"drift", tol_drift}};
        break;
    }
    return j;
  }
};

inline RunConfig defaults_for(Command c) {
  RunConfig r;
  r.command = c;
  switch (c) {
    case Command::kVerify:
      r.orders = {3, 5, 7, 9, 11};
      r.alphas = r.betas = {0.5, 1.0, 2.0};
      break;
    case Command::kSpectrum:
      r.orders = {5};
      r.alphas = r.betas = {0.5, 1.0, 2.0};
      break;
    case Command::kEvolve:
      r.orders = {5, 7, 9};
      r.alphas = r.betas = {1.0};
      break;
    case Command::kStability:
      r.orders = {5};
      r.alphas = r.betas = {1.0};
      break;
  }
  return r;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || !std::isfinite(d)) throw ConfigError("'" + key + "': not a number: '" + v + "'");
  return d;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long d = 0;
  try {
    d = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) throw ConfigError("'" + key + "': not an integer: '" + v + "'");
  return d;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("'" + key + "': not a boolean: '" + v + "'");
}

}  // namespace detail

/// Parses a flat `key = value` file. `#` starts a comment; lists are
/// comma-separated. Unknown or repeated keys are errors.
inline RunConfig parse_config(const std::string& text, Command command) {
  using namespace detail;
  RunConfig r = defaults_for(command);
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");

    auto doubles = [&] {
      std::vector<double> v;
      for (const auto& s : split_list(val)) v.push_back(parse_double(key, s));
      return v;
    };
    auto num = [&] { return parse_double(key, val); };
    auto integer = [&] { return static_cast<int>(parse_int(key, val)); };

    if (key == "command") {
      if (command_from_string(val) != command) throw ConfigError("config is for '" + val + "', not '" + to_string(command) + "'");
    } else if (key == "orders") {
      r.orders.clear();
      for (const auto& s : split_list(val)) r.orders.push_back(static_cast<int>(parse_int(key, s)));
    } else if (key == "alphas") r.alphas = doubles();
    else if (key == "betas") r.betas = doubles();
    else if (key == "seed") {
      const long long s = parse_int(key, val);
      if (s < 0) throw ConfigError("seed must be >= 0");
      r.seed = static_cast<std::uint64_t>(s);
    } else if (key == "budget") r.budget = num();
    else if (key == "times") r.times = doubles();
    else if (key == "soliton_c") r.soliton_c = doubles();
    else if (key == "quadrature_points") r.quadrature_points = integer();
    else if (key == "expansion.n_points") r.expansion_points = integer();
    else if (key == "expansion.eps") r.expansion_eps = num();
    else if (key == "tol.expansion") r.tol_expansion = num();
    else if (key == "tol.ode4") r.tol_ode4 = num();
    else if (key == "tol.soliton") r.tol_soliton = num();
    else if (key == "tol.energy") r.tol_energy = num();
    else if (key == "tol.reduction") r.tol_reduction = num();
    else if (key == "tol.identity") r.tol_identity = num();
    else if (key == "spectrum.n_points") r.spectrum_n = integer();
    else if (key == "spectrum.coarse_n_points") r.spectrum_coarse_n = integer();
    else if (key == "spectrum.wronskian_points") r.wronskian_points = integer();
    else if (key == "spectrum.dump_matrix") r.dump_matrix = parse_bool(key, val);
    else if (key == "tol.edge") r.tol_edge = num();
    else if (key == "tol.signed_forms") r.tol_signed_forms = num();
    else if (key == "tol.b0") r.tol_b0 = num();
    else if (key == "tol.wronskian") r.tol_wronskian = num();
    else if (key == "tol.spread") r.tol_spread = num();
    else if (key == "evolve.n_points") r.evolve_n = integer();
    else if (key == "evolve.dt") r.evolve_dt = num();
    else if (key == "evolve.t_end") r.evolve_t_end = num();
    else if (key == "evolve.snapshots") r.evolve_snapshots = integer();
    else if (key == "evolve.integrator") {
      try {
        r.integrator = integrator_from_string(val);
      } catch (const DomainError& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "evolve.soliton_c") r.soliton_speed_c = num();
    else if (key == "evolve.soliton_t_end") r.soliton_t_end = num();
    else if (key == "evolve.soliton_dt") r.soliton_dt = num();
    else if (key == "tol.evolve") r.tol_evolve = num();
    else if (key == "tol.drift") r.tol_drift = num();
    else if (key == "stability.n_points") r.stability_n = integer();
    else if (key == "stability.dt") r.stability_dt = num();
    else if (key == "stability.t_end") r.stability_t_end = num();
    else if (key == "stability.snapshot_every") r.stability_snapshot_every = num();
    else if (key == "stability.etas") r.etas = doubles();
    else if (key == "stability.perturbations") r.perturbations = split_list(val);
    else if (key == "stability.budget_factor") r.budget_factor = num();
    else if (key == "tol.control") r.tol_control = num();
    else throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  r.validate();
  return r;
}

inline RunConfig load_config(const std::filesystem::path& path, Command command) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), command);
}

/// Worker count from MKDV_WORKERS, else the hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("MKDV_WORKERS")) {
    const long long n = detail::parse_int("MKDV_WORKERS", detail::trim(env));
    if (n < 1) throw ConfigError("MKDV_WORKERS must be >= 1");
    return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs job(i) for i in [0, n) on a pool; results come back in index order.
/// The first exception by index is rethrown after all workers finish.
template <class R, class F>
std::vector<R> parallel_map(std::size_t n, F job, int workers) {
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errs(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        out[i] = job(i);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int w = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  for (int t = 1; t < w; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

namespace detail {

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline Json point(int order, double a, double b) { return Json{{"order", order}, {"alpha", a}, {"beta", b}}; }

inline Json point_t(int order, double a, double b, double t) {
  Json j = point(order, a, b);
  j["t"] = t;
  return j;
}

inline bool has(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

/// |#passing - 1| over the verbatim form and its variants.
inline CheckRecord exactly_one(const std::string& id, Json params, const std::vector<ResidualReport>& reports,
                               double tol) {
  Json d = Json::array();
  int passing = 0;
  for (const auto& r : reports) {
    passing += r.normalized() <= tol;
    d.push_back(Json{{"variant", r.variant}, {"normalized", r.normalized()}});
  }
  return make_check(id, std::move(params), std::abs(passing - 1), 0.0, Json{{"variants", d}, {"tolerance", tol}});
}

}  // namespace detail

/// Identity, ODE, energy and reduction checks over the sweep.
inline SuiteReport cmd_verify(const RunConfig& cfg, int workers = 1) {
  using namespace detail;
  struct Point {
    double a, b;
  };
  std::vector<Point> pts;
  for (double a : cfg.alphas)
    for (double b : cfg.betas) pts.push_back({a, b});

  auto job = [&](std::size_t i) {
    std::vector<CheckRecord> recs;
    const double a = pts[i].a, b = pts[i].b;
    const IdentityVariant fixed9 = resolved_velocity_variant(Order(9));
    for (int o : cfg.orders) {
      const BreatherParams p{Order(o), a, b};
      for (double t : cfg.times) {
        const ResidualReport r = breather_ode_residual(p, t);
        recs.push_back(make_check("breather_ode4", point_t(o, a, b, t), r.normalized(), cfg.tol(cfg.tol_ode4),
                                  mkdv::to_json(r)));
      }
      for (double t : cfg.times) {
        const ResidualReport r = evolution_identity_residual(p, t, o == 9 ? fixed9 : IdentityVariant{});
        recs.push_back(make_check("evolution_identity", point_t(o, a, b, t), r.normalized(),
                                  cfg.tol(cfg.tol_identity), mkdv::to_json(r)));
      }
      // The candidate readings coincide when alpha = beta or alpha = 1.
      if (o == 9 && std::abs(a - b) > 1e-6 * b && std::abs(a - 1.0) > 1e-6)
        recs.push_back(exactly_one(
            "delta9_exactly_one_variant", point(o, a, b),
            run_variants({IdentityId::kEvolution, p, Order(9), 0.0, std::nullopt}, delta9_variants()),
            cfg.tol(cfg.tol_identity)));
    }

    // Energies and reductions on the quadrature grid.
    auto field = [&](int o) {
      const BreatherParams p{Order(o), a, b};
      return sample_breather(p, 0.0, Window::for_breather(p, cfg.quadrature_points), 4);
    };
    {
      const SampledField f = field(5);
      recs.push_back(make_check("mass", point(5, a, b), rel_err(mass(f).value, breather_values::mass(a, b)),
                                cfg.tol(cfg.tol_energy)));
      recs.push_back(make_check("energy", point(5, a, b), rel_err(energy(f).value, breather_values::energy(a, b)),
                                cfg.tol(cfg.tol_energy)));
    }
    for (auto [o, kind] : {std::pair{5, FunctionalKind::E5}, std::pair{7, FunctionalKind::E7},
                           std::pair{9, FunctionalKind::E9}}) {
      if (!has(cfg.orders, o)) continue;
      const BreatherParams p{Order(o), a, b};
      const double closed = breather_values::higher_energy(kind, a, b);
      const double q = higher_energy(field(o), kind).value;
      recs.push_back(make_check("higher_energy_" + to_string(kind), point(o, a, b), rel_err(q, closed),
                                cfg.tol(cfg.tol_energy), Json{{"quadrature", q}, {"closed_form", closed}}));
      const double mt = integrated_partial_mass_rate(p, 0.0, Window::for_breather(p, cfg.quadrature_points));
      const double red = energy_from_mass_rate(kind, mt);
      recs.push_back(make_check("reduction_" + to_string(kind), point(o, a, b), rel_err(red, q),
                                cfg.tol(cfg.tol_reduction),
                                Json{{"integral_mt", mt}, {"reduction", red}, {"quadrature", q}}));
    }

    if (has(cfg.orders, 5)) {
      const BreatherParams p{Order(5), a, b};
      const Window w = Window::for_breather(p, cfg.expansion_points);
      for (const auto& [name, shape] : expansion_shapes(p, w)) {
        const double r = remainder_ratio(p, shape, cfg.expansion_eps);
        Json pt = point(5, a, b);
        pt["shape"] = name;
        recs.push_back(make_check("expansion_cubic_ratio", pt, std::abs(r - 8.0), cfg.tol(cfg.tol_expansion),
                                  Json{{"ratio", r}, {"eps", cfg.expansion_eps}}));
      }
    }

    // Remaining identities at the matching orders.
    for (double t : cfg.times) {
      auto push = [&](const std::string& id, int o, const ResidualReport& r) {
        recs.push_back(make_check(id, point_t(o, a, b, t), r.normalized(), cfg.tol(cfg.tol_identity), mkdv::to_json(r)));
      };
      if (has(cfg.orders, 5)) {
        const BreatherParams p{Order(5), a, b};
        push("first_integral_5", 5, first_integral_residual(p, FirstIntegralCase::k5th, t));
        push("time_derivative_5", 5, time_derivative5_residual(p, t));
      }
      if (has(cfg.orders, 7)) {
        const BreatherParams p{Order(7), a, b};
        push("first_integral_7", 7, first_integral_residual(p, FirstIntegralCase::k7th, t, first_integral7_variants().back()));
        push("reduced_time_derivative_7", 7, reduced_time_derivative_residual(p, ReducedCase::k7th, t));
      }
      if (has(cfg.orders, 9)) {
        const BreatherParams p{Order(9), a, b};
        push("first_integral_9", 9, first_integral_residual(p, FirstIntegralCase::k9th, t, fixed9));
        push("reduced_time_derivative_9", 9, reduced_time_derivative_residual(p, ReducedCase::k9th, t, fixed9));
      }
    }
    if (has(cfg.orders, 7))
      recs.push_back(exactly_one(
          "first_integral_7_exactly_one_variant", point(7, a, b),
          run_variants({IdentityId::kFirstIntegral7, BreatherParams{Order(7), a, b}, Order(7), 0.0, std::nullopt},
                       first_integral7_variants()),
          cfg.tol(cfg.tol_identity)));
    return recs;
  };

  auto soliton_job = [&] {
    std::vector<CheckRecord> recs;
    for (double c : cfg.soliton_c) {
      const ResidualReport r2 = soliton_ode_residual({Order(3), c}, SolitonOdeLevel::kSecond);
      recs.push_back(make_check("soliton_ode2", Json{{"c", c}}, r2.normalized(), cfg.tol(cfg.tol_soliton), mkdv::to_json(r2)));
      for (int o : cfg.orders) {
        if (o == 3) continue;
        const ResidualReport r = soliton_ode_residual({Order(o), c}, SolitonOdeLevel::kHigh);
        recs.push_back(make_check("soliton_ode_high", Json{{"order", o}, {"c", c}}, r.normalized(),
                                  cfg.tol(cfg.tol_soliton), mkdv::to_json(r)));
      }
    }
    return recs;
  };

  auto parts = parallel_map<std::vector<CheckRecord>>(
      pts.size() + 1, [&](std::size_t i) { return i < pts.size() ? job(i) : soliton_job(); }, workers);
  SuiteReport rep{"verify", kToolVersion, cfg.to_json(), {}};
  for (auto& p : parts)
    for (auto& r : p) rep.records.push_back(std::move(r));
  return rep;
}

/// Spectral classification and coercivity checks over the (alpha, beta) sweep.
inline SuiteReport cmd_spectrum(const RunConfig& cfg, const std::filesystem::path& out, int workers = 1) {
  using namespace detail;
  std::vector<std::pair<double, double>> pts;
  for (double a : cfg.alphas)
    for (double b : cfg.betas) pts.emplace_back(a, b);

  auto job = [&](std::size_t i) {
    const auto [a, b] = pts[i];
    std::vector<CheckRecord> recs;
    const BreatherParams p{Order(5), a, b};
    const Json pt = point(5, a, b);
    auto analyse = [&](int n) {
      const Window w = spectral_window(p, n);
      const DiscreteOperator op = build_operator(p, 0.0, w);
      SpectrumSummary s = spectrum(op);
      DirectionVectors d = directions(p, 0.0, w);
      const double nu = coercivity(op, d, s.negative_vector);
      return std::tuple{w, op, std::move(s), std::move(d), nu};
    };
    const auto [w, op, s, d, nu] = analyse(cfg.spectrum_n);
    const double nu_coarse = std::get<4>(analyse(cfg.spectrum_coarse_n));
    if (cfg.dump_matrix) {
      char name[96];
      std::snprintf(name, sizeof name, "operator_%03zu.bin", i);
      op.dump(out / name);
    }
    recs.push_back(make_check("negative_count", pt, std::abs(s.negative_count() - 1), 0.0,
                              Json{{"count", s.negative_count()}}));
    recs.push_back(make_check("kernel_count", pt, std::abs(s.kernel_count() - 2), 0.0, Json{{"count", s.kernel_count()}}));
    recs.push_back(make_check("continuum_edge", pt, rel_err(s.continuum_edge_estimate, continuum_edge(a, b)),
                              cfg.tol(cfg.tol_edge)));
    const double target = 16 * a * a * b;
    recs.push_back(make_check("form_lambda_alpha", pt, rel_err(operator_form(op, d.lambda_alpha.values), target),
                              cfg.tol(cfg.tol_signed_forms)));
    recs.push_back(make_check("form_lambda_beta", pt, rel_err(operator_form(op, d.lambda_beta.values), -target),
                              cfg.tol(cfg.tol_signed_forms)));
    const B0Relations r = b0_relations(p, 0.0, w);
    recs.push_back(make_check("b0_pairing", pt, rel_err(r.mass_pairing, r.expected_pairing), cfg.tol(cfg.tol_b0)));
    recs.push_back(make_check("b0_half_form", pt, rel_err(r.half_form, r.expected_half_form), cfg.tol(cfg.tol_b0)));
    std::vector<double> xs(cfg.wronskian_points);
    std::mt19937_64 rng(cfg.seed + i);
    std::uniform_real_distribution<double> ux(-10.0 / b, 10.0 / b);
    for (double& x : xs) x = ux(rng);
    const ResidualReport wr = wronskian_check(p, 0.0, xs);
    recs.push_back(make_check("wronskian", pt, wr.normalized(), cfg.tol(cfg.tol_wronskian), mkdv::to_json(wr)));
    recs.push_back(make_check("coercivity_positive", pt, -nu, 0.0, Json{{"nu0", nu}}));
    recs.push_back(make_check("coercivity_grid_spread", pt, std::abs(nu - nu_coarse), cfg.tol(cfg.tol_spread),
                              Json{{"nu0", nu}, {"nu0_coarse", nu_coarse}}));
    recs.back().detail["spectrum"] = mkdv::to_json(s);
    return recs;
  };
  auto parts = parallel_map<std::vector<CheckRecord>>(pts.size(), job, workers);
  SuiteReport rep{"spectrum", kToolVersion, cfg.to_json(), {}};
  for (auto& p : parts)
    for (auto& r : p) rep.records.push_back(std::move(r));
  return rep;
}

inline std::vector<FunctionalKind> monitors_for(Order o) {
  std::vector<FunctionalKind> k{FunctionalKind::M, FunctionalKind::E};
  if (o.value() == 5) k.push_back(FunctionalKind::E5);
  if (o.value() == 7) k.push_back(FunctionalKind::E7);
  if (o.value() == 9) k.push_back(FunctionalKind::E9);
  return k;
}

/// Exact-breather propagation and soliton speed law, with field dumps.
inline SuiteReport cmd_evolve(const RunConfig& cfg, const std::filesystem::path& out, int workers = 1) {
  using namespace detail;
  struct Run {
    bool soliton;
    int order;
    double a, b;
  };
  std::vector<Run> runs;
  for (int o : cfg.orders)
    for (double a : cfg.alphas)
      for (double b : cfg.betas) runs.push_back({false, o, a, b});
  for (int o : cfg.orders)
    if (o >= 5) runs.push_back({true, o, cfg.soliton_speed_c, 0.0});

  struct Result {
    std::vector<CheckRecord> recs;
    Json manifest;
  };
  auto job = [&](std::size_t i) {
    const Run& r = runs[i];
    Result res;
    char stem[32];
    std::snprintf(stem, sizeof stem, "run_%03zu", i);
    EvolutionConfig c;
    c.order = Order(r.order);
    c.integrator = cfg.integrator;
    std::vector<FunctionalKind> mons = monitors_for(c.order);
    Json pt;
    SampledField u0;
    double expected_shift = 0.0;
    BreatherParams bp{Order(r.order), r.a, r.b};
    if (!r.soliton) {
      const double t_end = cfg.evolve_t_end > 0.0 ? cfg.evolve_t_end
                                                  : 0.2 / std::pow(r.a * r.a + r.b * r.b, 2);
      c.window = Window::for_breather(bp, cfg.evolve_n, 0.0, 20.0);
      c.frame_speed = bp.velocities().gamma;
      // Round the step so that t_end is a whole number of steps.
      const long steps = std::max(1L, static_cast<long>(std::ceil(t_end / cfg.evolve_dt - 1e-9)));
      c.dt = t_end / steps;
      c.t_end = steps * c.dt;
      const long every = std::max(1L, steps / cfg.evolve_snapshots);
      c.snapshot_every = every * c.dt;
      u0 = sample_breather_periodic(bp, 0.0, c.window, 0);
      pt = point(r.order, r.a, r.b);
      pt["t_end"] = c.t_end;
    } else {
      const SolitonParams sp{Order(r.order), r.a};
      const double v = sp.speed();
      const long steps = std::max(1L, static_cast<long>(std::ceil(cfg.soliton_t_end / cfg.soliton_dt - 1e-9)));
      c.dt = cfg.soliton_t_end / steps;
      c.t_end = steps * c.dt;
      c.snapshot_every = std::max(1L, steps / cfg.evolve_snapshots) * c.dt;
      c.window = Window{0.5 * v * c.t_end, 20.0 + 0.5 * v * c.t_end, cfg.evolve_n};
      u0 = sample_soliton(sp, 0.0, c.window, 0);
      expected_shift = v * c.t_end;
      pt = Json{{"order", r.order}, {"c", sp.c}, {"t_end", c.t_end}};
    }
    const Trajectory tr = evolve(u0, c, mons);
    res.manifest = write_trajectory(tr, mons, out, stem);
    res.manifest["run"] = stem;
    res.manifest["params"] = pt;
    res.manifest["integrator"] = mkdv::to_string(c.integrator);
    res.manifest["dt"] = c.dt;
    if (!r.soliton) {
      const Snapshot& s = tr.snapshots.back();
      const SampledField ref = sample_breather_periodic(bp, s.t, s.field.window, 0);
      std::vector<double> d(ref.values.size());
      for (std::size_t j = 0; j < d.size(); ++j) d[j] = s.field.values[j] - ref.values[j];
      res.recs.push_back(make_check("breather_h2_error", pt, sobolev_norm(s.field.window, d, 2), cfg.tol(cfg.tol_evolve)));
    } else {
      // Cross-correlation peak of the final field against the initial one.
      const auto& a = u0.values;
      const auto& b = tr.snapshots.back().field.values;
      const int n = static_cast<int>(a.size());
      int best = 0;
      double top = -1e300;
      for (int lag = -n / 2; lag < n / 2; ++lag) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += a[j] * b[((j + lag) % n + n) % n];
        if (acc > top) top = acc, best = lag;
      }
      const double h = c.window.spacing();
      res.recs.push_back(make_check("soliton_shift_cells", pt, std::abs(best * h - expected_shift) / h,
                                    cfg.tol(1.0), Json{{"expected_shift", expected_shift}, {"lag_cells", best}}));
    }
    for (std::size_t k = 0; k < mons.size(); ++k)
      res.recs.push_back(make_check("drift_" + to_string(mons[k]), pt, tr.drift(k), cfg.tol(cfg.tol_drift)));
    return res;
  };
  auto parts = parallel_map<Result>(runs.size(), job, workers);
  SuiteReport rep{"evolve", kToolVersion, cfg.to_json(), {}};
  Json manifest = Json::array();
  for (auto& p : parts) {
    for (auto& r : p.recs) rep.records.push_back(std::move(r));
    manifest.push_back(std::move(p.manifest));
  }
  write_text(out / "manifest.json", to_json_text(Json{{"tool_version", kToolVersion}, {"runs", manifest}}));
  return rep;
}

/// Perturbed-breather runs with modulation fits; one JSON and CSV per run.
inline SuiteReport cmd_stability(const RunConfig& cfg, const std::filesystem::path& out, int workers = 1) {
  using namespace detail;
  struct Run {
    int order;
    double a, b, eta;
    Perturbation shape;
  };
  std::vector<Run> runs;
  for (int o : cfg.orders)
    for (double a : cfg.alphas)
      for (double b : cfg.betas)
        for (double eta : cfg.etas)
          for (const auto& s : cfg.perturbations) {
            runs.push_back({o, a, b, eta, perturbation_from_string(s)});
            if (eta == 0.0) break;  // every shape is the same run at eta = 0
          }

  auto job = [&](std::size_t i) {
    const Run& r = runs[i];
    const BreatherParams p{Order(r.order), r.a, r.b};
    const EvolutionConfig c = stability_config(p, cfg.stability_n, cfg.stability_dt, cfg.stability_t_end,
                                               cfg.stability_snapshot_every);
    const StabilityReport s = stability_experiment(p, r.eta, r.shape, c, cfg.seed);
    char stem[32];
    std::snprintf(stem, sizeof stem, "stability_%03zu", i);
    write_text(out / (std::string(stem) + ".json"), to_json_text(mkdv::to_json(s)));
    std::string csv = "t,distance,x1,x2\n";
    for (std::size_t k = 0; k < s.times.size(); ++k)
      csv += format_double(s.times[k]) + "," + format_double(s.distances[k]) + "," + format_double(s.x1[k]) + "," +
             format_double(s.x2[k]) + "\n";
    write_text(out / (std::string(stem) + ".csv"), csv);

    Json pt = point(r.order, r.a, r.b);
    pt["eta"] = r.eta;
    pt["perturbation"] = r.eta == 0.0 ? "none" : to_string(r.shape);
    pt["file"] = std::string(stem) + ".json";
    std::vector<CheckRecord> recs;
    const double dist_budget = r.eta == 0.0 ? cfg.tol(cfg.tol_control) : cfg.tol(cfg.budget_factor * r.eta);
    const double speed_budget = r.eta == 0.0 ? cfg.tol(cfg.tol_control) : cfg.tol(cfg.budget_factor * r.eta);
    recs.push_back(make_check("sup_modulated_distance", pt, s.sup_distance(), dist_budget));
    recs.push_back(make_check("max_phase_speed", pt, s.max_phase_speed(), speed_budget));
    for (const auto& [name, d] : s.drifts) recs.push_back(make_check("drift_" + name, pt, d, cfg.tol(cfg.tol_drift)));
    return recs;
  };
  auto parts = parallel_map<std::vector<CheckRecord>>(runs.size(), job, workers);
  SuiteReport rep{"stability", kToolVersion, cfg.to_json(), {}};
  for (auto& p : parts)
    for (auto& r : p) rep.records.push_back(std::move(r));
  return rep;
}

/// Runs one command into `out` (which must exist) and writes report.json.
inline SuiteReport run(const RunConfig& cfg, const std::filesystem::path& out, int workers) {
  if (!std::filesystem::is_directory(out)) throw ConfigError("output directory does not exist: " + out.string());
  SuiteReport rep;
  switch (cfg.command) {
    case Command::kVerify: rep = cmd_verify(cfg, workers); break;
    case Command::kSpectrum: rep = cmd_spectrum(cfg, out, workers); break;
    case Command::kEvolve: rep = cmd_evolve(cfg, out, workers); break;
    case Command::kStability: rep = cmd_stability(cfg, out, workers); break;
  }
  write_text(out / "report.json", to_json_text(rep.to_json()));
  return rep;
}

}  // namespace mkdv::cli
