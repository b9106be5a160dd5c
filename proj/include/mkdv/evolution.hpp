#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mkdv/closed_forms.hpp"
#include "mkdv/error.hpp"
#include "mkdv/functionals.hpp"
#include "mkdv/grid.hpp"
#include "mkdv/spectral.hpp"

namespace mkdv {

enum class Integrator {
  kEtdrk4,  ///< exponential RK4, exact linear propagator, explicit flux
  kGauss4,  ///< two-stage Gauss-Legendre, implicit in everything
};

inline std::string to_string(Integrator i) { return i == Integrator::kEtdrk4 ? "etdrk4" : "gauss4"; }

inline Integrator integrator_from_string(const std::string& s) {
  if (s == "etdrk4") return Integrator::kEtdrk4;
  if (s == "gauss4") return Integrator::kGauss4;
  throw DomainError("unknown integrator '" + s + "'");
}

/// Polynomial degree of the flux f_n in u and its derivatives.
inline int flux_degree(Order order) { return order.value(); }

/// Smallest padding factor that removes aliasing from a degree-p flux.
inline int min_dealias_pad(Order order) { return (flux_degree(order) + 2) / 2; }

struct EvolutionConfig {
  Order order{5};
  Window window;
  double dt = 1e-3;
  double t_end = 0.0;
  int dealias_pad = 0;  ///< 0 selects min_dealias_pad(order)
  std::optional<double> filter;  ///< strength s of exp(-s (k/kmax)^36)
  Integrator integrator = Integrator::kGauss4;
  double frame_speed = 0.0;  ///< grid moves so that xi = x + frame_speed * t
  double snapshot_every = 0.0;  ///< 0: initial and final states only
  bool allow_aliasing = false;  ///< permits dealias_pad below the minimum
  double newton_tol = 1e-12;

  int pad() const { return dealias_pad > 0 ? dealias_pad : min_dealias_pad(order); }

  void validate() const {
    window.validate();
    if (!(dt != 0.0) || !std::isfinite(dt)) throw DomainError("evolution: dt must be non-zero and finite");
    if (!std::isfinite(t_end)) throw DomainError("evolution: t_end must be finite");
    if (dealias_pad < 0) throw DomainError("evolution: dealias_pad must be >= 1");
    if (pad() < min_dealias_pad(order) && !allow_aliasing)
      throw DomainError("evolution: dealias_pad " + std::to_string(pad()) + " < required " +
                        std::to_string(min_dealias_pad(order)));
    if (filter && !(*filter >= 0.0)) throw DomainError("evolution: filter strength must be >= 0");
    if (snapshot_every < 0.0) throw DomainError("evolution: snapshot_every must be >= 0");
  }
};

/// Time stepper for u_t + (u_{(n-1)x} + f_n(u))_x = 0 on a periodic window,
/// written in the frame xi = x + frame_speed t.
class Evolver {
 public:
  using Vec = Eigen::VectorXd;
  using CVec = std::vector<std::complex<double>>;

  explicit Evolver(EvolutionConfig cfg)
      : cfg_(std::move(cfg)), n_(cfg_.window.n_points), m_(cfg_.pad() * n_), fft_(n_), fft_pad_(m_),
        terms_(flux_terms(cfg_.order)), jet_(flux_jet_order(cfg_.order)) {
    cfg_.validate();
    const int nb = n_ / 2 + 1;
    k_.resize(nb);
    lin_.resize(nb);
    for (int j = 0; j < nb; ++j) {
      k_[j] = cfg_.window.wavenumber(j);
      lin_[j] = j == n_ / 2 ? 0.0 : linear_symbol(k_[j]);
    }
    if (cfg_.filter) {
      filter_.resize(nb);
      const double kmax = k_.back();
      for (int j = 0; j < nb; ++j) filter_[j] = std::exp(-*cfg_.filter * std::pow(k_[j] / kmax, 36));
    }
    if (cfg_.integrator == Integrator::kEtdrk4) init_etdrk4(cfg_.dt);
    init_gauss4();
  }

  const EvolutionConfig& config() const { return cfg_; }

  /// Symbol of the linear part -(ik)^n - i c k.
  std::complex<double> linear_symbol(double k) const {
    std::complex<double> s = 1.0;
    for (int e = 0; e < cfg_.order.value(); ++e) s *= std::complex<double>(0.0, k);
    return -s - std::complex<double>(0.0, cfg_.frame_speed * k);
  }

  /// -d/dx f_n(u), dealiased, in Fourier space. Nyquist bin is zero.
  CVec nonlinear_hat(const CVec& uh) const {
    const auto d = padded_derivatives(uh);
    std::vector<double> f(m_);
    JetValues jv{};
    for (int i = 0; i < m_; ++i) {
      for (int q = 0; q <= jet_; ++q) jv[q] = d[q][i];
      f[i] = evaluate_terms(terms_, 0.0, 0.0, jv);
    }
    return flux_to_rhs(f);
  }

  /// Full right-hand side in physical space.
  Vec rhs(const Vec& u) const {
    CVec uh = fft_.forward(std::span<const double>(u.data(), n_));
    uh.back() = 0.0;
    CVec nh = nonlinear_hat(uh);
    for (std::size_t j = 0; j < nh.size(); ++j) nh[j] += lin_[j] * uh[j];
    const std::vector<double> r = fft_.backward(std::move(nh));
    return Eigen::Map<const Vec>(r.data(), n_);
  }

  /// Dense Jacobian of rhs at u, exact for the dealiased discretization.
  Eigen::MatrixXd jacobian(const Vec& u) const {
    CVec uh = fft_.forward(std::span<const double>(u.data(), n_));
    uh.back() = 0.0;
    const auto d = padded_derivatives(uh);
    // g[q] = df/du_q on the padded grid.
    std::vector<std::vector<double>> g(jet_ + 1, std::vector<double>(m_, 0.0));
    JetValues jv{};
    for (int i = 0; i < m_; ++i) {
      for (int q = 0; q <= jet_; ++q) jv[q] = d[q][i];
      for (int q = 0; q <= jet_; ++q)
        for (const auto& t : terms_) {
          const int pw = t.mono.pow[q];
          if (!pw) continue;
          Monomial reduced = t.mono;
          reduced.pow[q] = static_cast<std::uint8_t>(pw - 1);
          g[q][i] += t.coef(0.0, 0.0) * pw * reduced(jv);
        }
    }
    Eigen::MatrixXd jac(n_, n_);
    std::vector<double> e(n_, 0.0), acc(m_);
    for (int c = 0; c < n_; ++c) {
      e[c] = 1.0;
      CVec eh = fft_.forward(e);
      e[c] = 0.0;
      eh.back() = 0.0;
      const auto de = padded_derivatives(eh);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int q = 0; q <= jet_; ++q)
        for (int i = 0; i < m_; ++i) acc[i] += g[q][i] * de[q][i];
      CVec col = flux_to_rhs(acc);
      for (std::size_t j = 0; j < col.size(); ++j) col[j] += lin_[j] * eh[j];
      const std::vector<double> r = fft_.backward(std::move(col));
      for (int i = 0; i < n_; ++i) jac(i, c) = r[i];
    }
    return jac;
  }

  /// Advances u by one step of size dt (which may be negative for Gauss4).
  void step(Vec& u) {
    if (!u.allFinite()) throw BlowUpError("non-finite state before step");
    if (cfg_.integrator == Integrator::kEtdrk4) step_etdrk4(u);
    else step_gauss4(u);
    if (cfg_.filter) apply_filter(u);
    if (!u.allFinite()) throw BlowUpError("non-finite state after step");
  }

  /// Tail-to-peak ratio of the spectrum over the top tenth of wavenumbers.
  double spectral_tail(const Vec& u) const {
    const CVec uh = fft_.forward(std::span<const double>(u.data(), n_));
    double peak = 0.0, tail = 0.0;
    const int nb = static_cast<int>(uh.size());
    for (int j = 0; j < nb; ++j) {
      const double a = std::abs(uh[j]);
      peak = std::max(peak, a);
      if (j >= nb - nb / 10) tail = std::max(tail, a);
    }
    return peak > 0.0 ? tail / peak : 0.0;
  }

  int jacobian_updates() const { return jacobian_updates_; }
  int newton_iterations() const { return newton_total_; }

  /// Projects u onto the resolved modes (zero Nyquist bin).
  Vec project(const Vec& u) const {
    CVec uh = fft_.forward(std::span<const double>(u.data(), n_));
    uh.back() = 0.0;
    const std::vector<double> r = fft_.backward(std::move(uh));
    return Eigen::Map<const Vec>(r.data(), n_);
  }

 private:
  /// Derivatives 0..jet of the trigonometric interpolant of uh on the padded grid.
  std::vector<std::vector<double>> padded_derivatives(const CVec& uh) const {
    const int nb = n_ / 2 + 1;
    std::vector<std::vector<double>> d(jet_ + 1, std::vector<double>(m_));
    CVec buf(m_ / 2 + 1);
    for (int q = 0; q <= jet_; ++q) {
      std::fill(buf.begin(), buf.end(), 0.0);
      for (int j = 0; j < nb - 1; ++j) {
        std::complex<double> s = uh[j];
        for (int e = 0; e < q; ++e) s *= std::complex<double>(0.0, k_[j]);
        buf[j] = s;
      }
      fft_pad_.backward(buf, d[q]);
      // The padded inverse carries 1/m; undo it and apply 1/n instead.
      for (double& v : d[q]) v *= static_cast<double>(m_) / n_;
    }
    return d;
  }

  /// -d/dx of a padded-grid flux, truncated to the resolved modes.
  CVec flux_to_rhs(const std::vector<double>& f) const {
    CVec fh(m_ / 2 + 1);
    fft_pad_.forward(f, fh);
    const int nb = n_ / 2 + 1;
    CVec out(nb, 0.0);
    const double scale = static_cast<double>(n_) / m_;
    for (int j = 0; j < nb - 1; ++j) out[j] = -std::complex<double>(0.0, k_[j]) * fh[j] * scale;
    return out;
  }

  void apply_filter(Vec& u) const {
    CVec uh = fft_.forward(std::span<const double>(u.data(), n_));
    for (std::size_t j = 0; j < uh.size(); ++j) uh[j] *= filter_[j];
    const std::vector<double> r = fft_.backward(std::move(uh));
    u = Eigen::Map<const Vec>(r.data(), n_);
  }

  // ETDRK4 coefficients by contour integrals of the phi functions.
  void init_etdrk4(double h) {
    const int nb = n_ / 2 + 1;
    constexpr int kContour = 64;
    e_.resize(nb);
    e2_.resize(nb);
    q_.resize(nb);
    f1_.resize(nb);
    f2_.resize(nb);
    f3_.resize(nb);
    for (int j = 0; j < nb; ++j) {
      const std::complex<double> lh = lin_[j] * h;
      e_[j] = std::exp(lh);
      e2_[j] = std::exp(lh / 2.0);
      std::complex<double> q = 0.0, a = 0.0, b = 0.0, c = 0.0;
      for (int r = 0; r < kContour; ++r) {
        const std::complex<double> z =
            lh + std::exp(std::complex<double>(0.0, 2.0 * std::numbers::pi * (r + 0.5) / kContour));
        const std::complex<double> ez = std::exp(z), ez2 = std::exp(z / 2.0), z3 = z * z * z;
        q += (ez2 - 1.0) / z;
        a += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
        b += (2.0 + z + ez * (z - 2.0)) / z3;
        c += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
      }
      const double w = h / kContour;
      q_[j] = q * w;
      f1_[j] = a * w;
      f2_[j] = b * w;
      f3_[j] = c * w;
    }
  }

  void step_etdrk4(Vec& u) {
    if (cfg_.dt != etd_dt_) {
      init_etdrk4(cfg_.dt);
      etd_dt_ = cfg_.dt;
    }
    const int nb = n_ / 2 + 1;
    CVec v = fft_.forward(std::span<const double>(u.data(), n_));
    v.back() = 0.0;
    const CVec nv = nonlinear_hat(v);
    CVec a(nb), b(nb), c(nb);
    for (int j = 0; j < nb; ++j) a[j] = e2_[j] * v[j] + q_[j] * nv[j];
    const CVec na = nonlinear_hat(a);
    for (int j = 0; j < nb; ++j) b[j] = e2_[j] * v[j] + q_[j] * na[j];
    const CVec nb_ = nonlinear_hat(b);
    for (int j = 0; j < nb; ++j) c[j] = e2_[j] * a[j] + q_[j] * (2.0 * nb_[j] - nv[j]);
    const CVec nc = nonlinear_hat(c);
    for (int j = 0; j < nb; ++j)
      v[j] = e_[j] * v[j] + f1_[j] * nv[j] + 2.0 * f2_[j] * (na[j] + nb_[j]) + f3_[j] * nc[j];
    const std::vector<double> r = fft_.backward(std::move(v));
    u = Eigen::Map<const Vec>(r.data(), n_);
  }

  void init_gauss4() {
    const double s3 = std::sqrt(3.0);
    a_ << 0.25, 0.25 - s3 / 6.0, 0.25 + s3 / 6.0, 0.25;
    const Eigen::RowVector2d b(0.5, 0.5);
    d_ = b * a_.inverse();
  }

  void factor(const Vec& u) {
    const Eigen::MatrixXd j = jacobian(u);
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2 * n_, 2 * n_);
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q) m.block(p * n_, q * n_, n_, n_) -= cfg_.dt * a_(p, q) * j;
    lu_.compute(m);
    lu_dt_ = cfg_.dt;
    ++jacobian_updates_;
    have_lu_ = true;
  }

  /// Newton solve of the stage equations with the current factorization.
  /// Returns false on divergence or slow convergence.
  bool newton(const Vec& u, Eigen::VectorXd& z) {
    const double scale = std::max(1.0, u.cwiseAbs().maxCoeff());
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 12; ++it) {
      const Vec f1 = rhs(u + z.head(n_));
      const Vec f2 = rhs(u + z.tail(n_));
      Eigen::VectorXd r(2 * n_);
      r.head(n_) = z.head(n_) - cfg_.dt * (a_(0, 0) * f1 + a_(0, 1) * f2);
      r.tail(n_) = z.tail(n_) - cfg_.dt * (a_(1, 0) * f1 + a_(1, 1) * f2);
      const Eigen::VectorXd dz = lu_.solve(r);
      z -= dz;
      ++newton_total_;
      const double nrm = dz.cwiseAbs().maxCoeff() / scale;
      if (!std::isfinite(nrm)) return false;
      if (nrm <= cfg_.newton_tol) return true;
      // Stagnation at round-off level counts as converged.
      if (nrm > 0.5 * prev) return nrm <= 1e3 * cfg_.newton_tol;
      prev = nrm;
    }
    return false;
  }

  void step_gauss4(Vec& u) {
    if (!have_lu_ || lu_dt_ != cfg_.dt) factor(u);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(2 * n_);
    if (!newton(u, z)) {
      factor(u);
      z.setZero();
      if (!newton(u, z)) throw ConvergenceError("Gauss-Legendre stage equations did not converge");
    }
    u += d_(0) * z.head(n_) + d_(1) * z.tail(n_);
  }

  EvolutionConfig cfg_;
  int n_, m_;
  Fft fft_, fft_pad_;
  TermList terms_;
  int jet_;
  std::vector<double> k_;
  CVec lin_;
  std::vector<double> filter_;

  CVec e_, e2_, q_, f1_, f2_, f3_;
  double etd_dt_ = std::numeric_limits<double>::quiet_NaN();

  Eigen::Matrix2d a_;
  Eigen::RowVector2d d_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  bool have_lu_ = false;
  double lu_dt_ = 0.0;
  int jacobian_updates_ = 0;
  int newton_total_ = 0;
};

/// Lab-frame window of a state evolved in a moving frame.
inline Window lab_window(const EvolutionConfig& cfg, double t) {
  Window w = cfg.window;
  w.center -= cfg.frame_speed * t;
  return w;
}

/// One step from a sampled state. Builds a fresh stepper each call.
inline SampledField step(const SampledField& state, const EvolutionConfig& cfg) {
  EvolutionConfig c = cfg;
  c.window = state.window;
  Evolver ev(c);
  Eigen::VectorXd u = ev.project(Eigen::Map<const Eigen::VectorXd>(state.values.data(), state.window.n_points));
  ev.step(u);
  SampledField out = SampledField::zeros(state.window);
  out.values.assign(u.data(), u.data() + u.size());
  out.window.center -= cfg.frame_speed * cfg.dt;
  return out;
}

struct Snapshot {
  double t = 0.0;
  SampledField field;  ///< values on the lab-frame window at time t
  std::vector<FunctionalValue> functionals;
  double spectral_tail = 0.0;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  int steps = 0;
  int jacobian_updates = 0;
  bool resolution_warning = false;

  /// max |F(t) - F(0)| / |F(0)| for the i-th monitored functional.
  double drift(std::size_t i) const {
    const double f0 = snapshots.front().functionals.at(i).value;
    double d = 0.0;
    for (const auto& s : snapshots) d = std::max(d, std::abs(s.functionals.at(i).value - f0));
    return d / std::max(std::abs(f0), 1e-300);
  }
};

inline constexpr double kResolutionTail = 1e-10;

inline std::vector<FunctionalValue> monitor(const SampledField& f, const std::vector<FunctionalKind>& kinds) {
  int need = 0;
  for (auto k : kinds) need = std::max(need, detail::required_derivatives(k));
  SampledField g = f;
  g.with_spectral_derivatives(need);
  std::vector<FunctionalValue> out;
  for (auto k : kinds) out.push_back(evaluate_functional(g, k));
  return out;
}

/// Evolves u0 to cfg.t_end, recording snapshots and monitored functionals.
/// `on_snapshot`, when given, receives each snapshot as it is produced.
inline Trajectory evolve(const SampledField& u0, const EvolutionConfig& cfg,
                         const std::vector<FunctionalKind>& monitors,
                         const std::function<void(const Snapshot&)>& on_snapshot = {}) {
  EvolutionConfig c = cfg;
  c.window = u0.window;
  c.validate();
  if (cfg.t_end != 0.0 && (cfg.t_end > 0.0) != (cfg.dt > 0.0)) throw DomainError("evolve: dt and t_end differ in sign");
  Evolver ev(c);
  Eigen::VectorXd u = ev.project(Eigen::Map<const Eigen::VectorXd>(u0.values.data(), u0.window.n_points));

  Trajectory tr;
  auto record = [&](double t) {
    Snapshot s;
    s.t = t;
    s.field = SampledField::zeros(lab_window(c, t));
    s.field.values.assign(u.data(), u.data() + u.size());
    s.functionals = monitor(s.field, monitors);
    s.spectral_tail = ev.spectral_tail(u);
    tr.resolution_warning = tr.resolution_warning || s.spectral_tail > kResolutionTail;
    if (on_snapshot) on_snapshot(s);
    tr.snapshots.push_back(std::move(s));
  };

  const long total = std::lround(std::abs(cfg.t_end / cfg.dt));
  if (std::abs(total * cfg.dt - cfg.t_end) > 1e-9 * std::max(1.0, std::abs(cfg.t_end)))
    throw DomainError("evolve: t_end must be an integer multiple of dt");
  long every = total;
  if (cfg.snapshot_every > 0.0) {
    every = std::lround(cfg.snapshot_every / std::abs(cfg.dt));
    if (every < 1 || std::abs(every * std::abs(cfg.dt) - cfg.snapshot_every) > 1e-9 * cfg.snapshot_every)
      throw DomainError("evolve: snapshot_every must be an integer multiple of |dt|");
  }
  record(0.0);
  for (long s = 1; s <= total; ++s) {
    ev.step(u);
    if (s % every == 0 || s == total) record(s * cfg.dt);
  }
  tr.steps = static_cast<int>(total);
  tr.jacobian_updates = ev.jacobian_updates();
  return tr;
}

struct ModulationFit {
  double x1 = 0.0, x2 = 0.0;
  double distance = 0.0;  ///< H2 distance at the minimizer
  double gradient = 0.0;  ///< max |<B_i, u - B>|_{H2} at exit
  int iterations = 0;
};

inline constexpr double kFitMaxDistance = 0.5;

namespace detail {
inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}
}  // namespace detail

/// Gauss-Newton fit of the phases (x1, x2) minimizing ||u - B(t; x1, x2)||_{H2}.
inline ModulationFit fit_modulation(const SampledField& u, const BreatherParams& p, double t,
                                    std::pair<double, double> seed) {
  const Window& w = u.window;
  BreatherParams q = p;
  q.x1 = seed.first;
  q.x2 = seed.second;
  auto residual = [&](const BreatherParams& b) {
    const SampledField ref = sample_breather_periodic(b, t, w, 0);
    std::vector<double> r(w.n_points);
    for (int j = 0; j < w.n_points; ++j) r[j] = u.values[j] - ref.values[j];
    return r;
  };
  auto dist = [&](const std::vector<double>& r) { return std::sqrt(std::max(0.0, h2_inner(w, r, r))); };

  std::vector<double> r = residual(q);
  double d = dist(r);
  ModulationFit fit;
  const double scale = 1.0 + h2_inner(w, u.values, u.values);
  for (int it = 0; it < 50; ++it) {
    const SampledField b1 = sample_periodic(w, [&](double x) { return translation_jet(q, t, x).b1; });
    const SampledField b2 = sample_periodic(w, [&](double x) { return translation_jet(q, t, x).b2; });
    const double g11 = h2_inner(w, b1.values, b1.values), g12 = h2_inner(w, b1.values, b2.values),
                 g22 = h2_inner(w, b2.values, b2.values);
    const double r1 = h2_inner(w, b1.values, r), r2 = h2_inner(w, b2.values, r);
    fit.gradient = std::max(std::abs(r1), std::abs(r2));
    fit.iterations = it;
    if (fit.gradient <= 1e-10 * scale) {
      fit.x1 = q.x1;
      fit.x2 = q.x2;
      fit.distance = d;
      if (d > kFitMaxDistance)
        throw ConvergenceError("modulation fit converged to a non-matching minimum (distance " + detail::sci(d) + ")");
      return fit;
    }
    const double det = g11 * g22 - g12 * g12;
    if (!(det > 0.0)) throw ConvergenceError("modulation fit: singular normal equations");
    double s1 = (g22 * r1 - g12 * r2) / det, s2 = (g11 * r2 - g12 * r1) / det;
    // Backtracking keeps the distance non-increasing.
    for (int half = 0;; ++half) {
      BreatherParams trial = q;
      trial.x1 += s1;
      trial.x2 += s2;
      std::vector<double> rt = residual(trial);
      const double dt = dist(rt);
      if (dt <= d * (1 + 1e-10) || half == 30) {
        q = trial;
        r = std::move(rt);
        d = dt;
        break;
      }
      s1 *= 0.5;
      s2 *= 0.5;
    }
  }
  throw ConvergenceError("modulation fit did not converge in 50 iterations (gradient " +
                         detail::sci(fit.gradient) + ", distance " + detail::sci(d) + ")");
}

enum class Perturbation { kGaussian, kKernel, kScaling };

inline std::string to_string(Perturbation p) {
  switch (p) {
    case Perturbation::kGaussian: return "gaussian";
    case Perturbation::kKernel: return "kernel";
    case Perturbation::kScaling: return "scaling";
  }
  return "?";
}

inline Perturbation perturbation_from_string(const std::string& s) {
  for (auto p : {Perturbation::kGaussian, Perturbation::kKernel, Perturbation::kScaling})
    if (to_string(p) == s) return p;
  throw DomainError("unknown perturbation '" + s + "'");
}

/// Perturbation shape with unit H2 norm. The gaussian's centre offset and
/// width are drawn from `seed`.
inline SampledField perturbation_shape(Perturbation kind, const BreatherParams& p, const Window& w,
                                       std::uint64_t seed) {
  SampledField s;
  switch (kind) {
    case Perturbation::kGaussian: {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> off(-0.5, 0.5), wid(0.8, 1.2);
      const double c = -p.x2 + off(rng) / p.beta, width = wid(rng) / p.beta;
      s = sample_periodic(w, [&](double x) { return std::exp(-0.5 * (x - c) * (x - c) / (width * width)); });
      break;
    }
    case Perturbation::kKernel:
      s = sample_periodic(w, [&](double x) { return translation_jet(p, 0.0, x).b1; });
      break;
    case Perturbation::kScaling:
      s = directions(p, 0.0, w).lambda_beta;
      break;
  }
  const double l2 = l2_norm(w, s.values);
  if (!(l2 > 0.0)) throw DomainError("perturbation shape vanishes");
  s *= 1.0 / l2;
  s *= 1.0 / sobolev_norm(s, 2);
  return s;
}

struct StabilityReport {
  BreatherParams params;
  double eta = 0.0;
  std::string perturbation;
  std::vector<double> times;
  std::vector<double> distances;
  std::vector<double> x1, x2;
  std::vector<std::pair<std::string, double>> drifts;
  double initial_distance = 0.0;  ///< ||u0 - B(0; 0, 0)||_{H2}

  double sup_distance() const { return distances.empty() ? 0.0 : *std::max_element(distances.begin(), distances.end()); }

  /// max over snapshot intervals of (|dx1| + |dx2|) / dt.
  double max_phase_speed() const {
    double m = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i)
      m = std::max(m, (std::abs(x1[i] - x1[i - 1]) + std::abs(x2[i] - x2[i - 1])) / (times[i] - times[i - 1]));
    return m;
  }
};

/// Evolves B(0; 0, 0) + eta * shape, fitting the phases at each snapshot.
/// The grid travels with the envelope (frame speed gamma) unless the config
/// sets another speed.
inline StabilityReport stability_experiment(const BreatherParams& p, double eta, Perturbation kind,
                                            const EvolutionConfig& cfg, std::uint64_t seed = 0,
                                            const std::function<void(const Snapshot&)>& on_snapshot = {}) {
  if (eta < 0.0 || eta > 0.1) throw DomainError("stability: eta must lie in [0, 0.1]");
  if (!(cfg.order == p.order)) throw DomainError("stability: config order differs from breather order");
  BreatherParams b = p;
  b.x1 = b.x2 = 0.0;
  const Window& w = cfg.window;
  SampledField u0 = sample_breather_periodic(b, 0.0, w, 0);
  if (eta > 0.0) {
    SampledField z = perturbation_shape(kind, b, w, seed);
    z *= eta;
    u0 += z;
  }

  const std::vector<FunctionalKind> kinds = [&] {
    std::vector<FunctionalKind> k{FunctionalKind::M, FunctionalKind::E};
    switch (p.order.value()) {
      case 5: k.push_back(FunctionalKind::E5); break;
      case 7: k.push_back(FunctionalKind::E7); break;
      case 9: k.push_back(FunctionalKind::E9); break;
      default: break;
    }
    return k;
  }();

  StabilityReport rep;
  rep.params = b;
  rep.eta = eta;
  rep.perturbation = to_string(kind);
  std::pair<double, double> seed_phase{0.0, 0.0};
  const Trajectory tr = evolve(u0, cfg, kinds, [&](const Snapshot& s) {
    const ModulationFit f = fit_modulation(s.field, b, s.t, seed_phase);
    seed_phase = {f.x1, f.x2};
    rep.times.push_back(s.t);
    rep.distances.push_back(f.distance);
    rep.x1.push_back(f.x1);
    rep.x2.push_back(f.x2);
    if (on_snapshot) on_snapshot(s);
  });
  for (std::size_t i = 0; i < kinds.size(); ++i) rep.drifts.emplace_back(to_string(kinds[i]), tr.drift(i));
  {
    const SampledField ref = sample_breather_periodic(b, 0.0, w, 0);
    std::vector<double> diff(w.n_points);
    for (int j = 0; j < w.n_points; ++j) diff[j] = u0.values[j] - ref.values[j];
    rep.initial_distance = sobolev_norm(w, diff, 2);
  }
  return rep;
}

/// Default configuration for the stability experiment: grid co-moving with
/// the envelope, margin 20/beta, Gauss-Legendre steps.
inline EvolutionConfig stability_config(const BreatherParams& p, int n_points, double dt, double t_end,
                                        double snapshot_every) {
  EvolutionConfig c;
  c.order = p.order;
  c.window = Window::for_breather(p, n_points, 0.0, 20.0);
  c.dt = dt;
  c.t_end = t_end;
  c.frame_speed = p.velocities().gamma;
  c.snapshot_every = snapshot_every;
  c.integrator = Integrator::kGauss4;
  return c;
}

}  // namespace mkdv
