#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "mkdv/closed_forms.hpp"
#include "mkdv/error.hpp"
#include "mkdv/grid.hpp"
#include "mkdv/identities.hpp"

namespace mkdv {

/// Dense Fourier differentiation matrix of order m on the periodic window.
inline Eigen::MatrixXd fourier_diff_matrix(const Window& w, int m) {
  const int n = w.n_points;
  std::vector<double> e(n, 0.0);
  e[0] = 1.0;
  const std::vector<double> col = spectral_derivative(w, e, m);
  Eigen::MatrixXd d(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) d(i, j) = col[(i - j + n) % n];
  return d;
}

/// Collocation matrix of the linearized operator around a breather.
struct DiscreteOperator {
  Window window;
  Eigen::MatrixXd matrix;  ///< symmetrized
  BreatherParams params;
  double breather_time = 0.0;
  double asymmetry = 0.0;  ///< max |A - A^T| / max |A| before symmetrization

  double alpha() const { return params.alpha; }
  double beta() const { return params.beta; }
  int size() const { return window.n_points; }

  std::vector<double> apply(const std::vector<double>& z) const {
    const Eigen::VectorXd r = matrix * Eigen::Map<const Eigen::VectorXd>(z.data(), size());
    return {r.data(), r.data() + r.size()};
  }

  /// Writes n, n, 1 as int64 followed by the row-major matrix as float64.
  void dump(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path);
    const std::int64_t header[3] = {size(), size(), 1};
    os.write(reinterpret_cast<const char*>(header), sizeof header);
    for (int i = 0; i < size(); ++i)
      for (int j = 0; j < size(); ++j) {
        const double v = matrix(i, j);
        os.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
  }
};

namespace detail {

inline DiscreteOperator assemble(const BreatherParams& p, double t, const Window& w, const SampledField& b) {
  const int n = w.n_points;
  const double s = p.beta * p.beta - p.alpha * p.alpha;
  const double r = (p.alpha * p.alpha + p.beta * p.beta) * (p.alpha * p.alpha + p.beta * p.beta);
  const Eigen::MatrixXd d1 = fourier_diff_matrix(w, 1);
  const Eigen::MatrixXd d2 = fourier_diff_matrix(w, 2);
  const Eigen::MatrixXd d4 = fourier_diff_matrix(w, 4);

  Eigen::MatrixXd a = d4 - 2.0 * s * d2;
  a.diagonal().array() += r;
  const auto &B = b.d(0), &Bx = b.d(1), &Bxx = b.d(2);
  for (int i = 0; i < n; ++i) {
    const double B2 = B[i] * B[i];
    a.row(i) += 10.0 * B2 * d2.row(i) + 20.0 * B[i] * Bx[i] * d1.row(i);
    a(i, i) += 10.0 * Bx[i] * Bx[i] + 20.0 * B[i] * Bxx[i] + 30.0 * B2 * B2 - 12.0 * s * B2;
  }

  DiscreteOperator op;
  op.window = w;
  op.params = p;
  op.breather_time = t;
  const double scale = a.cwiseAbs().maxCoeff();
  op.asymmetry = (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
  op.matrix = 0.5 * (a + a.transpose());
  return op;
}

}  // namespace detail

/// Decay margin (in units of 1/beta) required around the envelope.
inline constexpr double kSpectralMargin = 16.0;

/// Window for spectral work: envelope +- 20/beta.
inline Window spectral_window(const BreatherParams& p, int n_points, double t = 0.0) {
  return Window::for_breather(p, n_points, t, 20.0);
}

inline DiscreteOperator build_operator(const BreatherParams& p, double t, const Window& w) {
  p.validate();
  w.validate();
  require_breather_fits(w, p, t, kSpectralMargin);
  return detail::assemble(p, t, w, sample_breather_periodic(p, t, w, 2));
}

/// The constant-coefficient part alone (breather replaced by zero).
inline DiscreteOperator build_free_operator(const BreatherParams& p, const Window& w) {
  p.validate();
  w.validate();
  return detail::assemble(p, 0.0, w, SampledField::zeros(w, 2));
}

/// Infimum of the essential spectrum of the linearized operator.
inline double continuum_edge(double alpha, double beta) {
  const double r = (alpha * alpha + beta * beta) * (alpha * alpha + beta * beta);
  return beta >= alpha ? r : 4.0 * alpha * alpha * beta * beta;
}

struct DirectionVectors {
  SampledField b1, b2;
  SampledField lambda_alpha, lambda_beta;
  SampledField b0;
};

namespace detail {

inline SampledField parameter_derivative(const BreatherParams& p, double t, const Window& w, bool in_alpha,
                                         double h) {
  auto diff = [&](double step) {
    BreatherParams hi = p, lo = p;
    (in_alpha ? hi.alpha : hi.beta) += step;
    (in_alpha ? lo.alpha : lo.beta) -= step;
    SampledField d = sample_breather_periodic(hi, t, w, 0) - sample_breather_periodic(lo, t, w, 0);
    d *= 1.0 / (2.0 * step);
    return d;
  };
  // Richardson: (4 D(h/2) - D(h)) / 3 cancels the h^2 term.
  SampledField out = diff(0.5 * h);
  out *= 4.0;
  out = out - diff(h);
  out *= 1.0 / 3.0;
  return out;
}

}  // namespace detail

/// Parameter step used for the scaling directions.
inline double scaling_step(double alpha) { return 1e-3 * std::max(1.0, alpha); }

inline DirectionVectors directions(const BreatherParams& p, double t, const Window& w) {
  p.validate();
  w.validate();
  DirectionVectors d;
  d.b1 = sample_periodic(w, [&](double x) { return translation_jet(p, t, x).b1; });
  d.b2 = sample_periodic(w, [&](double x) { return translation_jet(p, t, x).b2; });
  const double h = scaling_step(p.alpha);
  d.lambda_alpha = detail::parameter_derivative(p, t, w, true, h);
  d.lambda_beta = detail::parameter_derivative(p, t, w, false, h);
  const double a = p.alpha, b = p.beta;
  d.b0 = a * d.lambda_beta + b * d.lambda_alpha;
  d.b0 *= 1.0 / (8.0 * a * b * (a * a + b * b));
  return d;
}

inline double inner(const Window& w, const std::vector<double>& f, const std::vector<double>& g) {
  double acc = 0.0;
  for (int j = 0; j < w.n_points; ++j) acc += f[j] * g[j];
  return acc * w.spacing();
}

inline double l2_norm(const Window& w, const std::vector<double>& f) { return std::sqrt(inner(w, f, f)); }

/// z^T L z as an integral.
inline double operator_form(const DiscreteOperator& op, const std::vector<double>& z) {
  return inner(op.window, z, op.apply(z));
}

struct B0Relations {
  double mass_pairing = 0.0;     ///< integral B0 B
  double half_form = 0.0;        ///< (1/2) integral B0 L[B0]
  double residual = 0.0;         ///< ||L B0 + B|| / ||B||
  double expected_pairing = 0.0;  ///< 1 / (4 beta (alpha^2 + beta^2))
  double expected_half_form = 0.0;
};

inline B0Relations b0_relations(const BreatherParams& p, double t, const Window& w) {
  const DiscreteOperator op = build_operator(p, t, w);
  const DirectionVectors d = directions(p, t, w);
  const SampledField b = sample_breather_periodic(p, t, w, 0);
  const std::vector<double> lb0 = op.apply(d.b0.values);
  B0Relations out;
  out.mass_pairing = inner(w, d.b0.values, b.values);
  out.half_form = 0.5 * inner(w, d.b0.values, lb0);
  std::vector<double> res(w.n_points);
  for (int j = 0; j < w.n_points; ++j) res[j] = lb0[j] + b.values[j];
  out.residual = l2_norm(w, res) / l2_norm(w, b.values);
  const double q = p.beta * (p.alpha * p.alpha + p.beta * p.beta);
  out.expected_pairing = 1.0 / (4.0 * q);
  out.expected_half_form = -1.0 / (8.0 * q);
  return out;
}

/// Closed form of det [[B1, B2], [B1_x, B2_x]].
inline double wronskian_closed_form(const BreatherParams& p, double t, double x) {
  const Velocities v = p.velocities();
  const double a = p.alpha, b = p.beta;
  const double y1 = x + v.delta * t + p.x1, y2 = x + v.gamma * t + p.x2;
  const double den = a * a + b * b + a * a * std::cosh(2 * b * y2) - b * b * std::cos(2 * a * y1);
  return -8.0 * a * a * a * b * b * b * (a * a + b * b) * (a * std::sinh(2 * b * y2) - b * std::sin(2 * a * y1)) /
         (den * den);
}

inline ResidualReport wronskian_check(const BreatherParams& p, double t, const std::vector<double>& xs) {
  p.validate();
  double sup = 0.0, scale = 0.0;
  for (double x : xs) {
    const TranslationJet tj = translation_jet(p, t, x);
    const double l = tj.b1 * tj.b2x, r = tj.b2 * tj.b1x;
    const double closed = wronskian_closed_form(p, t, x);
    sup = std::max(sup, std::abs(l - r - closed));
    scale = std::max({scale, std::abs(l), std::abs(r), std::abs(closed)});
  }
  ResidualReport rep;
  rep.identity_id = "wronskian";
  rep.params = p;
  rep.order = p.order;
  rep.t = t;
  rep.samples = static_cast<int>(xs.size());
  rep.sample_spec = std::to_string(xs.size()) + " given points";
  rep.sup_residual = sup;
  rep.rel_scale = scale > 0.0 ? scale : 1.0;
  return rep;
}

struct SpectrumSummary {
  std::vector<double> eigenvalues;           ///< all, ascending
  std::vector<double> negative_eigenvalues;  ///< below -kernel_tol
  std::vector<double> kernel_eigenvalues;    ///< within kernel_tol
  std::vector<SampledField> kernel_vectors;  ///< L2-normalized
  double kernel_tol = 0.0;
  double continuum_edge_estimate = 0.0;
  double continuum_edge_exact = 0.0;
  double lambda0_sq = 0.0;
  SampledField negative_vector;  ///< eigenfunction of the negative eigenvalue
  int negative_count() const { return static_cast<int>(negative_eigenvalues.size()); }
  int kernel_count() const { return static_cast<int>(kernel_eigenvalues.size()); }
};

/// Fraction of an eigenvector's L2 mass within 5/beta of the envelope centre.
inline double core_fraction(const Window& w, const Eigen::VectorXd& v, double center, double radius) {
  double in = 0.0, all = 0.0;
  for (int j = 0; j < w.n_points; ++j) {
    const double m = v(j) * v(j);
    all += m;
    if (std::abs(w.x(j) - center) <= radius) in += m;
  }
  return in / all;
}

inline SpectrumSummary spectrum(const DiscreteOperator& op) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.matrix);
  if (es.info() != Eigen::Success) throw ConvergenceError("symmetric eigensolver failed");
  const Window& w = op.window;
  const double a = op.alpha(), b = op.beta();
  const double r = (a * a + b * b) * (a * a + b * b);

  SpectrumSummary s;
  s.kernel_tol = 1e-6 * r;
  s.continuum_edge_exact = continuum_edge(a, b);
  const auto& ev = es.eigenvalues();
  s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  const double norm = 1.0 / std::sqrt(w.spacing());

  auto field = [&](int i) {
    SampledField f = SampledField::zeros(w);
    for (int j = 0; j < w.n_points; ++j) f.values[j] = norm * es.eigenvectors()(j, i);
    return f;
  };

  const double center = -op.params.velocities().gamma * op.breather_time - op.params.x2;
  const double radius = 5.0 / b;
  s.continuum_edge_estimate = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) < -s.kernel_tol) {
      s.negative_eigenvalues.push_back(ev(i));
      if (s.negative_eigenvalues.size() == 1) s.negative_vector = field(i);
    } else if (ev(i) <= s.kernel_tol) {
      s.kernel_eigenvalues.push_back(ev(i));
      s.kernel_vectors.push_back(field(i));
    } else if (std::isnan(s.continuum_edge_estimate) &&
               core_fraction(w, es.eigenvectors().col(i), center, radius) < 0.5) {
      s.continuum_edge_estimate = ev(i);
    }
  }
  if (!s.negative_eigenvalues.empty()) s.lambda0_sq = -s.negative_eigenvalues.front();
  return s;
}

/// Fourier multiplier (1 + k^2) as a dense matrix.
inline Eigen::MatrixXd sobolev_multiplier(const Window& w) {
  Eigen::MatrixXd s = -fourier_diff_matrix(w, 2);
  s.diagonal().array() += 1.0;
  return s;
}

/// Minimum of z^T L z / ||z||_{H^2}^2 over z orthogonal in L2 to every field
/// in `constraints`.
inline double constrained_minimum(const DiscreteOperator& op, const std::vector<const SampledField*>& constraints) {
  const int n = op.size();
  const Eigen::MatrixXd s = sobolev_multiplier(op.window);
  const Eigen::LDLT<Eigen::MatrixXd> sf(s);
  const int m = static_cast<int>(constraints.size());
  // With z = S^{-1} y, z^T c = y^T S^{-1} c.
  Eigen::MatrixXd c(n, m);
  for (int k = 0; k < m; ++k) c.col(k) = Eigen::Map<const Eigen::VectorXd>(constraints[k]->values.data(), n);
  const Eigen::MatrixXd sc = sf.solve(c);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(sc);
  const Eigen::MatrixXd qfull = qr.householderQ();
  const Eigen::VectorXd diag = qr.matrixQR().diagonal().cwiseAbs();
  if (m > 0 && diag.minCoeff() < 1e-10 * diag.maxCoeff()) throw DomainError("constraints are rank deficient");
  const Eigen::MatrixXd basis = qfull.rightCols(n - m);
  const Eigen::MatrixXd sinv_a = sf.solve(op.matrix);
  const Eigen::MatrixXd t = sf.solve(sinv_a.transpose());  // S^{-1} A S^{-1}
  Eigen::MatrixXd reduced = basis.transpose() * t * basis;
  reduced = 0.5 * (reduced + reduced.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reduced, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("projected eigensolve failed");
  return es.eigenvalues()(0);
}

/// nu0 estimate: constrained minimum with the negative eigenfunction and both
/// kernel directions removed.
inline double coercivity(const DiscreteOperator& op, const DirectionVectors& dirs, const SampledField& negative) {
  return constrained_minimum(op, {&negative, &dirs.b1, &dirs.b2});
}

}  // namespace mkdv
