#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mkdv/closed_forms.hpp"
#include "mkdv/grid.hpp"

namespace mkdv {

enum class FunctionalKind { M, E, E5, E7, E9, H0, H5, H7, H9, H };

inline std::string to_string(FunctionalKind k) {
  switch (k) {
    case FunctionalKind::M: return "M";
    case FunctionalKind::E: return "E";
    case FunctionalKind::E5: return "E5";
    case FunctionalKind::E7: return "E7";
    case FunctionalKind::E9: return "E9";
    case FunctionalKind::H0: return "H0";
    case FunctionalKind::H5: return "H5";
    case FunctionalKind::H7: return "H7";
    case FunctionalKind::H9: return "H9";
    case FunctionalKind::H: return "H";
  }
  return "?";
}

inline FunctionalKind functional_kind_from_string(const std::string& s) {
  for (auto k : {FunctionalKind::M, FunctionalKind::E, FunctionalKind::E5, FunctionalKind::E7, FunctionalKind::E9,
                 FunctionalKind::H0, FunctionalKind::H5, FunctionalKind::H7, FunctionalKind::H9, FunctionalKind::H})
    if (to_string(k) == s) return k;
  throw DomainError("unknown functional '" + s + "'");
}

/// Edge magnitude above which a functional is flagged as tail-contaminated.
inline constexpr double kTailThreshold = 1e-10;

struct FunctionalValue {
  FunctionalKind kind = FunctionalKind::M;
  double value = 0.0;
  bool tail_warning = false;
};

namespace detail {

/// Derivative order a density needs.
inline int required_derivatives(FunctionalKind k) {
  switch (k) {
    case FunctionalKind::M: return 0;
    case FunctionalKind::E:
    case FunctionalKind::H0: return 1;
    case FunctionalKind::E5:
    case FunctionalKind::H5:
    case FunctionalKind::H: return 2;
    case FunctionalKind::E7:
    case FunctionalKind::H7: return 3;
    case FunctionalKind::E9:
    case FunctionalKind::H9: return 4;
  }
  return 0;
}

inline double mass_density(const double* u) { return 0.5 * u[0] * u[0]; }

inline double energy_density(const double* u) {
  const double u0 = u[0], u1 = u[1];
  return 0.5 * (u1 * u1 - u0 * u0 * u0 * u0);
}

inline double e5_density(const double* u) {
  const double u0 = u[0], u1 = u[1], u2 = u[2];
  const double u02 = u0 * u0;
  return 0.5 * u2 * u2 - 5.0 * u02 * u1 * u1 + u02 * u02 * u02;
}

inline double e7_density(const double* u) {
  const double u0 = u[0], u1 = u[1], u2 = u[2], u3 = u[3];
  const double u02 = u0 * u0, u12 = u1 * u1;
  return 0.5 * u3 * u3 + 3.5 * u12 * u12 - 7.0 * u02 * u2 * u2 + 35.0 * u02 * u02 * u12 -
         2.5 * u02 * u02 * u02 * u02;
}

inline double e9_density(const double* u) {
  const double u0 = u[0], u1 = u[1], u2 = u[2], u3 = u[3], u4 = u[4];
  const double u02 = u0 * u0, u12 = u1 * u1, u22 = u2 * u2;
  return 0.5 * u4 * u4 - 9.0 * u02 * u3 * u3 + 20.0 * u0 * u22 * u2 + 51.0 * u12 * u22 +
         63.0 * u02 * u02 * u22 - 133.0 * u02 * u12 * u12 - 210.0 * u02 * u02 * u02 * u12 +
         7.0 * u02 * u02 * u02 * u02 * u02;
}

inline double base_density(FunctionalKind k, const double* u) {
  switch (k) {
    case FunctionalKind::M: return mass_density(u);
    case FunctionalKind::E: return energy_density(u);
    case FunctionalKind::E5: return e5_density(u);
    case FunctionalKind::E7: return e7_density(u);
    case FunctionalKind::E9: return e9_density(u);
    default: throw DomainError("not a base functional");
  }
}

/// Integral of a base density over the field.
inline double integrate_density(const SampledField& f, FunctionalKind k) {
  const int m = required_derivatives(k);
  for (int q = 1; q <= m; ++q) (void)f.d(q);  // throws when missing
  double acc = 0.0;
  double u[5] = {0, 0, 0, 0, 0};
  for (int j = 0; j < f.window.n_points; ++j) {
    for (int q = 0; q <= m; ++q) u[q] = f.d(q)[j];
    acc += base_density(k, u);
  }
  return acc * f.window.spacing();
}

inline FunctionalValue make_value(const SampledField& f, FunctionalKind k, double v) {
  return {k, v, f.edge_magnitude() > kTailThreshold};
}

}  // namespace detail

/// (1/2) integral u^2.
inline FunctionalValue mass(const SampledField& f) {
  return detail::make_value(f, FunctionalKind::M, detail::integrate_density(f, FunctionalKind::M));
}

/// (1/2) integral (u_x^2 - u^4).
inline FunctionalValue energy(const SampledField& f) {
  return detail::make_value(f, FunctionalKind::E, detail::integrate_density(f, FunctionalKind::E));
}

/// E5, E7 or E9. The field must carry derivatives up to 2, 3 or 4.
inline FunctionalValue higher_energy(const SampledField& f, FunctionalKind kind) {
  if (kind != FunctionalKind::E5 && kind != FunctionalKind::E7 && kind != FunctionalKind::E9)
    throw DomainError("higher_energy: kind must be E5, E7 or E9");
  return detail::make_value(f, kind, detail::integrate_density(f, kind));
}

/// Soliton Lyapunov functionals: H0 = E + cM, H5 = E5 - c^2 M, H7 = E7 + c^3 M,
/// H9 = E9 - c^4 M.
inline FunctionalValue lyapunov(const SampledField& f, FunctionalKind kind, double c) {
  const double m = detail::integrate_density(f, FunctionalKind::M);
  double v = 0.0;
  switch (kind) {
    case FunctionalKind::H0: v = detail::integrate_density(f, FunctionalKind::E) + c * m; break;
    case FunctionalKind::H5: v = detail::integrate_density(f, FunctionalKind::E5) - c * c * m; break;
    case FunctionalKind::H7: v = detail::integrate_density(f, FunctionalKind::E7) + c * c * c * m; break;
    case FunctionalKind::H9: v = detail::integrate_density(f, FunctionalKind::E9) - c * c * c * c * m; break;
    default: throw DomainError("lyapunov(c): kind must be H0, H5, H7 or H9");
  }
  return detail::make_value(f, kind, v);
}

/// Coefficients (E5, E, M) of the breather Lyapunov functional
/// H = E5 + 2(beta^2 - alpha^2) E + (alpha^2 + beta^2)^2 M.
struct BreatherLyapunovWeights {
  double e5 = 1.0, e = 0.0, m = 0.0;
  BreatherLyapunovWeights(double alpha, double beta)
      : e(2.0 * (beta * beta - alpha * alpha)),
        m((alpha * alpha + beta * beta) * (alpha * alpha + beta * beta)) {}

  double density(const double* u) const {
    return detail::e5_density(u) + e * detail::energy_density(u) + m * detail::mass_density(u);
  }
};

inline FunctionalValue lyapunov(const SampledField& f, double alpha, double beta) {
  const BreatherLyapunovWeights w(alpha, beta);
  const double v = detail::integrate_density(f, FunctionalKind::E5) +
                   w.e * detail::integrate_density(f, FunctionalKind::E) +
                   w.m * detail::integrate_density(f, FunctionalKind::M);
  return detail::make_value(f, FunctionalKind::H, v);
}

/// Any functional by kind; `c` is used by H0..H9, (alpha, beta) by H.
inline FunctionalValue evaluate_functional(const SampledField& f, FunctionalKind kind, double c = 1.0,
                                           double alpha = 1.0, double beta = 1.0) {
  switch (kind) {
    case FunctionalKind::M: return mass(f);
    case FunctionalKind::E: return energy(f);
    case FunctionalKind::E5:
    case FunctionalKind::E7:
    case FunctionalKind::E9: return higher_energy(f, kind);
    case FunctionalKind::H: return lyapunov(f, alpha, beta);
    default: return lyapunov(f, kind, c);
  }
}

/// Closed-form values on an exact breather.
namespace breather_values {

inline double mass(double /*alpha*/, double beta) { return 2.0 * beta; }

/// (2/3) beta gamma with the classical gamma = 3 alpha^2 - beta^2.
inline double energy(double alpha, double beta) { return 2.0 / 3.0 * beta * (3 * alpha * alpha - beta * beta); }

/// E5 = -(2/5) beta gamma5, E7 = (2/7) beta gamma7, E9 = -(2/9) beta gamma9.
inline double higher_energy(FunctionalKind kind, double alpha, double beta) {
  switch (kind) {
    case FunctionalKind::E5: return -2.0 / 5.0 * beta * velocities(Order(5), alpha, beta).gamma;
    case FunctionalKind::E7: return 2.0 / 7.0 * beta * velocities(Order(7), alpha, beta).gamma;
    case FunctionalKind::E9: return -2.0 / 9.0 * beta * velocities(Order(9), alpha, beta).gamma;
    default: throw DomainError("breather_values::higher_energy: kind must be E5, E7 or E9");
  }
}

/// Alternating-sum formula sum_j (-1)^j C(2n+1, 2j) alpha^{2j} beta^{2(n-j)}.
inline double conjectured_gamma(int n, double alpha, double beta) {
  double acc = 0.0;
  double binom = 1.0;  // C(2n+1, 0)
  for (int j = 0; j <= n; ++j) {
    if (j > 0) binom *= static_cast<double>((2 * n + 1 - (2 * j - 2)) * (2 * n + 1 - (2 * j - 1))) /
                        static_cast<double>((2 * j - 1) * (2 * j));
    acc += (j % 2 ? -1.0 : 1.0) * binom * std::pow(alpha, 2 * j) * std::pow(beta, 2 * (n - j));
  }
  return acc;
}

/// (-1)^{n+1} 2 beta / (2n+1) * conjectured_gamma(n). For n = 1..4 this is the
/// negative of the verified closed forms.
inline double conjectured_energy(int n, double alpha, double beta) {
  return ((n + 1) % 2 ? -1.0 : 1.0) * 2.0 * beta / (2 * n + 1) * conjectured_gamma(n, alpha, beta);
}

}  // namespace breather_values

/// Integral of the time derivative of the partial mass, from its closed form
/// on the window grid.
inline double integrated_partial_mass_rate(const BreatherParams& p, double t, const Window& w) {
  const Velocities v = p.velocities();
  double acc = 0.0;
  for (int j = 0; j < w.n_points; ++j) acc += breather_local(p, v, t, w.x(j), 1).mt;
  return acc * w.spacing();
}

/// The reductions E5 = -(1/5) int M_t, E7 = (1/7) int M_t, E9 = (1/9) int M_t,
/// with coefficients exactly as printed. Returns the right-hand side.
inline double energy_from_mass_rate(FunctionalKind kind, double integral_mt) {
  switch (kind) {
    case FunctionalKind::E5: return -integral_mt / 5.0;
    case FunctionalKind::E7: return integral_mt / 7.0;
    case FunctionalKind::E9: return integral_mt / 9.0;
    default: throw DomainError("energy_from_mass_rate: kind must be E5, E7 or E9");
  }
}

/// Quadratic form of the linearized operator in its integrated layout:
/// int z_xx^2 + 2(b^2-a^2) z_x^2 + (a^2+b^2)^2 z^2 - 10 B^2 z_x^2 - 10 B_x^2 z^2
///   - 40 B B_x z z_x + 30 B^4 z^2 - 12 (b^2-a^2) B^2 z^2.
/// `b` needs derivatives to order 1, `z` to order 2.
inline double quadratic_form(const SampledField& b, const SampledField& z, double alpha, double beta) {
  const double s = beta * beta - alpha * alpha;
  const double r = (alpha * alpha + beta * beta) * (alpha * alpha + beta * beta);
  const auto &B = b.d(0), &Bx = b.d(1);
  const auto &z0 = z.d(0), &z1 = z.d(1), &z2 = z.d(2);
  double acc = 0.0;
  for (int j = 0; j < z.window.n_points; ++j) {
    const double B2 = B[j] * B[j];
    acc += z2[j] * z2[j] + 2.0 * s * z1[j] * z1[j] + r * z0[j] * z0[j] - 10.0 * B2 * z1[j] * z1[j] -
           10.0 * Bx[j] * Bx[j] * z0[j] * z0[j] - 40.0 * B[j] * Bx[j] * z0[j] * z1[j] +
           30.0 * B2 * B2 * z0[j] * z0[j] - 12.0 * s * B2 * z0[j] * z0[j];
  }
  return acc * z.window.spacing();
}

struct ExpansionSplit {
  double quadratic = 0.0;  ///< (1/2) Q[z]
  double remainder = 0.0;  ///< H[B+z] - H[B] - (1/2) Q[z]
  double increment = 0.0;  ///< H[B+z] - H[B]
};

inline constexpr double kExpansionMaxNorm = 0.1;

/// Splits the Lyapunov increment at the breather into its quadratic part and
/// the cubic-and-higher remainder. Densities are differenced pointwise.
inline ExpansionSplit expansion_remainder(const BreatherParams& p, const SampledField& z, double t) {
  p.validate();
  const double nz = sobolev_norm(z, 2);
  if (nz > kExpansionMaxNorm)
    throw DomainError("expansion_remainder: H2 norm of z is " + std::to_string(nz) + " > 0.1");
  SampledField zz = z;
  zz.with_spectral_derivatives(2);
  const SampledField b = sample_breather(p, t, z.window, 2);
  const BreatherLyapunovWeights w(p.alpha, p.beta);
  double inc = 0.0;
  for (int j = 0; j < z.window.n_points; ++j) {
    const double ub[3] = {b.values[j], b.derivs[0][j], b.derivs[1][j]};
    const double uz[3] = {ub[0] + zz.values[j], ub[1] + zz.derivs[0][j], ub[2] + zz.derivs[1][j]};
    inc += w.density(uz) - w.density(ub);
  }
  inc *= z.window.spacing();
  ExpansionSplit out;
  out.increment = inc;
  out.quadratic = 0.5 * quadratic_form(b, zz, p.alpha, p.beta);
  out.remainder = inc - out.quadratic;
  return out;
}

/// R(eps) / R(eps/2) for the remainder R of eps * shape; tends to 8 when the
/// remainder is cubic.
inline double remainder_ratio(const BreatherParams& p, const SampledField& shape, double eps, double t = 0.0) {
  SampledField a = shape, b = shape;
  a *= eps;
  b *= eps / 2;
  return expansion_remainder(p, a, t).remainder / expansion_remainder(p, b, t).remainder;
}

/// Unit-H2 test shapes for the expansion check: an off-centre gaussian, the
/// beta-scaling direction and an off-centre oscillating bump.
inline std::vector<std::pair<std::string, SampledField>> expansion_shapes(const BreatherParams& p, const Window& w) {
  auto unit = [](SampledField f) {
    f *= 1.0 / sobolev_norm(f, 2);
    return f;
  };
  const double b = p.beta, h = 1e-4 * std::max(1.0, b);
  BreatherParams hi = p, lo = p;
  hi.beta += h;
  lo.beta -= h;
  std::vector<std::pair<std::string, SampledField>> out;
  out.emplace_back("gaussian", unit(SampledField::sample(w, [&](double x) {
                     const double y = b * (x - 0.7 / b);
                     return std::exp(-y * y);
                   })));
  out.emplace_back("beta_scaling", unit(sample_breather(hi, 0.0, w, 0) - sample_breather(lo, 0.0, w, 0)));
  // Shapes odd about the breather centre have no cubic term at t = 0.
  out.emplace_back("oscillating_bump", unit(SampledField::sample(w, [&](double x) {
                     const double y = b * x;
                     return std::sin(2.0 * y + 0.5) * std::exp(-0.5 * (y - 0.3) * (y - 0.3));
                   })));
  return out;
}

}  // namespace mkdv
