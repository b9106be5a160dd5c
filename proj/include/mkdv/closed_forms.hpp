#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mkdv/error.hpp"
#include "mkdv/poly.hpp"
#include "mkdv/series.hpp"

namespace mkdv {

/// Order of a member of the focusing mKdV hierarchy: 3, 5, 7, 9 or 11.
/// The equation is u_t + (u_{(n-1)x} + f_n(u))_x = 0.
class Order {
 public:
  constexpr Order() = default;
  explicit Order(int n) : n_(n) {
    if (n != 3 && n != 5 && n != 7 && n != 9 && n != 11)
      throw DomainError("unsupported hierarchy order " + std::to_string(n));
  }
  constexpr int value() const { return n_; }
  /// Half-order index: n = 2k + 1.
  constexpr int k() const { return (n_ - 1) / 2; }
  friend constexpr bool operator==(Order, Order) = default;

 private:
  int n_ = 3;
};

struct Velocities {
  double delta = 0.0;  ///< carrier phase y1 = x + delta t + x1
  double gamma = 0.0;  ///< envelope phase y2 = x + gamma t + x2
};

/// Velocity polynomials in (alpha, beta), transcribed term by term so that
/// variants can substitute individual monomials.
struct VelocityPolys {
  Poly delta;
  Poly gamma;

  Velocities operator()(double alpha, double beta) const {
    return {delta(alpha, beta), gamma(alpha, beta)};
  }
};

inline VelocityPolys velocity_polys(Order order) {
  using P = std::vector<PolyTerm>;
  switch (order.value()) {
    case 3:
      return {Poly(P{{1, 2, 0}, {-3, 0, 2}}), Poly(P{{3, 2, 0}, {-1, 0, 2}})};
    case 5:
      return {Poly(P{{-1, 4, 0}, {10, 2, 2}, {-5, 0, 4}}),
              Poly(P{{-1, 0, 4}, {10, 2, 2}, {-5, 4, 0}})};
    case 7:
      return {Poly(P{{1, 6, 0}, {-21, 4, 2}, {35, 2, 4}, {-7, 0, 6}}),
              Poly(P{{-1, 0, 6}, {21, 2, 4}, {-35, 4, 2}, {7, 6, 0}})};
    case 9:
      // The printed carrier speed carries 84 a^3 b^6 in its fourth term; kept
      // verbatim here. See corrected_velocity_polys().
      return {Poly(P{{-1, 8, 0}, {36, 6, 2}, {-126, 4, 4}, {84, 3, 6}, {-9, 0, 8}}),
              Poly(P{{-1, 0, 8}, {36, 2, 6}, {-126, 4, 4}, {84, 6, 2}, {-9, 8, 0}})};
    case 11:
      return {Poly(P{{1, 10, 0}, {-55, 8, 2}, {330, 6, 4}, {-462, 4, 6}, {165, 2, 8}, {-11, 0, 10}}),
              Poly(P{{11, 10, 0}, {-165, 8, 2}, {462, 6, 4}, {-330, 4, 6}, {55, 2, 8}, {-1, 0, 10}})};
    default:
      throw DomainError("unsupported hierarchy order");
  }
}

/// Velocity polynomials with the order-9 carrier speed term resolved to
/// 84 a^2 b^6 (the only reading for which the breather solves the 9th-order
/// equation; see the identity tests). Other orders are unchanged.
inline VelocityPolys corrected_velocity_polys(Order order) {
  VelocityPolys v = velocity_polys(order);
  if (order.value() == 9) v.delta.terms()[3] = {84, 2, 6};
  return v;
}

/// Breather velocities. Order 9 uses the resolved carrier speed.
inline Velocities velocities(Order order, double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw DomainError("velocities: alpha and beta must be positive");
  return corrected_velocity_polys(order)(alpha, beta);
}

struct BreatherParams {
  Order order{5};
  double alpha = 1.0;  ///< oscillation frequency
  double beta = 1.0;   ///< decay rate
  double x1 = 0.0;
  double x2 = 0.0;

  void validate() const {
    if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
      throw DomainError("breather: alpha and beta must be positive and finite");
    if (!std::isfinite(x1) || !std::isfinite(x2)) throw DomainError("breather: non-finite phase");
  }
  Velocities velocities() const { return mkdv::velocities(order, alpha, beta); }
};

struct SolitonParams {
  Order order{5};
  double c = 1.0;

  void validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("soliton: c must be positive");
  }
  /// Travelling speed c^{(n-1)/2}: c, c^2, c^3, c^4, c^5.
  double speed() const { return std::pow(c, order.k()); }
};

/// Pointwise jet of a solution: value, x-derivatives of orders 1..m, and the
/// time derivative of the antiderivative profile.
struct Jet {
  double value = 0.0;
  std::vector<double> dx;  ///< dx[k-1] = d^k u / dx^k
  double dt_tilde = 0.0;

  int order() const { return static_cast<int>(dx.size()); }
  double d(int k) const { return k == 0 ? value : dx.at(k - 1); }

  JetValues values() const {
    JetValues v{};
    v[0] = value;
    for (int k = 1; k <= order() && k <= kMaxDerivative; ++k) v[k] = dx[k - 1];
    v[static_cast<int>(JetVar::kUt)] = dt_tilde;
    return v;
  }

  Jet negated() const {
    Jet j = *this;
    j.value = -j.value;
    for (double& d : j.dx) d = -d;
    j.dt_tilde = -j.dt_tilde;
    return j;
  }
};

inline constexpr int kMaxJetOrder = kMaxDerivative;

/// Local expansion of a breather around (t, x) in the phase displacements
/// (dy1, dy2).
struct BreatherLocal {
  Series2 b;              ///< B as a series of the requested degree
  double ut = 0.0;        ///< time derivative of 2 arctan(G/F)
  double mt = 0.0;        ///< time derivative of the partial mass
  double partial_mass = 0.0;
};

/// Builds the local series of B = 2 (G_x F - G F_x) / (G^2 + F^2) with
/// G = (beta/alpha) sin(alpha y1), F = cosh(beta y2). `vel` is passed
/// explicitly so that velocity variants can be evaluated.
inline BreatherLocal breather_local(const BreatherParams& p, const Velocities& vel, double t, double x,
                                    int degree) {
  const double a = p.alpha, be = p.beta;
  const double y1 = x + vel.delta * t + p.x1;
  const double y2 = x + vel.gamma * t + p.x2;
  const int d = std::max(degree, 1);

  auto sa = sin_coefficients(a, y1, d);
  for (double& c : sa) c *= be / a;
  auto ca = cos_coefficients(a, y1, d);
  for (double& c : ca) c *= be;
  auto chb = cosh_coefficients(be, y2, d);
  auto shb = sinh_coefficients(be, y2, d);
  for (double& c : shb) c *= be;

  const Series2 g = Series2::in_a(d, sa);
  const Series2 gx = Series2::in_a(d, ca);
  const Series2 f = Series2::in_b(d, chb);
  const Series2 fx = Series2::in_b(d, shb);
  const Series2 den = f * f + g * g;

  BreatherLocal out;
  out.b = (2.0 * (gx * f - g * fx)) / den;
  if (degree < d) out.b = out.b.truncated(degree);

  const double g0 = g.value(), gx0 = gx.value(), f0 = f.value(), fx0 = fx.value(), den0 = den.value();
  out.ut = 2.0 * (vel.delta * gx0 * f0 - vel.gamma * g0 * fx0) / den0;
  out.partial_mass = be + (g0 * gx0 + f0 * fx0) / den0;

  const Series2 g1 = g.truncated(1), gx1 = gx.truncated(1), f1 = f.truncated(1), fx1 = fx.truncated(1);
  const Series2 flux = (vel.delta * (g1 * gx1) + vel.gamma * (f1 * fx1)) / den.truncated(1);
  out.mt = flux.dx(1);
  return out;
}

/// B(t, x) with x-derivatives 1..m and the time derivative of 2 arctan(G/F).
inline Jet breather_jet(const BreatherParams& p, double t, double x, int m) {
  if (m < 0 || m > kMaxJetOrder) throw DomainError("breather_jet: jet order out of range");
  p.validate();
  const BreatherLocal loc = breather_local(p, p.velocities(), t, x, m);
  Jet j;
  j.value = loc.b.value();
  j.dx.resize(m);
  for (int k = 1; k <= m; ++k) j.dx[k - 1] = loc.b.dx(k);
  j.dt_tilde = loc.ut;
  return j;
}

inline double breather_value(const BreatherParams& p, double t, double x) {
  return breather_jet(p, t, x, 0).value;
}

/// Translation directions B1 = dB/dx1, B2 = dB/dx2 and their x-derivatives.
struct TranslationJet {
  double b1 = 0.0, b2 = 0.0;
  double b1x = 0.0, b2x = 0.0;
};

inline TranslationJet translation_jet(const BreatherParams& p, double t, double x) {
  p.validate();
  const Series2 s = breather_local(p, p.velocities(), t, x, 2).b;
  return {s(1, 0), s(0, 1), 2.0 * s(2, 0) + s(1, 1), s(1, 1) + 2.0 * s(0, 2)};
}

/// Closed form of (1/2) integral_{-inf}^x B^2.
inline double partial_mass(const BreatherParams& p, double t, double x) {
  p.validate();
  return breather_local(p, p.velocities(), t, x, 1).partial_mass;
}

/// Q_c(x - v t) = sqrt(c) sech(sqrt(c) (x - v t)) with derivatives 1..m.
inline Jet soliton_jet(const SolitonParams& p, double t, double x, int m) {
  if (m < 0 || m > kMaxJetOrder) throw DomainError("soliton_jet: jet order out of range");
  p.validate();
  const double sc = std::sqrt(p.c);
  const double v = p.speed();
  const double s = x - v * t;
  const int d = std::max(m, 1);
  const Series2 f = Series2::in_b(d, cosh_coefficients(sc, s, d));
  const Series2 q = Series2::constant(d, sc) / f;
  Jet j;
  j.value = q.value();
  j.dx.resize(m);
  for (int k = 1; k <= m; ++k) j.dx[k - 1] = q.dx(k);
  j.dt_tilde = -v * j.value;
  return j;
}

/// Nonlinear flux f_n as a term list over u and its x-derivatives.
inline TermList flux_terms(Order order) {
  switch (order.value()) {
    case 3:
      return {{2, "u^3"}};
    case 5:
      return {{10, "u u_x^2"}, {10, "u^2 u_xx"}, {6, "u^5"}};
    case 7:
      return {{14, "u^2 u_4x"},  {56, "u u_x u_3x"},  {42, "u u_xx^2"}, {70, "u_x^2 u_xx"},
              {70, "u^4 u_xx"},  {140, "u^3 u_x^2"}, {20, "u^7"}};
    case 9:
      return {{18, "u^2 u_6x"},        {108, "u u_x u_5x"},   {228, "u u_2x u_4x"},
              {210, "u_x^2 u_4x"},     {126, "u^4 u_4x"},     {138, "u u_3x^2"},
              {756, "u_x u_2x u_3x"},  {1008, "u^3 u_x u_3x"}, {182, "u_2x^3"},
              {756, "u^3 u_2x^2"},     {3108, "u^2 u_x^2 u_2x"}, {420, "u^6 u_2x"},
              {798, "u u_x^4"},        {1260, "u^5 u_x^2"},   {70, "u^9"}};
    case 11:
      return {{22, "u^2 u_8x"},          {198, "u^4 u_6x"},          {924, "u^6 u_4x"},
              {506, "u u_4x^2"},         {3036, "u^3 u_3x^2"},       {2310, "u^8 u_xx"},
              {8316, "u^5 u_xx^2"},      {9372, "u^2 u_xx^3"},       {9240, "u^7 u_x^2"},
              {26796, "u^3 u_x^4"},      {176, "u u_x u_7x"},        {484, "u u_xx u_6x"},
              {462, "u_x^2 u_6x"},       {836, "u u_3x u_5x"},       {2376, "u^3 u_x u_5x"},
              {5016, "u^3 u_xx u_4x"},   {2706, "u_xx^2 u_4x"},      {11220, "u^2 u_x^2 u_4x"},
              {3498, "u_xx u_3x^2"},     {11088, "u^5 u_x u_3x"},    {21120, "u u_x^3 u_3x"},
              {54516, "u^4 u_x^2 u_xx"}, {44748, "u u_x^2 u_xx^2"},  {13398, "u_x^4 u_xx"},
              {2376, "u_x u_xx u_5x"},   {3696, "u_x u_3x u_4x"},    {39336, "u^2 u_x u_xx u_3x"},
              {252, "u^11"}};
    default:
      throw DomainError("unsupported hierarchy order");
  }
}

/// Highest x-derivative of u that f_n references: n - 3.
inline int flux_jet_order(Order order) { return order.value() - 3; }

inline double evaluate_terms(const TermList& terms, double a, double b, const JetValues& v) {
  double acc = 0.0;
  for (const auto& t : terms) acc += t.coef(a, b) * t.mono(v);
  return acc;
}

/// f_n evaluated at a jet.
inline double flux(Order order, const Jet& jet) {
  if (jet.order() < flux_jet_order(order))
    throw DomainError("flux: jet order " + std::to_string(jet.order()) + " < required " +
                      std::to_string(flux_jet_order(order)));
  return evaluate_terms(flux_terms(order), 0.0, 0.0, jet.values());
}

}  // namespace mkdv
