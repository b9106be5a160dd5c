#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mkdv/closed_forms.hpp"
#include "mkdv/error.hpp"
#include "mkdv/poly.hpp"

namespace mkdv {

enum class IdentityId {
  kSolitonOde2,        ///< Q'' - c Q + 2 Q^3
  kSolitonOdeHigh,     ///< Q^{(n-1)} - c^{(n-1)/2} Q + f_n(Q)
  kBreatherOde4,       ///< fourth-order stationary equation G[B]
  kEvolution,          ///< ut~ + B_{(n-1)x} + f_n(B)
  kFirstIntegral5,     ///< multiplied-by-B_x first integral, 5th order
  kFirstIntegral7,
  kFirstIntegral9,
  kTimeDerivative5,    ///< ut~ = (a^2+b^2)^2 B - 2(b^2-a^2)(B_xx + 2B^3)
  kReduced7,           ///< ut~ written with derivatives up to B_3x, 7th order
  kReduced9,
};

inline std::string to_string(IdentityId id) {
  switch (id) {
    case IdentityId::kSolitonOde2: return "soliton_ode_2nd";
    case IdentityId::kSolitonOdeHigh: return "soliton_ode_high";
    case IdentityId::kBreatherOde4: return "breather_ode_4th";
    case IdentityId::kEvolution: return "evolution_identity";
    case IdentityId::kFirstIntegral5: return "first_integral_5th";
    case IdentityId::kFirstIntegral7: return "first_integral_7th";
    case IdentityId::kFirstIntegral9: return "first_integral_9th";
    case IdentityId::kTimeDerivative5: return "time_derivative_5th";
    case IdentityId::kReduced7: return "reduced_time_derivative_7th";
    case IdentityId::kReduced9: return "reduced_time_derivative_9th";
  }
  return "?";
}

namespace terms {

inline const Poly a2 = Poly::a(2);
inline const Poly b2 = Poly::b(2);
/// beta^2 - alpha^2
inline const Poly s = b2 - a2;
/// (alpha^2 + beta^2)^2
inline const Poly r = (a2 + b2) * (a2 + b2);

inline std::string derivative_name(int k) {
  if (k == 0) return "u";
  if (k == 1) return "u_x";
  return "u_" + std::to_string(k) + "x";
}

}  // namespace terms

/// Term list of an identity, transcribed term by term. `order` selects the
/// hierarchy member for the soliton and evolution identities.
inline TermList identity_terms(IdentityId id, Order order = Order(5)) {
  using namespace terms;
  const int n = order.value();
  switch (id) {
    case IdentityId::kSolitonOde2:
      return {{1, "u_xx"}, {-Poly::a(), "u"}, {2, "u^3"}};
    case IdentityId::kSolitonOdeHigh: {
      TermList t{{1, derivative_name(n - 1)}, {-Poly::a(order.k()), "u"}};
      for (auto& f : flux_terms(order)) t.push_back(f);
      return t;
    }
    case IdentityId::kBreatherOde4:
      return {{1, "u_4x"}, {10, "u u_x^2"}, {10, "u^2 u_xx"}, {6, "u^5"},
              {-2.0 * s, "u_xx"}, {-4.0 * s, "u^3"}, {r, "u"}};
    case IdentityId::kEvolution: {
      TermList t{{1, "ut~"}, {1, derivative_name(n - 1)}};
      for (auto& f : flux_terms(order)) t.push_back(f);
      return t;
    }
    case IdentityId::kFirstIntegral5:
      return {{1, "u_xx^2"}, {-2, "u ut~"}, {2, "Mt"}, {-2, "u^6"}, {-2, "u_x u_3x"}, {-10, "u^2 u_x^2"}};
    case IdentityId::kFirstIntegral7:
      return {{1, "u_3x^2"},        {2, "u ut~"},         {-2, "Mt"},           {5, "u^8"},
              {2, "u_x u_5x"},      {-2, "u_xx^2 u_4x"},  {28, "u^2 u_x u_3x"}, {-14, "u^2 u_xx^2"},
              {56, "u u_x^2 u_xx"}, {7, "u_x^4"},         {70, "u^4 u_x^2"}};
    case IdentityId::kFirstIntegral9:
      return {{1, "u_4x^2"},     {-2, "u ut~"},     {2, "Mt"}, {-2, "u_7x u_x"},
              {2, "u_6x u_xx"}, {-2, "u_5x u_3x"}, {1, "F9"}};
    case IdentityId::kTimeDerivative5:
      return {{1, "ut~"}, {-r, "u"}, {2.0 * s, "u_xx"}, {4.0 * s, "u^3"}};
    case IdentityId::kReduced7:
      return {{1, "ut~"},
              {-2.0 * s * r, "u"},
              {4.0 * (Poly::a(4) - 6.0 * a2 * b2 + Poly::b(4)), "u^3"},
              {4.0 * s, "u^5"},
              {-4, "u^7"},
              {3.0 * Poly::a(4) - 10.0 * a2 * b2 + 3.0 * Poly::b(4), "u_xx"},
              {4.0 * s, "u u_x^2"},
              {-20, "u^3 u_x^2"},
              {2, "u u_xx^2"},
              {-4, "u u_x u_3x"}};
    case IdentityId::kReduced9: {
      const Poly a4 = Poly::a(4), b4 = Poly::b(4), ab = a2 * b2;
      const Poly c0 = -1.0 * r * (3.0 * a4 - 10.0 * ab + 3.0 * b4);
      const Poly c1 = -4.0 * (a2 - b2) * (a4 - 14.0 * ab + b4);
      const Poly c2 = -2.0 * (a4 + 18.0 * ab + b4);
      const Poly c3 = 2.0 * (5.0 * a4 - 6.0 * ab + 5.0 * b4);
      const Poly c4 = -4.0 * (a2 - b2) * (a4 - 6.0 * ab + b4);
      return {{1, "ut~"},
              {c0, "u"},
              {c1, "u^3"},
              {c2, "u^5"},
              {16.0 * s, "u^7"},
              {-26, "u^9"},
              {c3, "u_x^2 u"},
              {32.0 * (a2 - b2), "u_x^2 u^3"},
              {-100, "u_x^2 u^5"},
              {-2, "u_x^4 u"},
              {c4, "u_xx"},
              {-6.0 * r, "u_xx u^2"},
              {20.0 * s, "u_xx u^4"},
              {-28, "u_xx u^6"},
              {4.0 * s, "u_x^2 u_xx"},
              {-12, "u_x^2 u_xx u^2"},
              {8.0 * s, "u_xx^2 u"},
              {-4, "u_xx^2 u^3"},
              {2, "u_xx^3"},
              {8.0 * (a2 - b2), "u_x u_3x u"},
              {-32, "u_x u_3x u^3"},
              {-4, "u_x u_xx u_3x"},
              {-2, "u_3x^2 u"}};
    }
  }
  throw DomainError("unknown identity");
}

/// Replaces the coefficient and/or monomial of one term.
struct TermSubstitution {
  int term_index = 0;
  std::optional<Poly> coef;
  std::optional<Monomial> mono;
};

/// Replaces one monomial of a velocity polynomial.
struct VelocitySubstitution {
  enum class Which { kDelta, kGamma } which = Which::kDelta;
  int term_index = 0;
  PolyTerm replacement;
};

/// A named edit of a transcribed identity, evaluated side by side with the
/// verbatim form.
struct IdentityVariant {
  std::string label = "verbatim";
  std::vector<TermSubstitution> terms;
  std::vector<VelocitySubstitution> velocities;

  bool is_verbatim() const { return terms.empty() && velocities.empty(); }
};

/// The order-9 carrier speed with 84 a^2 b^6 in place of the printed term.
inline IdentityVariant resolved_velocity_variant(Order order) {
  if (order.value() != 9) return {};
  return {"delta9: 84 a^2 b^6", {}, {{VelocitySubstitution::Which::kDelta, 3, {84, 2, 6}}}};
}

/// Candidate readings of the printed order-9 carrier-speed term 84 a^3 b^6.
inline std::vector<IdentityVariant> delta9_variants() {
  return {{"delta9: 84 a^6 b^2", {}, {{VelocitySubstitution::Which::kDelta, 3, {84, 6, 2}}}},
          resolved_velocity_variant(Order(9))};
}

inline TermList apply_variant(TermList t, const IdentityVariant& v) {
  for (const auto& sub : v.terms) {
    if (sub.term_index < 0 || sub.term_index >= static_cast<int>(t.size()))
      throw DomainError("variant '" + v.label + "': term index " + std::to_string(sub.term_index) + " out of range");
    if (!sub.coef && !sub.mono) throw DomainError("variant '" + v.label + "': empty substitution");
    if (sub.coef) t[sub.term_index].coef = *sub.coef;
    if (sub.mono) t[sub.term_index].mono = *sub.mono;
  }
  return t;
}

inline VelocityPolys apply_variant(VelocityPolys p, const IdentityVariant& v) {
  for (const auto& sub : v.velocities) {
    Poly& target = sub.which == VelocitySubstitution::Which::kDelta ? p.delta : p.gamma;
    if (sub.term_index < 0 || sub.term_index >= static_cast<int>(target.terms().size()))
      throw DomainError("variant '" + v.label + "': velocity term index out of range");
    target.terms()[sub.term_index] = sub.replacement;
  }
  return p;
}

/// Sample points: Chebyshev nodes over the decay window plus a cluster at the
/// envelope peak.
struct SampleSpec {
  double center = 0.0;
  double half_width = 20.0;
  double peak_half_width = 1.0;
  int n_window = 256;
  int n_peak = 64;

  std::vector<double> points() const {
    std::vector<double> xs;
    xs.reserve(n_window + n_peak);
    for (int j = 0; j < n_window; ++j)
      xs.push_back(center + half_width * std::cos(std::numbers::pi * (j + 0.5) / n_window));
    for (int j = 0; j < n_peak; ++j)
      xs.push_back(center + peak_half_width * std::cos(std::numbers::pi * (j + 0.5) / n_peak));
    std::sort(xs.begin(), xs.end());
    return xs;
  }

  std::string describe() const {
    return std::to_string(n_window) + " Chebyshev nodes on [" + fmt(center - half_width) + ", " +
           fmt(center + half_width) + "] + " + std::to_string(n_peak) + " on [" +
           fmt(center - peak_half_width) + ", " + fmt(center + peak_half_width) + "]";
  }

  /// Doubles the node counts and the window half width.
  SampleSpec refined() const {
    SampleSpec s = *this;
    s.n_window *= 2;
    s.n_peak *= 2;
    s.half_width *= 2;
    return s;
  }

  static SampleSpec for_breather(const BreatherParams& p, const Velocities& v, double t) {
    SampleSpec s;
    s.center = -v.gamma * t - p.x2;
    s.half_width = 20.0 / p.beta;
    s.peak_half_width = std::min(1.0 / p.beta, 2.0);
    return s;
  }

  static SampleSpec for_soliton(const SolitonParams& p, double t) {
    SampleSpec s;
    const double sc = std::sqrt(p.c);
    s.center = p.speed() * t;
    s.half_width = 20.0 / sc;
    s.peak_half_width = 1.0 / sc;
    return s;
  }

 private:
  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
  }
};

using IdentityParams = std::variant<BreatherParams, SolitonParams>;

struct ResidualReport {
  std::string identity_id;
  IdentityParams params;
  Order order{5};  ///< hierarchy member the identity was instantiated for
  double t = 0.0;
  std::string sample_spec;
  int samples = 0;
  double sup_residual = 0.0;
  double rel_scale = 1.0;
  std::string variant = "verbatim";

  double normalized() const { return sup_residual / rel_scale; }
};

/// Everything needed to evaluate an identity on samples.
struct IdentityRequest {
  IdentityId id = IdentityId::kBreatherOde4;
  IdentityParams params = BreatherParams{};
  Order order{5};
  double t = 0.0;
  std::optional<SampleSpec> samples;  ///< defaults to the decay window of the solution
};

namespace detail {

/// Fixed 8-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 8> kGlNodes = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                                   -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                                   0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGlWeights = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                                     0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                                     0.2223810344533745, 0.1012285362903763};

inline double flux9_times_ux(const BreatherParams& p, const Velocities& v, double t, double x,
                             const TermList& f9) {
  const BreatherLocal loc = breather_local(p, v, t, x, 6);
  JetValues jv{};
  for (int k = 0; k <= 6; ++k) jv[k] = loc.b.dx(k);
  return evaluate_terms(f9, 0.0, 0.0, jv) * jv[1];
}

/// -2 integral_{x0}^{x} f9(B) B_x at each sorted x, by composite Gauss-Legendre
/// on panels no wider than `panel`.
inline std::vector<double> cumulative_flux9(const BreatherParams& p, const Velocities& v, double t, double x0,
                                            const std::vector<double>& xs, double panel) {
  const TermList f9 = flux_terms(Order(9));
  std::vector<double> out(xs.size());
  double acc = 0.0;
  double prev = x0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double gap = xs[i] - prev;
    if (gap > 0.0) {
      const int panels = std::max(1, static_cast<int>(std::ceil(gap / panel)));
      const double hp = gap / panels;
      for (int q = 0; q < panels; ++q) {
        const double mid = prev + (q + 0.5) * hp;
        double s = 0.0;
        for (int g = 0; g < 8; ++g) s += kGlWeights[g] * flux9_times_ux(p, v, t, mid + 0.5 * hp * kGlNodes[g], f9);
        acc += 0.5 * hp * s;
      }
      prev = xs[i];
    }
    out[i] = -2.0 * acc;
  }
  return out;
}

}  // namespace detail

/// Evaluates one identity (with an optional variant) on its sample set.
inline ResidualReport evaluate_identity(const IdentityRequest& req, const IdentityVariant& variant = {}) {
  const TermList terms = apply_variant(identity_terms(req.id, req.order), variant);
  const int m = max_derivative(terms);
  if (m > kMaxJetOrder) throw DomainError("identity needs derivatives beyond the jet order limit");

  ResidualReport rep;
  rep.identity_id = to_string(req.id);
  rep.params = req.params;
  rep.order = req.order;
  rep.t = req.t;
  rep.variant = variant.label;

  bool needs_flux9 = false;
  for (const auto& term : terms) needs_flux9 = needs_flux9 || term.mono.uses(JetVar::kFlux9Cum);

  double sup = 0.0, scale = 0.0;
  auto accumulate = [&](const JetValues& jv, double pa, double pb) {
    double total = 0.0;
    for (const auto& term : terms) {
      const double v = term.coef(pa, pb) * term.mono(jv);
      total += v;
      scale = std::max(scale, std::abs(v));
    }
    sup = std::max(sup, std::abs(total));
  };

  if (const auto* bp = std::get_if<BreatherParams>(&req.params)) {
    bp->validate();
    const Velocities vel = apply_variant(velocity_polys(req.order), variant)(bp->alpha, bp->beta);
    const SampleSpec spec = req.samples.value_or(SampleSpec::for_breather(*bp, vel, req.t));
    const auto xs = spec.points();
    std::vector<double> f9;
    if (needs_flux9) {
      const double panel = 0.1 / std::max({bp->alpha, bp->beta, 1.0});
      f9 = detail::cumulative_flux9(*bp, vel, req.t, spec.center - spec.half_width, xs, panel);
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const BreatherLocal loc = breather_local(*bp, vel, req.t, xs[i], std::max(m, 0));
      JetValues jv{};
      for (int k = 0; k <= m; ++k) jv[k] = loc.b.dx(k);
      jv[static_cast<int>(JetVar::kUt)] = loc.ut;
      jv[static_cast<int>(JetVar::kMt)] = loc.mt;
      if (needs_flux9) jv[static_cast<int>(JetVar::kFlux9Cum)] = f9[i];
      accumulate(jv, bp->alpha, bp->beta);
    }
    rep.sample_spec = spec.describe();
    rep.samples = static_cast<int>(xs.size());
  } else {
    const auto& sp = std::get<SolitonParams>(req.params);
    sp.validate();
    if (needs_flux9) throw DomainError("cumulative flux is defined for breathers only");
    const SampleSpec spec = req.samples.value_or(SampleSpec::for_soliton(sp, req.t));
    const auto xs = spec.points();
    for (double x : xs) {
      const Jet j = soliton_jet(sp, req.t, x, std::max(m, 0));
      accumulate(j.values(), sp.c, 0.0);
    }
    rep.sample_spec = spec.describe();
    rep.samples = static_cast<int>(xs.size());
  }
  rep.sup_residual = sup;
  rep.rel_scale = scale > 0.0 ? scale : 1.0;
  return rep;
}

/// Verbatim report first, then one report per variant, same sampling.
inline std::vector<ResidualReport> run_variants(const IdentityRequest& req,
                                                const std::vector<IdentityVariant>& variants) {
  std::vector<ResidualReport> out;
  out.push_back(evaluate_identity(req));
  for (const auto& v : variants) out.push_back(evaluate_identity(req, v));
  return out;
}

// Operation-level entry points.

enum class SolitonOdeLevel { kSecond, kHigh };

inline ResidualReport soliton_ode_residual(const SolitonParams& p, SolitonOdeLevel level) {
  IdentityRequest req;
  req.id = level == SolitonOdeLevel::kSecond ? IdentityId::kSolitonOde2 : IdentityId::kSolitonOdeHigh;
  req.params = p;
  req.order = p.order;
  return evaluate_identity(req);
}

inline ResidualReport breather_ode_residual(const BreatherParams& p, double t) {
  IdentityRequest req;
  req.id = IdentityId::kBreatherOde4;
  req.params = p;
  req.order = p.order;
  req.t = t;
  return evaluate_identity(req);
}

/// ut~ + B_{(n-1)x} + f_n(B) with the printed velocity table unless a variant
/// is given.
inline ResidualReport evolution_identity_residual(const BreatherParams& p, double t = 0.0,
                                                  const IdentityVariant& variant = {}) {
  IdentityRequest req;
  req.id = IdentityId::kEvolution;
  req.params = p;
  req.order = p.order;
  req.t = t;
  return evaluate_identity(req, variant);
}

enum class FirstIntegralCase { k5th, k7th, k9th };

inline ResidualReport first_integral_residual(const BreatherParams& p, FirstIntegralCase c, double t = 0.0,
                                              const IdentityVariant& variant = {}) {
  IdentityRequest req;
  req.params = p;
  req.t = t;
  switch (c) {
    case FirstIntegralCase::k5th: req.id = IdentityId::kFirstIntegral5; req.order = Order(5); break;
    case FirstIntegralCase::k7th: req.id = IdentityId::kFirstIntegral7; req.order = Order(7); break;
    case FirstIntegralCase::k9th: req.id = IdentityId::kFirstIntegral9; req.order = Order(9); break;
  }
  return evaluate_identity(req, variant);
}

/// Readings of the 7th-order first integral tested against the printed one:
/// -2 B_xx B_4x in place of -2 B_xx^2 B_4x, alone and together with 21 B_x^4
/// in place of 7 B_x^4.
inline std::vector<IdentityVariant> first_integral7_variants() {
  const TermSubstitution degree_fix{5, std::nullopt, Monomial::parse("u_xx u_4x")};
  const TermSubstitution quartic_fix{9, Poly(21.0), std::nullopt};
  return {{"term 5: -2 u_xx u_4x", {degree_fix}, {}},
          {"term 5: -2 u_xx u_4x; term 9: 21 u_x^4", {degree_fix, quartic_fix}, {}}};
}

inline ResidualReport time_derivative5_residual(const BreatherParams& p, double t) {
  if (p.order.value() != 5) throw DomainError("time-derivative identity holds for the 5th-order breather only");
  IdentityRequest req;
  req.id = IdentityId::kTimeDerivative5;
  req.params = p;
  req.order = Order(5);
  req.t = t;
  return evaluate_identity(req);
}

enum class ReducedCase { k7th, k9th };

inline ResidualReport reduced_time_derivative_residual(const BreatherParams& p, ReducedCase c, double t = 0.0,
                                                       const IdentityVariant& variant = {}) {
  const int need = c == ReducedCase::k7th ? 7 : 9;
  if (p.order.value() != need) throw DomainError("order does not match the requested case");
  IdentityRequest req;
  req.id = c == ReducedCase::k7th ? IdentityId::kReduced7 : IdentityId::kReduced9;
  req.params = p;
  req.order = p.order;
  req.t = t;
  return evaluate_identity(req, variant);
}

}  // namespace mkdv
