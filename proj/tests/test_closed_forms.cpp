#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mkdv/closed_forms.hpp"

using namespace mkdv;

namespace {

// Independent evaluation of the antiderivative profile 2 arctan(G/F).
double profile(const BreatherParams& p, const Velocities& v, double t, double x) {
  const double y1 = x + v.delta * t + p.x1, y2 = x + v.gamma * t + p.x2;
  return 2.0 * std::atan((p.beta / p.alpha) * std::sin(p.alpha * y1) / std::cosh(p.beta * y2));
}

// Sixth-order central difference of f at x.
template <class F>
double central6(F f, double x, double h) {
  return (-f(x - 3 * h) + 9 * f(x - 2 * h) - 45 * f(x - h) + 45 * f(x + h) - 9 * f(x + 2 * h) + f(x + 3 * h)) /
         (60 * h);
}

}  // namespace

TEST(Velocities, FifthOrderUnitParameters) {
  const auto v = velocities(Order(5), 1.0, 1.0);
  EXPECT_DOUBLE_EQ(v.delta, 4.0);
  EXPECT_DOUBLE_EQ(v.gamma, 4.0);
}

TEST(Velocities, ThirdOrderMatchesClassicalPair) {
  for (double a : {0.5, 1.0, 2.0})
    for (double b : {0.5, 1.0, 2.0}) {
      const auto v = velocities(Order(3), a, b);
      EXPECT_DOUBLE_EQ(v.delta, a * a - 3 * b * b);
      EXPECT_DOUBLE_EQ(v.gamma, 3 * a * a - b * b);
    }
  const auto v = velocities(Order(3), 1.0, 1.0);
  EXPECT_DOUBLE_EQ(v.delta, -2.0);
  EXPECT_DOUBLE_EQ(v.gamma, 2.0);
}

TEST(Velocities, EleventhOrderAlphaOnly) {
  // beta = 0 is outside the breather domain, so evaluate the polynomials.
  const auto v = velocity_polys(Order(11))(1.0, 0.0);
  EXPECT_DOUBLE_EQ(v.delta, 1.0);
  EXPECT_DOUBLE_EQ(v.gamma, 11.0);
}

TEST(Velocities, PrintedNinthOrderCarrierTermKept) {
  const auto printed = velocity_polys(Order(9));
  EXPECT_EQ(printed.delta.terms()[3], (PolyTerm{84, 3, 6}));
  const auto resolved = corrected_velocity_polys(Order(9));
  EXPECT_EQ(resolved.delta.terms()[3], (PolyTerm{84, 2, 6}));
  EXPECT_EQ(printed.gamma.terms()[3], (PolyTerm{84, 6, 2}));
}

TEST(Velocities, RejectsNonPositiveParameters) {
  EXPECT_THROW(velocities(Order(5), 0.0, 1.0), DomainError);
  EXPECT_THROW(velocities(Order(5), 1.0, -1.0), DomainError);
  EXPECT_THROW(Order(4), DomainError);
}

TEST(BreatherJet, ValueAtOrigin) {
  BreatherParams p{Order(5), 1.0, 1.0, 0.0, 0.0};
  EXPECT_NEAR(breather_value(p, 0.0, 0.0), 2.0, 1e-15);
}

TEST(BreatherJet, EvenInSpaceAtZeroPhase) {
  // The profile 2 arctan(G/F) is odd at zero phase, so B is even.
  BreatherParams p{Order(7), 1.3, 0.7, 0.0, 0.0};
  for (double x : {0.1, 0.77, 2.5, 6.0}) {
    EXPECT_NEAR(breather_value(p, 0.0, -x), breather_value(p, 0.0, x), 1e-15);
    EXPECT_NEAR(breather_jet(p, 0.0, -x, 1).dx[0], -breather_jet(p, 0.0, x, 1).dx[0], 1e-14);
  }
}

TEST(BreatherJet, ValueMatchesDifferencedProfile) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int order : {3, 5, 7, 9, 11}) {
    BreatherParams p{Order(order), 0.6 + 0.5 * std::abs(u(rng)), 0.6 + 0.5 * std::abs(u(rng)), u(rng), u(rng)};
    const Velocities v = p.velocities();
    const double t = 0.1 * u(rng), x = u(rng);
    const double fd = central6([&](double s) { return profile(p, v, t, s); }, x, 1e-3);
    EXPECT_NEAR(breather_value(p, t, x), fd, 1e-10) << "order " << order;
  }
}

TEST(BreatherJet, FirstDerivativeMatchesFourthOrderDifference) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  BreatherParams p{Order(5), 1.0, 1.0, 0.2, -0.4};
  for (int i = 0; i < 3; ++i) {
    const double x = u(rng);
    const double h = 1e-3;
    auto f = [&](double s) { return breather_value(p, 0.0, s); };
    const double fd = (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
    const double d1 = breather_jet(p, 0.0, x, 1).dx[0];
    EXPECT_LE(std::abs(d1 - fd), 1e-8 * std::max(1.0, std::abs(d1)));
  }
}

TEST(BreatherJet, DerivativeLadderMatchesDifferences) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int order : {3, 5, 7, 9, 11})
    for (int trial = 0; trial < 3; ++trial) {
      BreatherParams p{Order(order), 0.7 + 0.3 * std::abs(u(rng)), 0.7 + 0.3 * std::abs(u(rng)), u(rng), u(rng)};
      const double t = 0.05 * u(rng), x = u(rng);
      const Jet j = breather_jet(p, t, x, kMaxJetOrder);
      for (int k = 1; k <= kMaxJetOrder; ++k) {
        auto f = [&](double s) { return breather_jet(p, t, s, k - 1).d(k - 1); };
        const double fd = central6(f, x, 2e-3);
        double scale = 0.0;
        for (int q = 0; q <= k; ++q) scale = std::max(scale, std::abs(j.d(q)));
        EXPECT_LE(std::abs(j.d(k) - fd), 1e-7 * scale) << "order " << order << " k " << k;
      }
    }
}

TEST(BreatherJet, TimeDerivativeOfProfile) {
  for (int order : {3, 5, 7, 9}) {
    BreatherParams p{Order(order), 0.8, 1.1, 0.3, -0.2};
    const Velocities v = p.velocities();
    for (double x : {-1.0, 0.0, 0.7}) {
      const double t = 0.02;
      const double fd = central6([&](double s) { return profile(p, v, s, x); }, t, 1e-4);
      const double ut = breather_jet(p, t, x, 0).dt_tilde;
      EXPECT_LE(std::abs(ut - fd), 1e-7 * std::max(1.0, std::abs(ut))) << "order " << order;
    }
  }
}

TEST(BreatherJet, TranslationCovariance) {
  BreatherParams p{Order(9), 1.2, 0.8, 0.4, -0.3};
  const double s = 0.65;
  BreatherParams q = p;
  q.x1 += s;
  q.x2 += s;
  for (double x : {-2.0, 0.0, 1.3}) {
    const Jet a = breather_jet(q, 0.3, x, 9), b = breather_jet(p, 0.3, x + s, 9);
    EXPECT_NEAR(a.value, b.value, 1e-13);
    for (int k = 0; k < 9; ++k) EXPECT_NEAR(a.dx[k], b.dx[k], 1e-9 * std::max(1.0, std::abs(b.dx[k])));
  }
}

TEST(BreatherJet, JetOrderLimit) {
  BreatherParams p;
  EXPECT_THROW(breather_jet(p, 0, 0, kMaxJetOrder + 1), DomainError);
  EXPECT_EQ(breather_jet(p, 0, 0, 4).order(), 4);
}

TEST(SolitonJet, ProfileValues) {
  EXPECT_DOUBLE_EQ(soliton_jet({Order(3), 1.0}, 0, 0, 0).value, 1.0);
  EXPECT_DOUBLE_EQ(soliton_jet({Order(3), 4.0}, 0, 0, 0).value, 2.0);
  const Jet a = soliton_jet({Order(5), 1.0}, 1.0, 1.0, 4), b = soliton_jet({Order(5), 1.0}, 0.0, 0.0, 4);
  EXPECT_NEAR(a.value, b.value, 1e-15);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(a.dx[k], b.dx[k], 1e-14);
}

TEST(SolitonJet, SpeedLaw) {
  for (int order : {3, 5, 7, 9}) {
    SolitonParams p{Order(order), 1.7};
    EXPECT_NEAR(p.speed(), std::pow(1.7, (order - 1) / 2), 1e-14);
  }
}

TEST(SolitonJet, DerivativesMatchDifferences) {
  SolitonParams p{Order(7), 2.0};
  const double x = 0.37;
  const Jet j = soliton_jet(p, 0.0, x, 6);
  for (int k = 1; k <= 6; ++k) {
    const double fd = central6([&](double s) { return soliton_jet(p, 0.0, s, k - 1).d(k - 1); }, x, 1e-3);
    EXPECT_LE(std::abs(j.d(k) - fd), 1e-8 * std::max(1.0, std::abs(j.d(k))));
  }
}

TEST(PartialMass, Limits) {
  BreatherParams p{Order(5), 1.0, 1.0, 0.0, 0.0};
  EXPECT_NEAR(partial_mass(p, 0.0, -40.0), 0.0, 1e-14);
  EXPECT_NEAR(partial_mass(p, 0.0, 40.0), 2.0, 1e-14);
}

TEST(PartialMass, MatchesCumulativeQuadrature) {
  BreatherParams p{Order(5), 1.0, 1.0, 0.0, 0.0};
  // Composite Simpson on [-30, 0] with a fine step.
  const int n = 60000;
  const double a = -30.0, h = 30.0 / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double b = breather_value(p, 0.0, a + i * h);
    acc += w * 0.5 * b * b;
  }
  acc *= h / 3.0;
  EXPECT_NEAR(partial_mass(p, 0.0, 0.0), acc, 1e-8);
}

TEST(Flux, ConstantJets) {
  Jet j;
  j.value = 1.0;
  j.dx.assign(8, 0.0);
  EXPECT_DOUBLE_EQ(flux(Order(3), j), 2.0);
  EXPECT_DOUBLE_EQ(flux(Order(5), j), 6.0);
  EXPECT_DOUBLE_EQ(flux(Order(7), j), 20.0);
  EXPECT_DOUBLE_EQ(flux(Order(9), j), 70.0);
  EXPECT_DOUBLE_EQ(flux(Order(11), j), 252.0);
}

TEST(Flux, OddUnderNegation) {
  const Jet j = breather_jet({Order(11), 0.9, 1.2, 0.1, 0.2}, 0.0, 0.4, 8);
  for (int order : {3, 5, 7, 9, 11}) EXPECT_NEAR(flux(Order(order), j.negated()), -flux(Order(order), j), 1e-9);
}

TEST(Flux, InsufficientJet) {
  const Jet j = breather_jet({}, 0.0, 0.0, 5);
  EXPECT_THROW(flux(Order(9), j), DomainError);
  EXPECT_NO_THROW(flux(Order(7), j));
}

TEST(Flux, TermsHaveOddDegreeAndMatchingWeight) {
  // Weight of u_{kx} is k + 1; every term of f_n has weight n.
  for (int order : {3, 5, 7, 9, 11})
    for (const auto& t : flux_terms(Order(order))) {
      EXPECT_EQ(t.mono.u_degree() % 2, 1);
      EXPECT_EQ(t.mono.u_degree() + t.mono.derivative_count(), order) << t.mono.str();
    }
}
