#include <gtest/gtest.h>

#include <random>

#include "mkdv/identities.hpp"

using namespace mkdv;

namespace {

const double kSweep[] = {0.5, 1.0, 2.0};

IdentityVariant delta9(int pa, int pb, const std::string& label) {
  return {label, {}, {{VelocitySubstitution::Which::kDelta, 3, {84, pa, pb}}}};
}

}  // namespace

TEST(SolitonOde, SecondOrder) {
  for (double c : {0.25, 1.0, 4.0}) {
    const auto r = soliton_ode_residual({Order(3), c}, SolitonOdeLevel::kSecond);
    EXPECT_LE(r.normalized(), 1e-12) << c;
    EXPECT_GE(r.samples, 200);
  }
  EXPECT_LE(soliton_ode_residual({Order(3), 1.0}, SolitonOdeLevel::kSecond).sup_residual, 1e-12);
}

TEST(SolitonOde, HigherOrders) {
  for (int order : {5, 7, 9, 11})
    for (double c : {0.25, 1.0, 2.0, 4.0})
      EXPECT_LE(soliton_ode_residual({Order(order), c}, SolitonOdeLevel::kHigh).normalized(), 1e-10)
          << order << " " << c;
}

TEST(SolitonOde, WrongSpeedExponentFails) {
  IdentityRequest req{IdentityId::kSolitonOdeHigh, SolitonParams{Order(7), 2.0}, Order(7), 0.0, std::nullopt};
  IdentityVariant wrong{"c^2", {{1, -1.0 * Poly::a(2), std::nullopt}}, {}};
  EXPECT_GT(evaluate_identity(req, wrong).normalized(), 1e-3);
}

TEST(BreatherOde, AllOrdersAndTimes) {
  for (int order : {3, 5, 7, 9, 11})
    for (double a : kSweep)
      for (double b : kSweep)
        for (double t : {0.0, 0.37, 1.1}) {
          BreatherParams p{Order(order), a, b, 0.0, 0.0};
          EXPECT_LE(breather_ode_residual(p, t).normalized(), 1e-10) << order << " " << a << " " << b << " " << t;
        }
}

TEST(BreatherOde, SpecExamples) {
  EXPECT_LE(breather_ode_residual({Order(9), 2.0, 0.5}, 0.7).normalized(), 1e-10);
  EXPECT_LE(breather_ode_residual({Order(11), 1.0, 2.0}, 0.3).normalized(), 1e-10);
}

TEST(BreatherOde, ProfileIndependentOfOrderAtTimeZero) {
  // At t = 0 the profile does not depend on the velocities.
  const auto ref = breather_ode_residual({Order(3), 0.9, 1.4, 0.2, -0.5}, 0.0);
  for (int order : {5, 7, 9, 11}) {
    const auto r = breather_ode_residual({Order(order), 0.9, 1.4, 0.2, -0.5}, 0.0);
    EXPECT_EQ(r.sup_residual, ref.sup_residual);
    EXPECT_EQ(r.rel_scale, ref.rel_scale);
  }
}

TEST(BreatherOde, ScalingInvariance) {
  for (double lambda : {0.5, 1.0, 2.0}) {
    BreatherParams p{Order(5), 0.8 * lambda, 1.2 * lambda};
    EXPECT_LE(breather_ode_residual(p, 0.0).normalized(), 1e-10);
  }
}

TEST(BreatherOde, RefinementInvariance) {
  BreatherParams p{Order(7), 1.3, 0.6, 0.1, 0.4};
  IdentityRequest req{IdentityId::kBreatherOde4, p, Order(7), 0.2, std::nullopt};
  const auto base = evaluate_identity(req);
  req.samples = SampleSpec::for_breather(p, p.velocities(), 0.2).refined();
  const auto fine = evaluate_identity(req);
  EXPECT_LE(fine.normalized(), std::max(2.0 * base.normalized(), 1e-14));
  EXPECT_EQ(fine.samples, 2 * base.samples);
}

TEST(EvolutionIdentity, FifthSeventhEleventh) {
  for (int order : {3, 5, 7, 11})
    for (double a : kSweep)
      for (double b : kSweep) {
        BreatherParams p{Order(order), a, b, 0.1, -0.2};
        EXPECT_LE(evolution_identity_residual(p, 0.3).normalized(), 1e-9) << order << " " << a << " " << b;
      }
}

TEST(EvolutionIdentity, NinthOrderCarrierSpeedVariants) {
  BreatherParams p{Order(9), 0.7, 1.3};
  const auto reports = run_variants({IdentityId::kEvolution, p, Order(9), 0.0, std::nullopt},
                                    {delta9(6, 2, "84 a^6 b^2"), delta9(2, 6, "84 a^2 b^6")});
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(reports[0].variant, "verbatim");
  int passing = 0;
  for (const auto& r : reports) passing += r.normalized() <= 1e-9;
  EXPECT_EQ(passing, 1);
  EXPECT_LE(reports[2].normalized(), 1e-9);
  EXPECT_GT(reports[0].normalized(), 1e-7);
  EXPECT_GT(reports[1].normalized(), 1e-7);
}

TEST(EvolutionIdentity, ResolvedNinthOrderHoldsOverSweep) {
  for (double a : kSweep)
    for (double b : kSweep)
      for (double t : {0.0, 0.37}) {
        BreatherParams p{Order(9), a, b};
        EXPECT_LE(evolution_identity_residual(p, t, resolved_velocity_variant(Order(9))).normalized(), 1e-9);
      }
}

TEST(EvolutionIdentity, ResidualsStableAcrossTimes) {
  BreatherParams p{Order(7), 1.1, 0.9};
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int i = 0; i < 5; ++i) EXPECT_LE(evolution_identity_residual(p, u(rng)).normalized(), 1e-9);
}

TEST(FirstIntegral, Fifth) {
  for (double t : {0.0, 0.4}) EXPECT_LE(first_integral_residual({Order(5), 1.0, 1.0}, FirstIntegralCase::k5th, t).normalized(), 1e-8);
}

TEST(FirstIntegral, SeventhVariants) {
  BreatherParams p{Order(7), 1.0, 0.8};
  const auto reports =
      run_variants({IdentityId::kFirstIntegral7, p, Order(7), 0.0, std::nullopt}, first_integral7_variants());
  ASSERT_EQ(reports.size(), 3u);
  int passing = 0;
  for (const auto& r : reports) passing += r.normalized() <= 1e-7;
  EXPECT_EQ(passing, 1);
  EXPECT_LE(reports[2].normalized(), 1e-9);
}

TEST(FirstIntegral, Ninth) {
  BreatherParams p{Order(9), 1.0, 0.8};
  EXPECT_LE(first_integral_residual(p, FirstIntegralCase::k9th, 0.0, resolved_velocity_variant(Order(9))).normalized(),
            1e-7);
  BreatherParams q{Order(9), 0.6, 1.7, 0.3, 0.1};
  EXPECT_LE(first_integral_residual(q, FirstIntegralCase::k9th, 0.2, resolved_velocity_variant(Order(9))).normalized(),
            1e-7);
}

TEST(TimeDerivative, FifthOrder) {
  EXPECT_LE(time_derivative5_residual({Order(5), 1.0, 1.0}, 0.0).normalized(), 1e-10);
  EXPECT_LE(time_derivative5_residual({Order(5), 3.0, 0.5}, 1.1).normalized(), 1e-10);
  EXPECT_THROW(time_derivative5_residual({Order(7), 1.0, 1.0}, 0.0), DomainError);
}

TEST(Reduced, Seventh) {
  EXPECT_LE(reduced_time_derivative_residual({Order(7), 1.0, 1.0}, ReducedCase::k7th).normalized(), 1e-9);
  EXPECT_LE(reduced_time_derivative_residual({Order(7), 0.7, 1.3}, ReducedCase::k7th, 0.5).normalized(), 1e-9);
  EXPECT_THROW(reduced_time_derivative_residual({Order(9), 1.0, 1.0}, ReducedCase::k7th), DomainError);
}

TEST(Reduced, Ninth) {
  BreatherParams p{Order(9), 0.7, 1.3};
  EXPECT_LE(reduced_time_derivative_residual(p, ReducedCase::k9th, 0.0, resolved_velocity_variant(Order(9))).normalized(),
            1e-8);
}

TEST(Reduced, NinthCoefficientPerturbation) {
  BreatherParams p{Order(9), 0.7, 1.3};
  IdentityRequest req{IdentityId::kReduced9, p, Order(9), 0.0, std::nullopt};
  const TermList terms = identity_terms(IdentityId::kReduced9, Order(9));
  const double base =
      evaluate_identity(req, resolved_velocity_variant(Order(9))).normalized();
  // Terms 1, 2, 3, 6 and 10 carry the a-coefficients. A 1% change moves the
  // residual by 1% of that term's share of the scale.
  for (int idx : {1, 2, 3, 6, 10}) {
    IdentityVariant v = resolved_velocity_variant(Order(9));
    v.label = "perturbed";
    v.terms.push_back({idx, 1.01 * terms[idx].coef, std::nullopt});
    EXPECT_GT(evaluate_identity(req, v).normalized(), std::max(1e-7, 1e6 * base)) << idx;
  }
}

TEST(Variants, EmptyListGivesVerbatimOnly) {
  const auto r = run_variants({IdentityId::kBreatherOde4, BreatherParams{}, Order(5), 0.0, std::nullopt}, {});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].variant, "verbatim");
}

TEST(Variants, DuplicateVariantIsIdempotent) {
  const IdentityVariant v = delta9(2, 6, "x");
  const auto r = run_variants({IdentityId::kEvolution, BreatherParams{Order(9), 0.7, 1.3}, Order(9), 0.0, std::nullopt}, {v, v});
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[1].sup_residual, r[2].sup_residual);
}

TEST(Variants, MalformedSubstitution) {
  IdentityRequest req{IdentityId::kBreatherOde4, BreatherParams{}, Order(5), 0.0, std::nullopt};
  EXPECT_THROW(evaluate_identity(req, {"bad", {{99, Poly(1.0), std::nullopt}}, {}}), DomainError);
  EXPECT_THROW(evaluate_identity(req, {"empty", {{0, std::nullopt, std::nullopt}}, {}}), DomainError);
}

TEST(Terms, WeightConsistency) {
  // Weight: u_kx counts k + 1, a and b count 1 each, ut~ counts n, Mt counts n + 1.
  struct Case {
    IdentityId id;
    int order;
    int weight;
  };
  const Case cases[] = {{IdentityId::kBreatherOde4, 5, 5},   {IdentityId::kEvolution, 9, 9},
                        {IdentityId::kFirstIntegral5, 5, 6}, {IdentityId::kFirstIntegral9, 9, 10},
                        {IdentityId::kTimeDerivative5, 5, 5}, {IdentityId::kReduced7, 7, 7},
                        {IdentityId::kReduced9, 9, 9}};
  for (const auto& c : cases) {
    for (const auto& t : identity_terms(c.id, Order(c.order))) {
      int w = t.mono.u_degree() + t.mono.derivative_count();
      if (t.mono.uses(JetVar::kUt)) w += c.order;
      if (t.mono.uses(JetVar::kMt)) w += c.order + 1;
      if (t.mono.uses(JetVar::kFlux9Cum)) w += 10;
      for (const auto& pt : t.coef.terms()) EXPECT_EQ(w + pt.pa + pt.pb, c.weight) << to_string(c.id) << " " << t.mono.str();
    }
  }
  // The printed 7th-order first integral has one term of the wrong weight.
  int off = 0;
  for (const auto& t : identity_terms(IdentityId::kFirstIntegral7, Order(7)))
    off += (t.mono.uses(JetVar::kUt) || t.mono.uses(JetVar::kMt)) ? 0 : (t.mono.u_degree() + t.mono.derivative_count() != 8);
  EXPECT_EQ(off, 1);
}

TEST(Reports, Fields) {
  const auto r = breather_ode_residual({Order(5), 1.0, 1.0}, 0.0);
  EXPECT_EQ(r.identity_id, "breather_ode_4th");
  EXPECT_EQ(r.samples, 320);
  EXPECT_GT(r.rel_scale, 0.0);
  EXPECT_GE(r.sup_residual, 0.0);
  EXPECT_FALSE(r.sample_spec.empty());
}
