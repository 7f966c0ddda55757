#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "kaplab/coefficients.hpp"
#include "kaplab/odelab.hpp"
#include "support/envelope_families.hpp"

using namespace kaplab;

namespace {

CoefficientProfile profile(TimeFunction a, TimeFunction b) {
    CoefficientProfile p;
    p.a = std::move(a);
    p.b = std::move(b);
    return p;
}

}  // namespace

TEST(Threshold, VanishingDampingReducesToSqrtC) {
    const auto prof = CoefficientProfile::constant(1.0, 0.0);
    EXPECT_DOUBLE_EQ(threshold_slope(1.0, prof), 1.0);
    EXPECT_TRUE(hyperbolic_threshold(1.0, prof, 2.0, 2.0));
    EXPECT_FALSE(hyperbolic_threshold(1.0, prof, 2.0, 1.999));
    EXPECT_DOUBLE_EQ(threshold_slope(4.0, prof), 2.0);
}

TEST(Threshold, ThreeQuarterDamping) {
    const auto prof = CoefficientProfile::constant(1.0, 0.75);
    EXPECT_NEAR(threshold_slope(1.0, prof), 0.5, 1e-15);
    EXPECT_TRUE(hyperbolic_threshold(1.0, prof, 1.0, 0.5));
    EXPECT_FALSE(hyperbolic_threshold(1.0, prof, 1.0, 0.49));
}

TEST(Threshold, ZeroVelocityNeverQualifies) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.01, 10.0);
    for (int k = 0; k < 100; ++k) {
        const auto prof = CoefficientProfile::constant(U(rng), U(rng));
        EXPECT_FALSE(hyperbolic_threshold(U(rng), prof, U(rng), 0.0));
    }
}

TEST(Threshold, MissingSupNormRejected) {
    CoefficientProfile prof;
    EXPECT_THROW(hyperbolic_threshold(1.0, prof, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(hyperbolic_threshold(1.0, CoefficientProfile::constant(1.0, 0.0), 0.0, 1.0), std::invalid_argument);
}

TEST(EnvelopeL2var, ConstantCoefficients) {
    auto prof = CoefficientProfile::constant(1.0, 0.0);
    prof.monotone_increasing = true;
    const auto e = envelope_L2var(1.0, prof, 2.0);
    for (double t : {0.0, 0.5, 3.0}) EXPECT_NEAR(e(t), 2.0 * std::exp(t), 1e-9 * std::exp(t));

    auto damped = CoefficientProfile::constant(1.0, 0.75);
    damped.monotone_increasing = true;
    const auto d = envelope_L2var(1.0, damped, 1.0);
    for (double t : {1.0, 4.0}) EXPECT_NEAR(d(t), std::exp(0.5 * t), 1e-9 * std::exp(0.5 * t));
}

TEST(EnvelopeL2var, LinearlyGrowingInertia) {
    CoefficientProfile prof = profile([](double t) { return 1.0 + t; }, [](double) { return 0.0; });
    prof.a0 = 1.0;
    prof.b_sup = 0.0;
    prof.monotone_increasing = true;
    const auto e = envelope_L2var(1.0, prof, 1.0);
    for (double t : {0.3, 1.0, 3.0, 8.0}) {
        const double mu = 2.0 * (std::sqrt(1.0 + t) - 1.0);
        EXPECT_NEAR(std::log(e(t)), mu, 1e-9) << t;
    }
}

TEST(EnvelopeL2var, MonotonicityFlagRequired) {
    try {
        envelope_L2var(1.0, CoefficientProfile::constant(1.0, 0.0), 1.0);
        FAIL() << "expected rejection";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("Lemma 2var hypothesis"), std::string::npos);
    }
}

TEST(EnvelopeL2, SymmetricRootsAndExactExponential) {
    const auto prof = CoefficientProfile::constant(1.0, 0.0);
    const auto e = envelope_L2(1.0, prof, 1.0, 1.0);
    EXPECT_DOUBLE_EQ(e.parameters.at("lambda_plus"), 1.0);
    EXPECT_DOUBLE_EQ(e.parameters.at("lambda_minus"), -1.0);
    EXPECT_DOUBLE_EQ(e.parameters.at("Z0"), 2.0);
    for (double t : {0.0, 0.7, 2.0, 6.0}) EXPECT_NEAR(e(t), std::exp(t), 1e-14 * std::exp(t));
}

TEST(EnvelopeL2, OracleEqualityRunStaysAbove) {
    const double beta = 0.8, gamma = 1.3;
    const auto prof = CoefficientProfile::constant(1.0, beta);
    const auto e = envelope_L2(gamma, prof, 1.0, 0.4);
    EXPECT_NEAR(e.parameters.at("beta"), beta, 1e-15);
    const auto w = oracle_integrate(OdeKind::hyperbolic, prof, OdeRhs::linear(gamma), 1.0, 0.4, 10.0);
    const auto r = verify_envelope(w, e, 1e-6);
    EXPECT_TRUE(r.pass);
    EXPECT_GT(r.samples_checked, 10u);
}

TEST(EnvelopeL2, MissingUpperBoundRejected) {
    auto prof = CoefficientProfile::constant(1.0, 0.0);
    prof.a1.reset();
    EXPECT_THROW(envelope_L2(1.0, prof, 1.0, 1.0), std::invalid_argument);
}

TEST(EnvelopeL3, RateWithoutDamping) {
    EXPECT_NEAR(l3_rate(1.0, 1.0, 0.0), 0.724568837309472, 1e-14);
    const auto e = envelope_L3(1.0, CoefficientProfile::constant(1.0, 0.0), 1.0);
    EXPECT_NEAR(e.parameters.at("mu"), 0.724568837309472, 1e-14);
    EXPECT_DOUBLE_EQ(e(0.0), 0.5);
}

TEST(EnvelopeL3, RateDecreasesWithDampingMass) {
    double prev = l3_rate(1.0, 1.0, 0.0);
    for (double m = 0.5; m <= 40.0; m += 0.5) {
        const double mu = l3_rate(1.0, 1.0, m);
        EXPECT_LT(mu, prev);
        prev = mu;
    }
    EXPECT_LT(prev, 1e-8);
}

TEST(EnvelopeL3, ExponentialWitnessPasses) {
    const auto prof = CoefficientProfile::constant(1.0, 0.0);
    const auto w = oracle_integrate(OdeKind::hyperbolic, prof, OdeRhs::linear(1.0), 1.0, 1.0, 10.0);
    EXPECT_TRUE(verify_envelope(w, envelope_L3(1.0, prof, 1.0), 1e-6).pass);
}

TEST(EnvelopeL3, MissingNormsRejected) {
    auto prof = CoefficientProfile::constant(1.0, 0.5);
    EXPECT_THROW(envelope_L3(1.0, prof, 1.0), std::invalid_argument);
    prof.b_over_a_l1 = 1.0;
    prof.a1.reset();
    EXPECT_THROW(envelope_L3(1.0, prof, 1.0), std::invalid_argument);
}

TEST(EnvelopeL5, Rates) {
    const auto unit = envelope_L5(1.0, CoefficientProfile::constant(1.0, 1.0), 3.0);
    EXPECT_DOUBLE_EQ(*unit.rate, 1.0);
    EXPECT_NEAR(unit(2.0), 3.0 * std::exp(2.0), 1e-12);
    EXPECT_DOUBLE_EQ(*envelope_L5(2.0, CoefficientProfile::constant(1.0, 4.0), 1.0).rate, 0.5);
}

TEST(EnvelopeL5, OscillatingDampingOracle) {
    CoefficientProfile prof;
    prof.b = [](double t) { return 1.0 + 0.5 * std::sin(t); };
    prof.b_sup = 1.5;
    prof.b_positive = true;
    const auto w = oracle_integrate(OdeKind::parabolic, prof, OdeRhs::linear(1.0), 1.0, std::nullopt, 15.0);
    EXPECT_TRUE(verify_envelope(w, envelope_L5(1.0, prof, 1.0), 1e-6).pass);
}

TEST(EnvelopeL5, PositivityRequired) {
    CoefficientProfile prof;
    prof.b_sup = 1.0;
    EXPECT_THROW(envelope_L5(1.0, prof, 1.0), HypothesisViolation);
}

TEST(BlowupL6, ClosedFormTimes) {
    const auto unit = CoefficientProfile::constant(1.0, 1.0);
    EXPECT_DOUBLE_EQ(blowup_time_L6(1.0, 2.0, unit, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(blowup_time_L6(1.0, 3.0, unit, 2.0), 0.125);
    const auto curve = lower_curve_L6(1.0, 2.0, unit, 1.0);
    EXPECT_DOUBLE_EQ(curve.valid_until, 1.0);
    EXPECT_NEAR(curve(0.5), 2.0, 1e-14);
    EXPECT_TRUE(std::isinf(curve(1.0)));
}

TEST(BlowupL6, RejectsSublinearPower) {
    const auto unit = CoefficientProfile::constant(1.0, 1.0);
    EXPECT_THROW(blowup_time_L6(1.0, 1.0, unit, 1.0), std::invalid_argument);
    EXPECT_THROW(blowup_time_L6(1.0, 0.5, unit, 1.0), std::invalid_argument);
}

TEST(Oracle, ExponentialAtFive) {
    const auto w = oracle_integrate(OdeKind::hyperbolic, CoefficientProfile::constant(1.0, 0.0), OdeRhs::linear(1.0),
                                    1.0, 1.0, 5.0);
    EXPECT_EQ(w.status, WitnessStatus::completed);
    EXPECT_DOUBLE_EQ(w.times.back(), 5.0);
    EXPECT_NEAR(w.Y.back() / std::exp(5.0), 1.0, 1e-8);
    EXPECT_NEAR(w.Yprime.back() / std::exp(5.0), 1.0, 1e-8);
}

TEST(Oracle, RiccatiBlowupAtOne) {
    const auto w = oracle_integrate(OdeKind::parabolic, CoefficientProfile::constant(1.0, 1.0),
                                    OdeRhs::power_law(1.0, 2.0), 1.0, std::nullopt, 5.0);
    ASSERT_EQ(w.status, WitnessStatus::blowup);
    EXPECT_NEAR(w.blowup_time, 1.0, 1e-3);
    EXPECT_LE(w.bracket_lo, w.blowup_time);
    EXPECT_GE(w.bracket_hi, w.blowup_time);
    EXPECT_GE(std::abs(w.Y.back()), 1e12);
    EXPECT_TRUE(verify_envelope(w, lower_curve_L6(1.0, 2.0, CoefficientProfile::constant(1.0, 1.0), 1.0), 1e-6).pass);
}

TEST(Oracle, DecayingSourceWithDampingBlowsUp) {
    CoefficientProfile prof = CoefficientProfile::constant(1.0, 1.0);
    const auto w = oracle_integrate(OdeKind::hyperbolic, prof, OdeRhs::power_law(1.0, 2.0, 0.5), 1.0, 1.0, 100.0);
    ASSERT_EQ(w.status, WitnessStatus::blowup);
    EXPECT_TRUE(std::isfinite(w.blowup_time));
    EXPECT_GT(w.blowup_time, 0.0);
    RecordProperty("power_source_blowup_time", std::to_string(w.blowup_time));
}

TEST(Oracle, ParabolicRejectsNonPositiveDamping) {
    CoefficientProfile prof;
    prof.b = [](double t) { return std::cos(t); };
    prof.b_sup = 1.0;
    prof.b_positive = true;
    EXPECT_THROW(oracle_integrate(OdeKind::parabolic, prof, OdeRhs::linear(1.0), 1.0, std::nullopt, 5.0),
                 HypothesisViolation);
    prof.b = [](double) { return 1.0; };
    prof.b_positive = false;
    EXPECT_THROW(oracle_integrate(OdeKind::parabolic, prof, OdeRhs::linear(1.0), 1.0, std::nullopt, 5.0),
                 HypothesisViolation);
}

TEST(Oracle, StallGuard) {
    OracleOptions o;
    o.min_dt = 1.0;
    try {
        oracle_integrate(OdeKind::hyperbolic, CoefficientProfile::constant(1.0, 0.0), OdeRhs::linear(1.0), 1.0, 1.0, 5.0, o);
        FAIL() << "expected stall";
    } catch (const ConvergenceError& e) {
        EXPECT_STREQ(e.what(), "integrator stall");
    }
    EXPECT_THROW(oracle_integrate(OdeKind::hyperbolic, CoefficientProfile::constant(1.0, 0.0), OdeRhs::linear(1.0), 1.0,
                                  std::nullopt, 5.0),
                 std::invalid_argument);
}

TEST(VerifyEnvelope, OwnCurvePassesWithZeroMargin) {
    const auto e = envelope_L5(1.0, CoefficientProfile::constant(1.0, 1.0), 1.0);
    OdeWitness w;
    for (int k = 0; k <= 50; ++k) {
        w.times.push_back(0.1 * k);
        w.Y.push_back(e(0.1 * k));
    }
    const auto r = verify_envelope(w, e, 0.0);
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.min_margin, 0.0);
    EXPECT_EQ(r.samples_checked, 51u);
}

TEST(VerifyEnvelope, SlowWitnessFailsAtFirstViolation) {
    const auto e = envelope_L5(1.0, CoefficientProfile::constant(1.0, 1.0), 1.0);
    OdeWitness w;
    for (int k = 0; k <= 50; ++k) {
        w.times.push_back(0.1 * k);
        w.Y.push_back(std::exp(0.05 * k));
    }
    const auto r = verify_envelope(w, e, 1e-6);
    EXPECT_FALSE(r.pass);
    ASSERT_TRUE(r.first_violation.has_value());
    EXPECT_DOUBLE_EQ(*r.first_violation, 0.1);
    EXPECT_LT(r.min_margin, 0.0);
}

namespace {

void expect_family_sound(EnvelopeKind kind, std::uint64_t seed) {
    const auto r = kaplab::testing::run_envelope_family(kind, seed);
    EXPECT_EQ(r.draws, 100);
    EXPECT_EQ(r.passed, r.draws) << (r.failures.empty() ? "" : r.failures.front());
    EXPECT_EQ(r.shape_failures, 0);
}

}  // namespace

TEST(EnvelopeSoundness, GrowingInertiaFamily) { expect_family_sound(EnvelopeKind::L2var, 2101); }

TEST(EnvelopeSoundness, BoundedInertiaFamily) { expect_family_sound(EnvelopeKind::L2, 2202); }

TEST(EnvelopeSoundness, IntegrableDampingFamily) { expect_family_sound(EnvelopeKind::L3, 2303); }

TEST(EnvelopeSoundness, PositiveDampingLinearFamily) { expect_family_sound(EnvelopeKind::L5, 2404); }

TEST(EnvelopeSoundness, PositiveDampingPowerFamily) { expect_family_sound(EnvelopeKind::L6_lower, 2505); }

TEST(EnvelopeSoundness, DrawsSatisfyDeclaredHypotheses) {
    std::mt19937_64 rng(2121);
    for (int k = 0; k < 30; ++k) {
        const auto g = kaplab::testing::draw_growing_inertia(rng, k);
        EXPECT_TRUE(hyperbolic_threshold(g.c, g.prof, g.Y0, g.Yp0));
        EXPECT_TRUE(certify_profile(g.prof, g.t_end, 2001).ok) << k;
        EXPECT_TRUE(certify_profile(kaplab::testing::draw_bounded_inertia(rng, k).prof, 10.0, 2001).ok) << k;
        EXPECT_TRUE(certify_profile(kaplab::testing::draw_integrable_damping(rng, k).prof, 40.0, 4001).ok) << k;
        EXPECT_TRUE(certify_profile(kaplab::testing::draw_positive_damping(rng, k).prof, 10.0, 2001).ok) << k;
    }
}

TEST(OracleProperty, HyperbolicVelocityStaysPositive) {
    std::mt19937_64 rng(2606);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const auto d = kaplab::testing::draw_bounded_inertia(rng, k);
        // sign and size of b are unrestricted here; only a >= a0 > 0 and c > 0 matter
        CoefficientProfile prof = d.prof;
        const double scale = 4.0 * U(rng) - 1.0;
        const TimeFunction b = prof.b;
        prof.b = [b, scale](double t) { return scale * 3.0 * b(t); };
        const auto wit = oracle_integrate(OdeKind::hyperbolic, prof, OdeRhs::linear(d.c), d.Y0, d.Yp0, 8.0);
        for (std::size_t i = 0; i < wit.Yprime.size(); ++i) ASSERT_GT(wit.Yprime[i], 0.0) << "draw " << k << " t=" << wit.times[i];
    }
}

TEST(OracleProperty, RatesNeverIncreaseWithDamping) {
    std::mt19937_64 rng(2707);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const double c = 0.1 + 3.0 * U(rng);
        const double a = 0.5 + 2.0 * U(rng);
        const double b1 = 3.0 * U(rng);
        const double b2 = b1 + 3.0 * U(rng);
        const double lp1 = envelope_L2(c, CoefficientProfile::constant(a, b1), 1.0, 1.0).parameters.at("lambda_plus");
        const double lp2 = envelope_L2(c, CoefficientProfile::constant(a, b2), 1.0, 1.0).parameters.at("lambda_plus");
        EXPECT_LE(lp2, lp1);
        if (b1 > 0.0) {
            EXPECT_LE(*envelope_L5(c, CoefficientProfile::constant(a, b2), 1.0).rate,
                      *envelope_L5(c, CoefficientProfile::constant(a, b1), 1.0).rate);
        }
        const double m1 = 5.0 * U(rng);
        EXPECT_LE(l3_rate(c, a, m1 + 5.0 * U(rng)), l3_rate(c, a, m1));
    }
}

TEST(OracleProperty, BlowupTimeStableUnderTighterTolerance) {
    struct Case {
        OdeKind kind;
        CoefficientProfile prof;
        OdeRhs rhs;
        std::optional<double> Yp0;
    };
    CoefficientProfile osc;
    osc.b = [](double t) { return 1.0 + 0.5 * std::sin(3.0 * t); };
    osc.b_sup = 1.5;
    osc.b_positive = true;
    const std::vector<Case> cases = {
        {OdeKind::parabolic, CoefficientProfile::constant(1.0, 1.0), OdeRhs::power_law(1.0, 2.0), std::nullopt},
        {OdeKind::parabolic, osc, OdeRhs::power_law(2.0, 3.0), std::nullopt},
        {OdeKind::hyperbolic, CoefficientProfile::constant(1.0, 1.0), OdeRhs::power_law(1.0, 2.0, 0.5), 1.0},
        {OdeKind::hyperbolic, CoefficientProfile::constant(2.0, 0.0), OdeRhs::power_law(1.0, 3.0), 0.5},
    };
    for (const auto& cs : cases) {
        OracleOptions coarse, fine;
        fine.rel_tol = 0.5 * coarse.rel_tol;
        const auto w1 = oracle_integrate(cs.kind, cs.prof, cs.rhs, 1.0, cs.Yp0, 100.0, coarse);
        const auto w2 = oracle_integrate(cs.kind, cs.prof, cs.rhs, 1.0, cs.Yp0, 100.0, fine);
        ASSERT_EQ(w1.status, WitnessStatus::blowup);
        ASSERT_EQ(w2.status, WitnessStatus::blowup);
        EXPECT_LT(std::abs(w1.blowup_time - w2.blowup_time) / w2.blowup_time, 1e-4);
    }
}
