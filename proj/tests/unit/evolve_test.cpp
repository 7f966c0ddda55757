#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "kaplab/evolve.hpp"

using namespace kaplab;

namespace {

const double pi = std::numbers::pi;

Nonlinearity linear_source(double k) {
    return Nonlinearity::custom([k](double, double u) { return k * u; }, [k](double, double) { return k; },
                                Convexity::convex);
}

Scenario mode_scenario(std::size_t nodes, double a, double b, OdeKind kind, const Nonlinearity& f = linear_source(0.0)) {
    Scenario s;
    s.grid = build_interval_grid(0.0, pi, nodes);
    s.op = assemble_dirichlet_laplacian(s.grid);
    s.steady = zero_steady(s.grid, f);
    s.profile = CoefficientProfile::constant(a, b);
    s.kind = kind;
    return s;
}

std::vector<double> sines(const Grid& g, double k, double amp = 1.0) {
    std::vector<double> u;
    for (double x : g.interior_nodes()) u.push_back(amp * std::sin(k * x));
    return u;
}

double l2_error(const Grid& g, const std::vector<double>& u, const std::vector<double>& exact) {
    std::vector<double> d(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) d[i] = u[i] - exact[i];
    return l2_norm(g, d);
}

double hyperbolic_mode_error(std::size_t nodes, double a, double t_end) {
    const Scenario s = mode_scenario(nodes, a, 0.0, OdeKind::hyperbolic);
    auto u = sines(s.grid, 1.0);
    std::vector<double> ut(u.size(), 0.0);
    const int steps = static_cast<int>(std::ceil(t_end / (0.5 * s.grid.h)));
    const double dt = t_end / steps;
    for (int k = 0; k < steps; ++k) step_hyperbolic(u, ut, k * dt, dt, s);
    return l2_error(s.grid, u, sines(s.grid, 1.0, std::cos(t_end / std::sqrt(a))));
}

double parabolic_decay(std::size_t nodes, double b, double t_end) {
    const Scenario s = mode_scenario(nodes, 1.0, b, OdeKind::parabolic);
    auto u = sines(s.grid, 1.0);
    const int steps = static_cast<int>(std::ceil(t_end / (0.25 * b * s.grid.h * s.grid.h)));
    const double dt = t_end / steps;
    for (int k = 0; k < steps; ++k) step_parabolic(u, k * dt, dt, s);
    return sup_norm(u);
}

// u_tt + b u_t - u_xx = u^2 about v = 0 with V = -2: sigma^2 = 1.
Scenario unstable_hyperbolic(double epsilon, double b = 0.5) {
    Scenario s;
    s.grid = build_interval_grid(0.0, pi, 201);
    s.op = add_potential(assemble_dirichlet_laplacian(s.grid), PotentialField::constant(s.grid.interior_count(), -2.0));
    s.steady = zero_steady(s.grid, Nonlinearity::quadratic());
    s.profile = CoefficientProfile::constant(1.0, b);
    s.kind = OdeKind::hyperbolic;
    s.epsilon = epsilon;
    s.t_max = 30.0;
    s.cadence = 0.01;
    s.keep_snapshots = false;
    return s;
}

EigenPair linearized_pair(const Scenario& s) {
    return principal_eigenpair(assemble_linearized(s.op, s.steady));
}

}  // namespace

TEST(StepHyperbolic, StandingWave) {
    EXPECT_LE(hyperbolic_mode_error(401, 1.0, 1.0), 1e-4);
}

TEST(StepHyperbolic, HeavierInertiaHalvesFrequency) {
    EXPECT_LE(hyperbolic_mode_error(401, 4.0, 2.0), 1e-4);
    // the same data under a = 1 is far from cos(t/2) sin x
    const Scenario s = mode_scenario(401, 1.0, 0.0, OdeKind::hyperbolic);
    auto u = sines(s.grid, 1.0);
    std::vector<double> ut(u.size(), 0.0);
    for (int k = 0; k < 400; ++k) step_hyperbolic(u, ut, k * 0.005, 0.005, s);
    EXPECT_GT(l2_error(s.grid, u, sines(s.grid, 1.0, std::cos(1.0))), 0.1);
}

TEST(StepHyperbolic, SecondOrderConvergence) {
    const double e1 = hyperbolic_mode_error(101, 1.0, 1.0);
    const double e2 = hyperbolic_mode_error(201, 1.0, 1.0);
    EXPECT_NEAR(e1 / e2, 4.0, 0.4);
}

TEST(StepHyperbolic, ZeroStateStaysZero) {
    const Scenario s = mode_scenario(101, 1.0, 0.3, OdeKind::hyperbolic, Nonlinearity::quadratic());
    std::vector<double> u(s.grid.interior_count(), 0.0), ut(u.size(), 0.0);
    for (int k = 0; k < 100; ++k) step_hyperbolic(u, ut, k * 0.01, 0.01, s);
    for (std::size_t i = 0; i < u.size(); ++i) {
        EXPECT_EQ(u[i], 0.0);
        EXPECT_EQ(ut[i], 0.0);
    }
}

TEST(StepParabolic, HeatModeDecay) {
    EXPECT_NEAR(parabolic_decay(201, 1.0, 1.0) / std::exp(-1.0), 1.0, 1e-3);
}

TEST(StepParabolic, DoubledDampingDoublesTimeConstant) {
    EXPECT_NEAR(parabolic_decay(201, 2.0, 1.0) / std::exp(-0.5), 1.0, 1e-3);
}

TEST(StepParabolic, ZeroStateStaysZero) {
    const Scenario s = mode_scenario(51, 1.0, 1.0, OdeKind::parabolic, Nonlinearity::quadratic());
    std::vector<double> u(s.grid.interior_count(), 0.0);
    for (int k = 0; k < 100; ++k) step_parabolic(u, k * 1e-4, 1e-4, s);
    for (double x : u) EXPECT_EQ(x, 0.0);
}

TEST(StepParabolic, NonPositiveDampingAborts) {
    Scenario s = mode_scenario(51, 1.0, 1.0, OdeKind::parabolic);
    s.profile.b = [](double t) { return 1.0 - t; };
    std::vector<double> u = sines(s.grid, 1.0);
    EXPECT_NO_THROW(step_parabolic(u, 0.0, 1e-4, s));
    try {
        step_parabolic(u, 0.99995, 1e-4, s);
        FAIL() << "expected violation";
    } catch (const HypothesisViolation& e) {
        EXPECT_NE(std::string(e.what()).find("parabolicity violated"), std::string::npos);
    }
}

TEST(DetectBlowup, Verdicts) {
    EXPECT_EQ(detect_blowup(std::vector<double>{0.0, 1e9, 1.0}), BlowupVerdict::blowup);
    EXPECT_EQ(detect_blowup(std::vector<double>{-1e9}), BlowupVerdict::blowup);
    EXPECT_EQ(detect_blowup(std::vector<double>{0.0, std::nan(""), 1.0}), BlowupVerdict::nonfinite);
    EXPECT_EQ(detect_blowup(std::vector<double>{std::numeric_limits<double>::infinity()}), BlowupVerdict::nonfinite);
    EXPECT_STREQ(to_string(BlowupVerdict::nonfinite), "nonfinite state");
    std::vector<double> osc;
    for (int k = 0; k < 100; ++k) osc.push_back(std::sin(0.3 * k) * 1e3);
    EXPECT_EQ(detect_blowup(osc), BlowupVerdict::none);
}

TEST(BuildPerturbation, ProjectionEqualsEpsilon) {
    Scenario s = unstable_hyperbolic(2.5e-3);
    s.delta = 4e-3;
    const auto eig = linearized_pair(s);
    const auto init = build_perturbation(s, eig, true);
    EXPECT_NEAR(init.W0, 2.5e-3, 1e-15);
    EXPECT_NEAR(init.Wp0, 4e-3, 1e-15);
    for (std::size_t i = 0; i < init.u.size(); ++i) EXPECT_GE(init.u[i], 0.0);
}

TEST(BuildPerturbation, ConcaveModeFlipsSigns) {
    Scenario s = unstable_hyperbolic(1e-3);
    s.delta = 1e-3;
    s.concave_mode = true;
    const auto eig = linearized_pair(s);
    const auto init = build_perturbation(s, eig);
    EXPECT_NEAR(init.W0, 1e-3, 1e-15);
    EXPECT_NEAR(init.Wp0, 1e-3, 1e-15);
    EXPECT_NEAR(inner(s.grid, eig.phi1, init.u), -1e-3, 1e-15);
    for (double x : init.u) EXPECT_LE(x, 0.0);
}

TEST(BuildPerturbation, RejectsZeroAmplitudeForCertification) {
    Scenario s = unstable_hyperbolic(0.0);
    const auto eig = linearized_pair(s);
    EXPECT_THROW(build_perturbation(s, eig, true), std::invalid_argument);
    EXPECT_NO_THROW(build_perturbation(s, eig, false));
}

TEST(BuildPerturbation, RejectsMixedSignEigenfunction) {
    Scenario s = unstable_hyperbolic(1e-3);
    auto eig = linearized_pair(s);
    eig.verdict = EigenVerdict::mixed_sign;
    EXPECT_THROW(build_perturbation(s, eig), HypothesisViolation);
}

TEST(RunScenario, ZeroPerturbationOfZeroStateStaysZero) {
    Scenario s = unstable_hyperbolic(0.0);
    s.t_max = 5.0;
    const auto rec = run_scenario(s, linearized_pair(s));
    EXPECT_EQ(rec.status, RunStatus::completed);
    for (const auto& smp : rec.samples) {
        EXPECT_EQ(smp.l2_norm, 0.0);
        EXPECT_EQ(smp.W, 0.0);
    }
}

TEST(RunScenario, NonzeroSteadyStatePersists) {
    // -v'' = v with v = sin x; the discrete residual is O(h^2)
    Scenario s = mode_scenario(201, 1.0, 0.0, OdeKind::hyperbolic, linear_source(1.0));
    std::vector<double> v;
    for (double x : s.grid.nodes) v.push_back(std::sin(x));
    s.steady = tabulated_steady(s.grid, v, linear_source(1.0));
    const double residual = validate_steady(s.steady, s.op);
    ASSERT_GT(residual, 0.0);
    s.epsilon = 0.0;
    s.t_max = 5.0;
    s.cadence = 0.1;
    const auto rec = run_scenario(s, principal_eigenpair(assemble_linearized(s.op, s.steady)));
    ASSERT_EQ(rec.status, RunStatus::completed);
    for (const auto& smp : rec.samples) EXPECT_LE(smp.l2_norm, 10.0 * residual * (1.0 + smp.t)) << smp.t;
}

TEST(RunScenario, LinearizedModeGrowsLikeCosh) {
    // f = 2u about v = 0: A - f_u has sigma^2 = 2 - lambda_h
    Scenario s = mode_scenario(201, 1.0, 0.0, OdeKind::hyperbolic, linear_source(2.0));
    s.epsilon = 1e-3;
    s.t_max = 2.0;
    s.cadence = 0.5;
    const auto eig = principal_eigenpair(assemble_linearized(s.op, s.steady));
    const double sigma = std::sqrt(eig.sigma_sq);
    EXPECT_NEAR(eig.sigma_sq, 1.0, 1e-4);
    const auto rec = run_scenario(s, eig);
    for (const auto& smp : rec.samples) {
        EXPECT_NEAR(smp.W / (1e-3 * std::cosh(sigma * smp.t)), 1.0, 1e-6) << smp.t;
    }
}

TEST(RunScenario, ParabolicModeDecay) {
    for (double b : {1.0, 2.0}) {
        Scenario s = mode_scenario(101, 1.0, b, OdeKind::parabolic);
        s.epsilon = 1.0;
        s.t_max = 1.0;
        s.cadence = 0.25;
        const auto eig = principal_eigenpair(s.op);
        const auto rec = run_scenario(s, eig);
        ASSERT_EQ(rec.status, RunStatus::completed);
        EXPECT_NEAR(rec.samples.back().t, 1.0, 1e-12);
        EXPECT_NEAR(rec.samples.back().W, std::exp(-eig.lambda1() / b), 1e-6);
    }
}

TEST(RunScenario, ParabolicRequiresDeclaredPositivity) {
    Scenario s = mode_scenario(51, 1.0, 1.0, OdeKind::parabolic);
    s.profile.b_positive = false;
    EXPECT_THROW(run_scenario(s, principal_eigenpair(s.op)), HypothesisViolation);
}

TEST(RunScenario, UnstableHyperbolicBlowsUpWithMonotoneFunctional) {
    Scenario s = unstable_hyperbolic(1e-3);
    s.delta = 1.05 * threshold_slope(1.0, s.profile) * s.epsilon;
    const auto eig = linearized_pair(s);
    ASSERT_NEAR(eig.sigma_sq, 1.0, 1e-3);
    ASSERT_TRUE(hyperbolic_threshold(eig.sigma_sq, s.profile, s.epsilon, s.delta));
    const auto rec = run_scenario(s, eig);
    ASSERT_EQ(rec.status, RunStatus::blowup);
    EXPECT_TRUE(std::isfinite(rec.blowup_time));
    EXPECT_GE(rec.samples.back().sup_norm, 1e8);
    EXPECT_GE(rec.blowup_time, rec.bracket_start());
    EXPECT_LE(rec.blowup_time, rec.samples.back().t);

    const double phi_l2 = l2_norm(s.grid, eig.phi1);
    const double phi_l1 = l1_norm(s.grid, eig.phi1);
    EXPECT_NEAR(phi_l2, 1.0, 1e-12);
    const double W0 = rec.samples.front().W;
    for (std::size_t i = 0; i < rec.samples.size(); ++i) {
        const auto& smp = rec.samples[i];
        EXPECT_GE(smp.l2_norm, 0.0);
        EXPECT_GE(smp.l2_norm * phi_l2, std::abs(smp.W) * (1.0 - 1e-12)) << smp.t;
        EXPECT_GE(smp.sup_norm * phi_l1, std::abs(smp.W) * (1.0 - 1e-12)) << smp.t;
        if (i + 1 < rec.samples.size()) {
            EXPECT_GT(smp.Wprime, 0.0) << smp.t;
            if (i > 0) {
                EXPECT_GT(smp.W, W0) << smp.t;
            }
        }
    }
}

TEST(RunScenario, ParabolicNormChainAndGrowth) {
    Scenario s;
    s.grid = build_interval_grid(0.0, pi, 101);
    s.op = add_potential(assemble_dirichlet_laplacian(s.grid), PotentialField::constant(s.grid.interior_count(), -2.0));
    s.steady = zero_steady(s.grid, Nonlinearity::quadratic());
    s.profile.b = [](double t) { return 1.0 + 0.5 * std::sin(t); };
    s.profile.b_sup = 1.5;
    s.profile.b_positive = true;
    s.kind = OdeKind::parabolic;
    s.epsilon = 1e-2;
    s.t_max = 20.0;
    s.cadence = 0.05;
    s.keep_snapshots = false;
    const auto eig = linearized_pair(s);
    const auto rec = run_scenario(s, eig);
    ASSERT_EQ(rec.status, RunStatus::blowup);
    const double phi_l1 = l1_norm(s.grid, eig.phi1);
    const double W0 = rec.samples.front().W;
    for (std::size_t i = 1; i < rec.samples.size(); ++i) {
        const auto& smp = rec.samples[i];
        EXPECT_GE(smp.sup_norm * phi_l1, std::abs(smp.W) * (1.0 - 1e-12)) << smp.t;
        EXPECT_GT(smp.W, W0) << smp.t;
    }
}

TEST(RunScenario, LargerAmplitudeNeverBlowsUpLater) {
    double previous = std::numeric_limits<double>::infinity();
    for (double eps : {5e-4, 1e-3, 2e-3, 4e-3, 8e-3}) {
        Scenario s = unstable_hyperbolic(eps);
        s.delta = 1.05 * threshold_slope(1.0, s.profile) * eps;
        const auto rec = run_scenario(s, linearized_pair(s));
        ASSERT_EQ(rec.status, RunStatus::blowup) << eps;
        EXPECT_LE(rec.blowup_time, previous) << eps;
        previous = rec.blowup_time;
    }
}

TEST(RunScenario, SnapshotsMatchSamples) {
    Scenario s = unstable_hyperbolic(1e-3);
    s.t_max = 3.0;
    s.keep_snapshots = true;
    s.delta = 1e-3;
    const auto eig = linearized_pair(s);
    const auto rec = run_scenario(s, eig);
    const auto ks = kaplan_series(s, rec, eig);
    ASSERT_EQ(ks.W.size(), rec.samples.size());
    for (std::size_t i = 0; i < ks.W.size(); ++i) {
        EXPECT_EQ(ks.W[i], rec.samples[i].W);
        EXPECT_EQ(ks.Wprime[i], rec.samples[i].Wprime);
    }
}
