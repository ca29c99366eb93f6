#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "otr/core.hpp"

using namespace otr;

namespace {

ThetaVector table(double t00, double t10, double t01, double t11) { return {t00, t10, t01, t11}; }

}  // namespace

TEST(ThetaFromMarginals, IndependenceAtUnitOddsRatio) {
    const auto th = theta_from_marginals({0.5, 0.5}, 1.0);
    EXPECT_DOUBLE_EQ(th.theta11, 0.25);
    EXPECT_DOUBLE_EQ(th.theta10, 0.25);
    EXPECT_DOUBLE_EQ(th.theta01, 0.25);
    EXPECT_DOUBLE_EQ(th.theta00, 0.25);

    const auto skew = theta_from_marginals({0.3, 0.7}, 1.0);
    EXPECT_NEAR(skew.theta11, 0.21, 1e-15);
    EXPECT_NEAR(skew.theta10, 0.09, 1e-15);
    EXPECT_NEAR(skew.theta01, 0.49, 1e-15);
    EXPECT_NEAR(skew.theta00, 0.21, 1e-15);
}

TEST(ThetaFromMarginals, OddsRatioFiveMatchesBisection) {
    const double oracle_t11 = oracle::theta11_bisection(0.5, 0.5, 5.0);
    // Frozen from the bisection oracle; closed form 0.5*sqrt(5)/(1+sqrt(5)).
    EXPECT_NEAR(oracle_t11, 0.34549150281252627, 1e-12);
    const auto th = theta_from_marginals({0.5, 0.5}, 5.0);
    EXPECT_NEAR(th.theta11, 0.34549150281252627, 1e-12);
    EXPECT_NEAR(th.theta10, 0.15450849718747373, 1e-12);
    EXPECT_NEAR(th.theta01, 0.15450849718747373, 1e-12);
    EXPECT_NEAR(th.theta00, 0.34549150281252627, 1e-12);
}

TEST(ThetaFromMarginals, RandomTriplesAgreeWithBisectionAndRoundTrip) {
    std::mt19937_64 eng(20240611);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    std::uniform_real_distribution<double> logphi(-4.0, 4.0);
    for (int i = 0; i < 2000; ++i) {
        const double p0 = u(eng);
        const double p1 = u(eng);
        const double phi = std::exp(logphi(eng));
        const auto th = theta_from_marginals({p0, p1}, phi);
        ASSERT_NEAR(th.theta11, oracle::theta11_bisection(p0, p1, phi), 1e-10) << p0 << ' ' << p1 << ' ' << phi;
        ASSERT_TRUE(th.valid(1e-12));
        ASSERT_NEAR(th.theta1plus(), p0, 1e-14);
        ASSERT_NEAR(th.thetaPlus1(), p1, 1e-14);
        ASSERT_NEAR(odds_ratio(th) / phi, 1.0, 1e-8);
        const auto [lo, hi] = frechet_bounds({p0, p1});
        ASSERT_GE(th.theta11, lo);
        ASSERT_LE(th.theta11, hi);
    }
}

TEST(ThetaFromMarginals, MonotoneInOddsRatio) {
    double prev = -1.0;
    for (double lphi = -6.0; lphi <= 6.0; lphi += 0.25) {
        const double t = theta_from_marginals({0.4, 0.65}, std::exp(lphi)).theta11;
        EXPECT_GT(t, prev);
        prev = t;
    }
}

TEST(ThetaFromMarginals, NearUnitOddsRatioIsContinuous) {
    const MarginalPair m{0.37, 0.81};
    const double at_one = theta_from_marginals(m, 1.0).theta11;
    EXPECT_NEAR(theta_from_marginals(m, 1.0 + 2e-8).theta11, at_one, 1e-8);
    EXPECT_NEAR(theta_from_marginals(m, 1.0 - 2e-8).theta11, at_one, 1e-8);
}

TEST(ThetaFromMarginals, ExtremeOddsRatiosApproachFrechetBounds) {
    const MarginalPair m{0.3, 0.6};
    EXPECT_NEAR(theta_from_marginals(m, 1e12).theta11, 0.3, 1e-6);
    EXPECT_NEAR(theta_from_marginals(m, 1e-12).theta11, 0.0, 1e-6);
}

TEST(ThetaFromMarginals, BoundaryMarginalsAreClamped) {
    const auto th = theta_from_marginals({0.0, 1.0}, 2.0);
    EXPECT_TRUE(th.valid(1e-9));
    EXPECT_NEAR(th.theta1plus(), kMarginalClamp, 1e-15);
    EXPECT_NEAR(th.thetaPlus1(), 1.0 - kMarginalClamp, 1e-15);
}

TEST(ThetaFromMarginals, RejectsInvalidInputs) {
    try {
        theta_from_marginals({1.2, 0.5}, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_marginal);
    }
    EXPECT_THROW(theta_from_marginals({-0.1, 0.5}, 1.0), Error);
    EXPECT_THROW(theta_from_marginals({std::nan(""), 0.5}, 1.0), Error);
    try {
        theta_from_marginals({0.5, 0.5}, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
    }
    EXPECT_THROW(theta_from_marginals({0.5, 0.5}, -1.0), Error);
}

TEST(OddsRatio, Examples) {
    EXPECT_DOUBLE_EQ(odds_ratio(table(0.25, 0.25, 0.25, 0.25)), 1.0);
    EXPECT_NEAR(odds_ratio(table(0.4, 0.1, 0.1, 0.4)), 16.0, 1e-12);
    EXPECT_NEAR(odds_ratio(theta_from_marginals({0.5, 0.5}, 5.0)), 5.0, 1e-10);
    try {
        odds_ratio(table(0.5, 0.0, 0.25, 0.25));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::zero_cell);
    }
}

TEST(LossSpec, Presets) {
    const auto max = presets::otr_max();
    EXPECT_EQ(max, conditional_loss_spec(0, 1, 1, 0));
    EXPECT_EQ(max(0, 1, Decision::zero), 1.0);
    EXPECT_EQ(max(1, 0, Decision::one), 1.0);
    EXPECT_EQ(max(0, 0, Decision::one), 0.0);
    const auto q25 = presets::otr_25();
    EXPECT_EQ(q25(0, 0, Decision::one), 0.25);
    EXPECT_EQ(q25(0, 1, Decision::zero), 1.0);
    EXPECT_EQ(q25(1, 0, Decision::one), 1.25);
    EXPECT_EQ(q25(1, 1, Decision::one), 0.25);
    const auto q50 = presets::otr_50();
    EXPECT_EQ(q50(0, 0, Decision::one), 0.5);
    EXPECT_EQ(q50(1, 0, Decision::one), 1.5);
    EXPECT_EQ(q50(1, 1, Decision::one), 0.5);
    // Conditional specs leave the other four coefficients at zero.
    for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) {
            if (!(j == 0 && k == 1)) {
                EXPECT_EQ(q25(j, k, Decision::zero), 0.0);
            }
        }
    }
    EXPECT_EQ(q25(0, 1, Decision::one), 0.0);
}

TEST(LossSpec, RejectsNegativeCoefficients) {
    try {
        conditional_loss_spec(-0.1, 1, 1, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::negative_coefficient);
    }
    EXPECT_THROW(marginal_loss_spec(1.0, -0.5), Error);
    EXPECT_THROW(LossSpec({0, 0, 0, 0, 0, 0, 0, std::nan("")}), Error);
}

TEST(LossSpec, MarginalSpecStrata) {
    const auto failure_only = marginal_loss_spec(1.0, 0.0);
    // Loss is 1{Y(a) = 0}.
    for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) {
            EXPECT_EQ(failure_only(j, k, Decision::zero), j == 0 ? 1.0 : 0.0);
            EXPECT_EQ(failure_only(j, k, Decision::one), k == 0 ? 1.0 : 0.0);
        }
    }
    const auto burden_only = marginal_loss_spec(0.0, 1.0);
    for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) {
            EXPECT_EQ(burden_only(j, k, Decision::zero), 0.0);
            EXPECT_EQ(burden_only(j, k, Decision::one), 1.0);
        }
    }
    EXPECT_DOUBLE_EQ(marginal_loss_spec(1.0, 0.3)(0, 1, Decision::one), 0.3);
}

TEST(ExpectedLoss, Examples) {
    const auto uniform = table(0.25, 0.25, 0.25, 0.25);
    EXPECT_DOUBLE_EQ(expected_loss(Decision::one, uniform, presets::otr_max()), 0.25);
    EXPECT_DOUBLE_EQ(expected_loss(Decision::zero, uniform, presets::otr_max()), 0.25);
    EXPECT_NEAR(expected_loss(Decision::one, uniform, marginal_loss_spec(1.0, 0.3)), 0.8, 1e-15);
    EXPECT_NEAR(expected_loss(Decision::one, uniform, presets::otr_25()), 0.4375, 1e-15);
}

TEST(ExpectedLoss, MatchesStratumSumProperty) {
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        std::array<double, 8> c{};
        for (auto& v : c) v = 2.0 * u(eng);
        const LossSpec spec(c);
        std::array<double, 4> w{u(eng), u(eng), u(eng), u(eng)};
        const double s = w[0] + w[1] + w[2] + w[3];
        const auto th = table(w[0] / s, w[1] / s, w[2] / s, w[3] / s);
        for (int a = 0; a < 2; ++a) {
            const double ref = oracle::stratum_loss(c, th.theta00, th.theta10, th.theta01, th.theta11, a);
            EXPECT_NEAR(expected_loss(decision_from(a == 1), th, spec), ref, 1e-14);
            EXPECT_GE(expected_loss(decision_from(a == 1), th, spec), 0.0);
        }
    }
}

TEST(LossContrast, Identities) {
    std::mt19937_64 eng(11);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    std::uniform_real_distribution<double> pen(0.0, 2.0);
    for (int i = 0; i < 500; ++i) {
        const MarginalPair m{u(eng), u(eng)};
        const double phi = std::exp(std::uniform_real_distribution<double>(-3, 3)(eng));
        const auto th = theta_from_marginals(m, phi);
        EXPECT_NEAR(loss_contrast(th, presets::otr_max()), th.theta1plus() - th.thetaPlus1(), 1e-14);
        EXPECT_NEAR(outcome_contrast(th), -loss_contrast(th, presets::otr_max()), 1e-14);
        const double ld = pen(eng);
        const double lt = pen(eng);
        EXPECT_NEAR(loss_contrast(th, marginal_loss_spec(ld, lt)), ld * (m.theta1plus - m.thetaPlus1) + lt, 1e-13);
    }
    EXPECT_DOUBLE_EQ(loss_contrast(table(0.25, 0.25, 0.25, 0.25), presets::otr_max()), 0.0);
}

TEST(ExpectedOutcome, Examples) {
    const auto th = table(0.21, 0.09, 0.49, 0.21);
    EXPECT_NEAR(expected_outcome(Decision::zero, th), 0.30, 1e-15);
    EXPECT_NEAR(expected_outcome(Decision::one, th), 0.70, 1e-15);
    EXPECT_DOUBLE_EQ(expected_outcome(Decision::one, table(0.25, 0.25, 0.25, 0.25)), 0.5);
    EXPECT_NEAR(outcome_contrast(th), 0.40, 1e-15);
    EXPECT_DOUBLE_EQ(outcome_contrast(table(0.25, 0.25, 0.25, 0.25)), 0.0);
}

TEST(MarginalCoordinates, AgreeWithCellForms) {
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    const std::array<LossSpec, 5> specs{presets::otr_max(), presets::otr_25(), presets::otr_50(),
                                        marginal_loss_spec(1.0, 0.2), LossSpec({0.3, 0.1, 0.9, 0.2, 0.4, 1.1, 0.0, 0.7})};
    for (int i = 0; i < 300; ++i) {
        const MarginalPair m{u(eng), u(eng)};
        const double phi = std::exp(std::uniform_real_distribution<double>(-3, 3)(eng));
        const auto th = theta_from_marginals(m, phi);
        for (const auto& spec : specs) {
            for (Decision a : {Decision::zero, Decision::one}) {
                EXPECT_NEAR(expected_loss(a, m, phi, spec), expected_loss(a, th, spec), 1e-14);
                EXPECT_NEAR(expected_outcome(a, m), expected_outcome(a, th), 1e-15);
            }
            EXPECT_NEAR(loss_contrast(m, phi, spec), loss_contrast(th, spec), 1e-14);
        }
    }
}

TEST(MarginalCoordinates, AssociationFreeQuantitiesAreBitwisePhiInvariant) {
    // OTRmax has equal association weights in both arms: its contrast is free
    // of phi while each arm's expected loss is not.
    EXPECT_TRUE(association_sensitive(presets::otr_max()));
    EXPECT_EQ(association_weight(Decision::zero, presets::otr_max()),
              association_weight(Decision::one, presets::otr_max()));
    EXPECT_FALSE(association_sensitive(marginal_loss_spec(0.7, 0.15)));
    EXPECT_TRUE(association_sensitive(presets::otr_25()));
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const LossSpec marginal = marginal_loss_spec(0.7, 0.15);
    for (int i = 0; i < 200; ++i) {
        const MarginalPair m{u(eng), u(eng)};
        for (const auto& spec : {presets::otr_max(), marginal}) {
            const double base = loss_contrast(m, 1.0, spec);
            for (double phi : {std::exp(-3.0), 0.5, 5.0, std::exp(3.0)}) EXPECT_EQ(loss_contrast(m, phi, spec), base);
        }
        for (Decision a : {Decision::zero, Decision::one}) {
            const double base = expected_loss(a, m, 1.0, marginal);
            for (double phi : {std::exp(-3.0), 0.5, 5.0, std::exp(3.0)}) EXPECT_EQ(expected_loss(a, m, phi, marginal), base);
        }
    }
    const MarginalPair m{0.4, 0.7};
    EXPECT_NE(expected_loss(Decision::one, m, 5.0, presets::otr_max()),
              expected_loss(Decision::one, m, 1.0, presets::otr_max()));
}

TEST(MarginalCoordinates, ConditionalPresetDependsOnAssociation) {
    const MarginalPair m{0.5, 0.5};
    EXPECT_NE(loss_contrast(m, 1.0, presets::otr_25()), loss_contrast(m, 5.0, presets::otr_25()));
}
