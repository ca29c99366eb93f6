#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "otr/simul.hpp"

using namespace otr;
using namespace otr::simul;

namespace {

Scenario quick(Heterogeneity h, int replications = 4) {
    Scenario s;
    s.heterogeneity = h;
    s.replications = replications;
    auto& m = mcmc_of(s.sampler);
    m.draws = 1000;
    m.burn_in = 300;
    return s;
}

}  // namespace

TEST(Truth, Marginals) {
    for (auto h : {Heterogeneity::strong, Heterogeneity::mild, Heterogeneity::none}) {
        const auto m = true_marginals(0.0, h);
        EXPECT_NEAR(m.theta1plus, stats::expit(0.457), 1e-15);
        EXPECT_NEAR(m.thetaPlus1, stats::expit(0.457), 1e-15);
    }
    for (double x = -1.0; x <= 1.0; x += 0.05) {
        const auto m = true_marginals(x, Heterogeneity::none);
        EXPECT_EQ(m.theta1plus, m.thetaPlus1);
        // Strong heterogeneity mirrors the treated curve: control(x) = treated(-x).
        EXPECT_NEAR(true_marginals(x, Heterogeneity::strong).theta1plus,
                    cubic_logit(kTreatedCoefficients, -x), 1e-14);
    }
    EXPECT_THROW(true_marginals(1.5, Heterogeneity::strong), Error);
    EXPECT_THROW(heterogeneity_from("weak"), Error);
    EXPECT_EQ(heterogeneity_from(to_string(Heterogeneity::mild)), Heterogeneity::mild);
}

TEST(Truth, StrongBoundaryIsAtZero) {
    const auto roots = decision_boundaries(Heterogeneity::strong, presets::otr_max(), 1.0);
    ASSERT_EQ(roots.size(), 1u);
    EXPECT_NEAR(roots[0], 0.0, 1e-9);
    // Treated is better to the right of the boundary.
    EXPECT_EQ(subject_truth(0.5, Heterogeneity::strong, presets::otr_max(), 1.0).optimal, Decision::one);
    EXPECT_EQ(subject_truth(-0.5, Heterogeneity::strong, presets::otr_max(), 1.0).optimal, Decision::zero);
}

TEST(Truth, MildBoundariesAreRootsOfTheContrast) {
    const auto roots = decision_boundaries(Heterogeneity::mild, presets::otr_max(), 1.0);
    ASSERT_FALSE(roots.empty());
    for (double r : roots) {
        const auto m = true_marginals(r, Heterogeneity::mild);
        EXPECT_NEAR(m.theta1plus - m.thetaPlus1, 0.0, 1e-9) << r;
        // Sign flips across each root.
        const double lo = loss_contrast(true_marginals(std::max(-1.0, r - 1e-4), Heterogeneity::mild), 1.0, presets::otr_max());
        const double hi = loss_contrast(true_marginals(std::min(1.0, r + 1e-4), Heterogeneity::mild), 1.0, presets::otr_max());
        EXPECT_LT(lo * hi, 0.0);
    }
    EXPECT_TRUE(decision_boundaries(Heterogeneity::none, presets::otr_25(), 5.0).empty());
}

TEST(Truth, NoHeterogeneityBurdenPenaltyNeverTreats) {
    for (double x = -1.0; x <= 1.0; x += 0.01) {
        EXPECT_EQ(subject_truth(x, Heterogeneity::none, presets::otr_25(), 5.0).optimal, Decision::zero);
        // OTRmax with equal marginals: contrast is exactly zero, tie goes to 0.
        EXPECT_EQ(subject_truth(x, Heterogeneity::none, presets::otr_max(), 1.0).optimal, Decision::zero);
    }
}

TEST(Assignment, Examples) {
    EXPECT_DOUBLE_EQ(assignment_probability(0.3, 0.3, 0.6, 2.0), 0.5);
    EXPECT_DOUBLE_EQ(assignment_probability(0.9, 0.1, 0.5, 0.0), 0.5);
    EXPECT_NEAR(assignment_probability(0.6, 0.1, 0.5, std::log(3.0)), 0.75, 1e-15);
    EXPECT_NEAR(assignment_probability(-0.4, 0.1, 0.5, std::log(3.0)), 0.25, 1e-15);
    EXPECT_THROW(assignment_probability(0.0, 0.0, 0.0, 1.0), Error);
}

TEST(GenerateDataset, RandomizedShareAndShape) {
    Scenario s = quick(Heterogeneity::strong);
    s.n = 4000;
    s.q = 2;
    const auto rep = generate_dataset(s, 0);
    EXPECT_EQ(rep.data.size(), 4000u);
    EXPECT_EQ(rep.data.covariates.cols(), 3);
    EXPECT_EQ(rep.truth.size(), 4000u);
    double w = 0.0;
    for (int t : rep.data.treatment) w += t;
    EXPECT_NEAR(w / 4000.0, 0.5, 3.0 * std::sqrt(0.25 / 4000.0));
    EXPECT_LE(rep.data.covariates.maxCoeff(), 1.0);
    EXPECT_GE(rep.data.covariates.minCoeff(), -1.0);
}

TEST(GenerateDataset, SelectionShiftsTreatedCovariates) {
    Scenario s = quick(Heterogeneity::strong);
    s.n = 4000;
    s.lambda = std::log(3.0);
    const auto rep = generate_dataset(s, 0);
    double x_treated = 0.0;
    double x_control = 0.0;
    int nt = 0;
    for (std::size_t i = 0; i < rep.data.size(); ++i) {
        const double x = rep.data.covariates(static_cast<Eigen::Index>(i), 0);
        if (rep.data.treatment[i] == 1) {
            x_treated += x;
            ++nt;
        } else {
            x_control += x;
        }
    }
    EXPECT_GT(x_treated / nt, x_control / (4000 - nt) + 0.2);
}

TEST(GenerateDataset, DeterministicAndDistinctAcrossReplications) {
    Scenario s = quick(Heterogeneity::mild);
    const auto a = generate_dataset(s, 3);
    const auto b = generate_dataset(s, 3);
    const auto c = generate_dataset(s, 4);
    EXPECT_EQ(a.data.outcome, b.data.outcome);
    EXPECT_TRUE((a.data.covariates.array() == b.data.covariates.array()).all());
    EXPECT_EQ(a.sampler_seed, b.sampler_seed);
    EXPECT_NE(a.sampler_seed, c.sampler_seed);
    EXPECT_FALSE((a.data.covariates.array() == c.data.covariates.array()).all());
}

TEST(Scenario, Validation) {
    Scenario s;
    s.n = 5;
    EXPECT_THROW(s.validate(), Error);
    s = Scenario{};
    s.phi = -1.0;
    EXPECT_THROW(s.validate(), Error);
    s = Scenario{};
    s.replications = 0;
    EXPECT_THROW(s.validate(), Error);
}

TEST(RunReplications, AggregateMatchesDetailsAndRanges) {
    Scenario s = quick(Heterogeneity::strong, 6);
    const auto res = run_replications(s, 1);
    ASSERT_EQ(res.details.size(), 6u);
    EXPECT_EQ(res.metrics.completed + res.metrics.failed, 6);
    double acc = 0.0;
    double cy = 0.0;
    double bl = 0.0;
    int ok = 0;
    for (const auto& r : res.details) {
        if (!r.ok) continue;
        ++ok;
        acc += r.accuracy;
        cy += r.coverage_outcome;
        bl += r.bias_loss;
        for (double v : {r.accuracy, r.coverage_loss, r.coverage_outcome, r.treated_fraction}) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
        EXPECT_GE(r.width_loss, 0.0);
        EXPECT_GE(r.width_outcome, 0.0);
        EXPECT_GT(r.acceptance0, 0.0);
    }
    ASSERT_GT(ok, 0);
    EXPECT_NEAR(res.metrics.accuracy, acc / ok, 1e-14);
    EXPECT_NEAR(res.metrics.coverage_outcome, cy / ok, 1e-14);
    EXPECT_NEAR(res.metrics.bias_loss, bl / ok, 1e-14);
    // Strong heterogeneity is easy to classify with the correct design.
    EXPECT_GT(res.metrics.accuracy, 0.85);
}

TEST(RunReplications, ResultsDoNotDependOnThreadCount) {
    Scenario s = quick(Heterogeneity::mild, 3);
    const auto one = run_replications(s, 1);
    const auto three = run_replications(s, 3);
    for (std::size_t k = 0; k < one.details.size(); ++k) {
        EXPECT_EQ(one.details[k].bias_loss, three.details[k].bias_loss);
        EXPECT_EQ(one.details[k].width_outcome, three.details[k].width_outcome);
    }
    EXPECT_EQ(one.metrics.accuracy, three.metrics.accuracy);
}

TEST(Aggregate, SkipsFailures) {
    std::vector<ReplicationResult> details(3);
    details[0].ok = true;
    details[0].accuracy = 0.8;
    details[1].ok = false;
    details[2].ok = true;
    details[2].accuracy = 0.6;
    const auto row = aggregate(details);
    EXPECT_EQ(row.completed, 2);
    EXPECT_EQ(row.failed, 1);
    EXPECT_NEAR(row.accuracy, 0.7, 1e-15);
}

TEST(RunReplications, FailuresAreCountedNotFatal) {
    Scenario s = quick(Heterogeneity::strong, 2);
    s.n = 10;
    s.lambda = 40.0;  // near-deterministic assignment empties or starves an arm
    const auto res = run_replications(s, 1);
    EXPECT_EQ(res.metrics.completed + res.metrics.failed, 2);
    for (const auto& r : res.details) {
        if (!r.ok) {
            EXPECT_FALSE(r.error.empty());
        }
    }
}

TEST(RunReplications, WidthsShrinkWithSampleSize) {
    Scenario small = quick(Heterogeneity::strong, 8);
    Scenario large = small;
    large.n = 1000;
    const auto a = run_replications(small, 1).metrics;
    const auto b = run_replications(large, 1).metrics;
    EXPECT_LT(b.width_loss, a.width_loss);
    EXPECT_LT(b.width_outcome, a.width_outcome);
}

TEST(RunReplications, NoHeterogeneityGivesCoinFlipAccuracy) {
    Scenario s = quick(Heterogeneity::none, 10);
    const auto m = run_replications(s, 1).metrics;
    EXPECT_NEAR(m.accuracy, 0.5, 0.15);
}
