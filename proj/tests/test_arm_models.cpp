#include <gtest/gtest.h>

#include "otr/samplers/arm_models.hpp"
#include "otr/simul.hpp"

using namespace otr;

namespace {

DataSet randomized_same_law(int n, std::uint64_t seed) {
    auto eng = rng::stream(seed);
    DataSet d;
    d.covariates.resize(n, 1);
    for (int i = 0; i < n; ++i) {
        const double x = 2.0 * rng::uniform01(eng) - 1.0;
        d.covariates(i, 0) = x;
        d.treatment.push_back(rng::uniform01(eng) < 0.5 ? 1 : 0);
        d.outcome.push_back(rng::uniform01(eng) < stats::expit(0.3 + x) ? 1 : 0);
    }
    d.covariate_names = {"x1"};
    return d;
}

McmcConfig short_mcmc() {
    McmcConfig m;
    m.draws = 600;
    m.burn_in = 200;
    m.seed = 3;
    return m;
}

}  // namespace

TEST(ArmModels, LogisticShapesAndRange) {
    const auto data = randomized_same_law(300, 1);
    const auto draws = fit_arm_models(data, LogisticSampler{DesignBasis::linear, short_mcmc()});
    EXPECT_EQ(draws.prob0.rows(), 600);
    EXPECT_EQ(draws.prob0.cols(), 300);
    EXPECT_EQ(draws.prob1.rows(), 600);
    EXPECT_EQ(draws.prob1.cols(), 300);
    EXPECT_GT(draws.prob0.minCoeff(), 0.0);
    EXPECT_LT(draws.prob1.maxCoeff(), 1.0);
    EXPECT_EQ(draws.sampler, "logistic-linear");
    EXPECT_GT(draws.acceptance_rate[0], 0.0);
}

TEST(ArmModels, IdenticalLawsGiveMatchingArms) {
    const auto data = randomized_same_law(800, 2);
    for (const SamplerConfig& cfg : {SamplerConfig{LogisticSampler{DesignBasis::linear, short_mcmc()}},
                                     SamplerConfig{[] {
                                         BartConfig b;
                                         b.mcmc = short_mcmc();
                                         return b;
                                     }()}}) {
        const auto draws = fit_arm_models(data, cfg);
        EXPECT_NEAR(draws.prob0.mean(), draws.prob1.mean(), 0.05) << sampler_name(cfg);
    }
}

TEST(ArmModels, BartShapes) {
    const auto data = randomized_same_law(150, 4);
    BartConfig b;
    b.mcmc.draws = 100;
    b.mcmc.burn_in = 50;
    const auto draws = fit_arm_models(data, b);
    EXPECT_EQ(draws.prob0.rows(), 100);
    EXPECT_EQ(draws.prob1.cols(), 150);
    EXPECT_GT(draws.prob0.minCoeff(), 0.0);
    EXPECT_LT(draws.prob0.maxCoeff(), 1.0);
    EXPECT_EQ(draws.sampler, "bart");
}

TEST(ArmModels, Errors) {
    auto data = randomized_same_law(50, 5);
    std::fill(data.treatment.begin(), data.treatment.end(), 1);
    try {
        fit_arm_models(data, LogisticSampler{DesignBasis::linear, short_mcmc()});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::empty_arm);
    }
    data = randomized_same_law(50, 5);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.treatment[i] == 0) data.outcome[i] = 1;
    }
    try {
        fit_arm_models(data, LogisticSampler{DesignBasis::linear, short_mcmc()});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::single_class_outcome);
    }
}

TEST(ArmModels, DeterministicGivenSeed) {
    const auto data = randomized_same_law(200, 6);
    const SamplerConfig cfg = LogisticSampler{DesignBasis::linear, short_mcmc()};
    const auto a = fit_arm_models(data, cfg);
    const auto b = fit_arm_models(data, cfg);
    EXPECT_TRUE((a.prob0.array() == b.prob0.array()).all());
    EXPECT_TRUE((a.prob1.array() == b.prob1.array()).all());
}
