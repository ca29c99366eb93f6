#pragma once

// Monte Carlo study: cubic-logit truth per arm in X1, selective treatment
// assignment, per-replication fitting and the bias / width / coverage /
// accuracy metrics.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "otr/core.hpp"
#include "otr/error.hpp"
#include "otr/inference.hpp"
#include "otr/parallel.hpp"
#include "otr/random.hpp"
#include "otr/samplers/arm_models.hpp"
#include "otr/stats.hpp"

namespace otr::simul {

enum class Heterogeneity { strong, mild, none };

inline std::string to_string(Heterogeneity h) {
    switch (h) {
    case Heterogeneity::strong: return "strong";
    case Heterogeneity::mild: return "mild";
    case Heterogeneity::none: return "none";
    }
    return "?";
}

inline Heterogeneity heterogeneity_from(const std::string& name) {
    if (name == "strong") return Heterogeneity::strong;
    if (name == "mild") return Heterogeneity::mild;
    if (name == "none") return Heterogeneity::none;
    throw Error(ErrorKind::invalid_argument, "unknown heterogeneity '" + name + "'");
}

using Coefficients = std::array<double, 4>;

// Cubic-logit coefficients (intercept, x, x^2, x^3) of the treated arm.
inline constexpr Coefficients kTreatedCoefficients{0.457, 3.185, -1.593, -2.124};

inline Coefficients control_coefficients(Heterogeneity h) noexcept {
    switch (h) {
    case Heterogeneity::strong: return {0.457, -3.185, -1.593, 2.124};
    case Heterogeneity::mild: return {0.457, 1.343, -1.430, -1.217};
    case Heterogeneity::none: break;
    }
    return kTreatedCoefficients;
}

inline double cubic_logit(const Coefficients& b, double x) noexcept {
    return stats::expit(b[0] + x * (b[1] + x * (b[2] + x * b[3])));
}

inline MarginalPair true_marginals(double x1, Heterogeneity h) {
    if (!(x1 >= -1.0 && x1 <= 1.0)) throw Error(ErrorKind::invalid_argument, "x1 must lie in [-1, 1]");
    return {cubic_logit(control_coefficients(h), x1), cubic_logit(kTreatedCoefficients, x1)};
}

inline double assignment_probability(double x1, double mean, double sd, double lambda) {
    if (!(sd > 0.0)) throw Error(ErrorKind::invalid_argument, "standard deviation must be positive");
    return stats::expit(lambda * (x1 - mean) / sd);
}

// Where the truth is evaluated for bias and coverage.
enum class TruthAt { selected, optimal };

struct Scenario {
    Heterogeneity heterogeneity = Heterogeneity::strong;
    double lambda = 0.0;
    int n = 250;
    int q = 0;
    std::string loss_name = "OTRmax";
    LossSpec loss = presets::otr_max();
    double phi = 1.0;
    SamplerConfig sampler = LogisticSampler{DesignBasis::cubic, {}};
    int replications = 200;
    std::uint64_t seed = 1;
    double gamma = 0.05;
    TruthAt truth_at = TruthAt::selected;

    void validate() const {
        if (n < 10) throw Error(ErrorKind::invalid_argument, "scenario needs n >= 10");
        if (replications < 1) throw Error(ErrorKind::invalid_argument, "scenario needs at least one replication");
        if (q < 0) throw Error(ErrorKind::invalid_argument, "noise covariate count must be >= 0");
        if (!(phi > 0.0) || !std::isfinite(phi)) throw Error(ErrorKind::invalid_argument, "phi must be positive");
        if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorKind::invalid_argument, "gamma must lie in (0,1)");
        if (!std::isfinite(lambda)) throw Error(ErrorKind::invalid_argument, "lambda must be finite");
        mcmc_of(sampler).validate();
    }
};

struct SubjectTruth {
    MarginalPair marginals;
    ThetaVector theta;
    std::array<double, 2> loss{0.0, 0.0};
    std::array<double, 2> outcome{0.0, 0.0};
    Decision optimal = Decision::zero;
};

inline SubjectTruth subject_truth(double x1, Heterogeneity h, const LossSpec& spec, double phi) {
    SubjectTruth t;
    t.marginals = true_marginals(x1, h);
    t.theta = theta_from_marginals(t.marginals, phi);
    for (Decision a : {Decision::zero, Decision::one}) {
        t.loss[static_cast<std::size_t>(to_int(a))] = expected_loss(a, t.marginals, phi, spec);
        t.outcome[static_cast<std::size_t>(to_int(a))] = expected_outcome(a, t.marginals);
    }
    t.optimal = decision_from(t.loss[1] < t.loss[0]);
    return t;
}

struct Replicate {
    DataSet data;
    std::vector<SubjectTruth> truth;
    std::uint64_t sampler_seed = 0;
};

// Data for replication `rep`: X ~ U(-1,1)^(1+q), W from the standardized-X1
// logit with slope lambda, Y(W) from the arm-W truth.
inline Replicate generate_dataset(const Scenario& scn, std::uint64_t rep) {
    scn.validate();
    rng::Engine eng = rng::stream(scn.seed, {rep, 0});
    const int p = 1 + scn.q;
    Replicate out;
    auto& d = out.data;
    d.covariates.resize(scn.n, p);
    for (int i = 0; i < scn.n; ++i) {
        for (int k = 0; k < p; ++k) d.covariates(i, k) = 2.0 * rng::uniform01(eng) - 1.0;
    }
    for (int k = 0; k < p; ++k) d.covariate_names.push_back("x" + std::to_string(k + 1));

    const Eigen::VectorXd x1 = d.covariates.col(0);
    const double mean = x1.mean();
    const double sd = std::sqrt((x1.array() - mean).square().sum() / (scn.n - 1.0));
    d.treatment.resize(static_cast<std::size_t>(scn.n));
    d.outcome.resize(static_cast<std::size_t>(scn.n));
    out.truth.reserve(static_cast<std::size_t>(scn.n));
    for (int i = 0; i < scn.n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const double pw = assignment_probability(x1[i], mean, sd, scn.lambda);
        d.treatment[idx] = rng::uniform01(eng) < pw ? 1 : 0;
        out.truth.push_back(subject_truth(x1[i], scn.heterogeneity, scn.loss, scn.phi));
        const auto& m = out.truth.back().marginals;
        const double py = d.treatment[idx] == 1 ? m.thetaPlus1 : m.theta1plus;
        d.outcome[idx] = rng::uniform01(eng) < py ? 1 : 0;
    }
    out.sampler_seed = rng::stream(scn.seed, {rep, 1})();
    return out;
}

// Sign changes of the true loss contrast over x1 in [-1, 1], refined by
// bisection to `tol`.
inline std::vector<double> decision_boundaries(Heterogeneity h, const LossSpec& spec, double phi,
                                               int grid = 2000, double tol = 1e-10) {
    auto contrast = [&](double x) { return loss_contrast(true_marginals(x, h), phi, spec); };
    std::vector<double> roots;
    double x_prev = -1.0;
    double f_prev = contrast(x_prev);
    for (int g = 1; g <= grid; ++g) {
        const double x = -1.0 + 2.0 * g / grid;
        const double f = contrast(x);
        if (f == 0.0) {
            roots.push_back(x);
        } else if ((f_prev < 0.0) != (f < 0.0) && f_prev != 0.0) {
            double lo = x_prev;
            double hi = x;
            double f_lo = f_prev;
            while (hi - lo > tol) {
                const double mid = 0.5 * (lo + hi);
                const double f_mid = contrast(mid);
                if ((f_mid < 0.0) == (f_lo < 0.0)) {
                    lo = mid;
                    f_lo = f_mid;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        x_prev = x;
        f_prev = f;
    }
    return roots;
}

// Per-replication averages over subjects.
struct ReplicationResult {
    std::uint64_t replication = 0;
    bool ok = false;
    std::string error;
    double bias_loss = 0.0;
    double bias_outcome = 0.0;
    double width_loss = 0.0;
    double width_outcome = 0.0;
    double coverage_loss = 0.0;
    double coverage_outcome = 0.0;
    double accuracy = 0.0;
    double treated_fraction = 0.0;
    double acceptance0 = 0.0;
    double acceptance1 = 0.0;
    bool separation = false;
};

struct MetricsRow {
    double bias_loss = 0.0;
    double bias_outcome = 0.0;
    double width_loss = 0.0;
    double width_outcome = 0.0;
    double coverage_loss = 0.0;
    double coverage_outcome = 0.0;
    double accuracy = 0.0;
    int completed = 0;
    int failed = 0;
};

inline ReplicationResult evaluate_replicate(const Scenario& scn, const Replicate& rep, const PosteriorDraws& draws) {
    const auto records = analyze_cohort(draws.prob0, draws.prob1, PhiSpec::fixed(scn.phi), scn.loss, scn.gamma);
    stats::CompensatedSum bl, by, wl, wy, cl, cy, acc, treated;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto& t = rep.truth[i];
        const Decision at = scn.truth_at == TruthAt::selected ? r.a1 : t.optimal;
        const auto a = static_cast<std::size_t>(to_int(at));
        const double true_loss = t.loss[a];
        const double true_outcome = t.outcome[a];
        bl += r.mu_loss_mean - true_loss;
        by += r.mu_outcome_mean - true_outcome;
        wl += r.loss_interval.upper - r.loss_interval.lower;
        wy += r.outcome_interval.upper - r.outcome_interval.lower;
        cl += (r.loss_interval.lower <= true_loss && true_loss <= r.loss_interval.upper) ? 1.0 : 0.0;
        cy += (r.outcome_interval.lower <= true_outcome && true_outcome <= r.outcome_interval.upper) ? 1.0 : 0.0;
        acc += r.a1 == t.optimal ? 1.0 : 0.0;
        treated += static_cast<double>(to_int(r.a1));
    }
    const double n = static_cast<double>(records.size());
    ReplicationResult res;
    res.ok = true;
    res.bias_loss = bl.value() / n;
    res.bias_outcome = by.value() / n;
    res.width_loss = wl.value() / n;
    res.width_outcome = wy.value() / n;
    res.coverage_loss = cl.value() / n;
    res.coverage_outcome = cy.value() / n;
    res.accuracy = acc.value() / n;
    res.treated_fraction = treated.value() / n;
    res.acceptance0 = draws.acceptance_rate[0];
    res.acceptance1 = draws.acceptance_rate[1];
    res.separation = draws.separation[0] || draws.separation[1];
    return res;
}

inline ReplicationResult run_replication(const Scenario& scn, std::uint64_t rep) {
    ReplicationResult res;
    res.replication = rep;
    try {
        const Replicate data = generate_dataset(scn, rep);
        SamplerConfig sampler = scn.sampler;
        mcmc_of(sampler).seed = data.sampler_seed;
        const PosteriorDraws draws = fit_arm_models(data.data, sampler);
        res = evaluate_replicate(scn, data, draws);
        res.replication = rep;
    } catch (const Error& e) {
        res.ok = false;
        res.error = e.what();
    }
    return res;
}

// Equal-n replications, so the (nK)^-1 double sums are means of the
// per-replication averages. Failed replications are counted and skipped.
inline MetricsRow aggregate(std::span<const ReplicationResult> details) {
    stats::CompensatedSum bl, by, wl, wy, cl, cy, acc;
    MetricsRow row;
    for (const auto& r : details) {
        if (!r.ok) {
            ++row.failed;
            continue;
        }
        ++row.completed;
        bl += r.bias_loss;
        by += r.bias_outcome;
        wl += r.width_loss;
        wy += r.width_outcome;
        cl += r.coverage_loss;
        cy += r.coverage_outcome;
        acc += r.accuracy;
    }
    if (row.completed == 0) return row;
    const double k = row.completed;
    row.bias_loss = bl.value() / k;
    row.bias_outcome = by.value() / k;
    row.width_loss = wl.value() / k;
    row.width_outcome = wy.value() / k;
    row.coverage_loss = cl.value() / k;
    row.coverage_outcome = cy.value() / k;
    row.accuracy = acc.value() / k;
    return row;
}

struct SimulationResult {
    MetricsRow metrics;
    std::vector<ReplicationResult> details;
};

inline SimulationResult run_replications(const Scenario& scn, unsigned threads = 1) {
    scn.validate();
    SimulationResult out;
    out.details.resize(static_cast<std::size_t>(scn.replications));
    parallel_for(out.details.size(), threads,
                 [&](std::size_t k) { out.details[k] = run_replication(scn, static_cast<std::uint64_t>(k)); });
    out.metrics = aggregate(out.details);
    return out;
}

}  // namespace otr::simul
