#pragma once

// Per-subject decisions from posterior draws of the two marginals: loss
// contrasts, the mean and median decision rules, posterior certainty,
// credible intervals of the loss / outcome functionals and the odds-ratio
// sensitivity scan.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "otr/core.hpp"
#include "otr/error.hpp"
#include "otr/random.hpp"
#include "otr/stats.hpp"

namespace otr {

struct CredibleInterval {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
};

struct DecisionRecord {
    std::size_t subject = 0;
    Decision a1 = Decision::zero;  // posterior-mean rule at phi0
    Decision a2 = Decision::zero;  // median rule, rho > 0.5
    double rho = 0.0;
    bool sensitive = false;
    Decision a1_lower = Decision::zero;  // mean rule at the lower bound
    Decision a1_upper = Decision::zero;  // mean rule at the upper bound
    double rho_lower = 0.0;
    double rho_upper = 0.0;
    double mean_contrast = 0.0;
    double mu_loss_mean = 0.0;  // at the chosen decision a1
    double mu_outcome_mean = 0.0;
    CredibleInterval loss_interval;
    CredibleInterval outcome_interval;
    // Posterior means of mu_L(a) and mu_Y(a) for a = 0, 1.
    std::array<double, 2> loss_mean_by_arm{0.0, 0.0};
    std::array<double, 2> outcome_mean_by_arm{0.0, 0.0};
};

namespace detail {
inline void require_same_length(std::size_t a, std::size_t b) {
    if (a != b) throw Error(ErrorKind::length_mismatch, "draw vectors differ in length");
}
}  // namespace detail

inline std::vector<double> contrast_draws(std::span<const double> prob0, std::span<const double> prob1, double phi,
                                          const LossSpec& spec) {
    detail::require_same_length(prob0.size(), prob1.size());
    std::vector<double> out(prob0.size());
    for (std::size_t d = 0; d < out.size(); ++d) out[d] = loss_contrast(MarginalPair{prob0[d], prob1[d]}, phi, spec);
    return out;
}

// 1 iff the posterior mean contrast is negative; ties go to 0.
inline Decision decide_mean(std::span<const double> contrasts) {
    return decision_from(stats::mean(contrasts) < 0.0);
}

// Posterior probability that the contrast is <= 0.
inline double posterior_rho(std::span<const double> contrasts) {
    if (contrasts.empty()) throw Error(ErrorKind::empty_draws, "no contrast draws");
    std::size_t count = 0;
    for (double c : contrasts) count += c <= 0.0 ? 1 : 0;
    return static_cast<double>(count) / static_cast<double>(contrasts.size());
}

inline Decision decide_median(double rho) noexcept { return decision_from(rho > 0.5); }

struct FunctionalDraws {
    std::vector<double> loss;
    std::vector<double> outcome;
};

// Draws of mu_L(a) and mu_Y(a). `phi_draws` holds either a single value used
// for every draw or one value per draw.
inline FunctionalDraws functional_draws(std::span<const double> prob0, std::span<const double> prob1,
                                        std::span<const double> phi_draws, const LossSpec& spec, Decision a) {
    detail::require_same_length(prob0.size(), prob1.size());
    if (phi_draws.size() != 1) detail::require_same_length(prob0.size(), phi_draws.size());
    FunctionalDraws out;
    out.loss.resize(prob0.size());
    out.outcome.resize(prob0.size());
    for (std::size_t d = 0; d < prob0.size(); ++d) {
        const MarginalPair m{prob0[d], prob1[d]};
        const double phi = phi_draws.size() == 1 ? phi_draws[0] : phi_draws[d];
        out.loss[d] = expected_loss(a, m, phi, spec);
        out.outcome[d] = expected_outcome(a, m);
    }
    return out;
}

// Equal-tailed interval [Q(gamma/2), Q(1 - gamma/2)], type-7 quantiles.
inline CredibleInterval credible_interval(std::span<const double> draws, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorKind::invalid_argument, "gamma must lie in (0,1)");
    if (draws.size() < 2) throw Error(ErrorKind::too_few_draws, "need at least two draws for an interval");
    std::vector<double> work(draws.begin(), draws.end());
    CredibleInterval ci;
    ci.lower = stats::quantile_inplace(work, gamma / 2.0);
    ci.upper = stats::quantile_inplace(work, 1.0 - gamma / 2.0);
    ci.level = 1.0 - gamma;
    return ci;
}

// Full per-subject analysis. Decisions are taken at phi0 and re-evaluated
// at the bounds (unless the mode is fixed); a subject whose three mean-rule
// decisions disagree is flagged sensitive and keeps the phi0 decision. In
// uniform-prior mode the loss functional of a non-sensitive subject
// integrates phi ~ U(lower, upper), one i.i.d. draw per posterior draw, from
// the stream (seed, subject).
inline DecisionRecord analyze_subject(std::span<const double> prob0, std::span<const double> prob1,
                                      const PhiSpec& phi, const LossSpec& spec, double gamma,
                                      std::uint64_t seed = 0, std::size_t subject = 0) {
    phi.validate();
    detail::require_same_length(prob0.size(), prob1.size());
    DecisionRecord rec;
    rec.subject = subject;

    const auto contrasts = contrast_draws(prob0, prob1, phi.phi0, spec);
    rec.mean_contrast = stats::mean(contrasts);
    rec.a1 = decision_from(rec.mean_contrast < 0.0);
    rec.rho = posterior_rho(contrasts);
    rec.a2 = decide_median(rec.rho);
    rec.a1_lower = rec.a1;
    rec.a1_upper = rec.a1;
    rec.rho_lower = rec.rho;
    rec.rho_upper = rec.rho;
    if (phi.mode != PhiMode::fixed) {
        const auto at_lower = contrast_draws(prob0, prob1, phi.lower, spec);
        const auto at_upper = contrast_draws(prob0, prob1, phi.upper, spec);
        rec.a1_lower = decide_mean(at_lower);
        rec.a1_upper = decide_mean(at_upper);
        rec.rho_lower = posterior_rho(at_lower);
        rec.rho_upper = posterior_rho(at_upper);
        rec.sensitive = rec.a1_lower != rec.a1 || rec.a1_upper != rec.a1;
    }

    std::vector<double> phi_draws{phi.phi0};
    if (phi.mode == PhiMode::uniform_prior && !rec.sensitive) {
        rng::Engine eng = rng::stream(seed, {static_cast<std::uint64_t>(subject), 0x9e3779b9ULL});
        phi_draws.resize(prob0.size());
        for (auto& v : phi_draws) v = phi.lower + (phi.upper - phi.lower) * rng::uniform01(eng);
    }

    for (Decision a : {Decision::zero, Decision::one}) {
        auto fd = functional_draws(prob0, prob1, phi_draws, spec, a);
        rec.loss_mean_by_arm[static_cast<std::size_t>(to_int(a))] = stats::mean(fd.loss);
        rec.outcome_mean_by_arm[static_cast<std::size_t>(to_int(a))] = stats::mean(fd.outcome);
        if (a == rec.a1) {
            rec.mu_loss_mean = rec.loss_mean_by_arm[static_cast<std::size_t>(to_int(a))];
            rec.mu_outcome_mean = rec.outcome_mean_by_arm[static_cast<std::size_t>(to_int(a))];
            if (prob0.size() >= 2) {
                rec.loss_interval = credible_interval(fd.loss, gamma);
                rec.outcome_interval = credible_interval(fd.outcome, gamma);
            } else {
                rec.loss_interval = {fd.loss[0], fd.loss[0], 1.0 - gamma};
                rec.outcome_interval = {fd.outcome[0], fd.outcome[0], 1.0 - gamma};
            }
        }
    }
    return rec;
}

// Analyses every subject (column) of a pair of draw matrices.
inline std::vector<DecisionRecord> analyze_cohort(const Eigen::MatrixXd& prob0, const Eigen::MatrixXd& prob1,
                                                  const PhiSpec& phi, const LossSpec& spec, double gamma,
                                                  std::uint64_t seed = 0) {
    if (prob0.rows() != prob1.rows() || prob0.cols() != prob1.cols()) {
        throw Error(ErrorKind::length_mismatch, "draw matrices differ in shape");
    }
    std::vector<DecisionRecord> out;
    out.reserve(static_cast<std::size_t>(prob0.cols()));
    std::vector<double> c0(static_cast<std::size_t>(prob0.rows()));
    std::vector<double> c1(c0.size());
    for (Eigen::Index i = 0; i < prob0.cols(); ++i) {
        Eigen::Map<Eigen::VectorXd>(c0.data(), prob0.rows()) = prob0.col(i);
        Eigen::Map<Eigen::VectorXd>(c1.data(), prob1.rows()) = prob1.col(i);
        out.push_back(analyze_subject(c0, c1, phi, spec, gamma, seed, static_cast<std::size_t>(i)));
    }
    return out;
}

struct CohortSummary {
    std::size_t n = 0;
    double loss_under_rule = 0.0;         // U_L(a*)
    double outcome_under_rule = 0.0;      // U_Y(a*)
    double loss_under_observed = 0.0;     // U_L(W)
    double outcome_under_observed = 0.0;  // U_Y(W)
    double treated_under_rule = 0.0;      // share with a1 = 1
    double treated_under_observed = 0.0;  // share with W = 1
    double treated_under_median_rule = 0.0;
    std::size_t sensitive = 0;
};

inline CohortSummary cohort_summary(std::span<const DecisionRecord> records, std::span<const int> observed_w) {
    if (records.empty()) throw Error(ErrorKind::empty_draws, "empty cohort");
    if (records.size() != observed_w.size()) {
        throw Error(ErrorKind::length_mismatch, "records and observed treatments differ in length");
    }
    stats::CompensatedSum ul, uy, ulw, uyw, ta, tw, t2;
    CohortSummary s;
    s.n = records.size();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const int w = observed_w[i];
        if (w != 0 && w != 1) throw Error(ErrorKind::non_binary_treatment, "row " + std::to_string(i + 1));
        ul += r.mu_loss_mean;
        uy += r.mu_outcome_mean;
        ulw += r.loss_mean_by_arm[static_cast<std::size_t>(w)];
        uyw += r.outcome_mean_by_arm[static_cast<std::size_t>(w)];
        ta += static_cast<double>(to_int(r.a1));
        tw += static_cast<double>(w);
        t2 += static_cast<double>(to_int(r.a2));
        s.sensitive += r.sensitive ? 1 : 0;
    }
    const double n = static_cast<double>(records.size());
    s.loss_under_rule = ul.value() / n;
    s.outcome_under_rule = uy.value() / n;
    s.loss_under_observed = ulw.value() / n;
    s.outcome_under_observed = uyw.value() / n;
    s.treated_under_rule = ta.value() / n;
    s.treated_under_observed = tw.value() / n;
    s.treated_under_median_rule = t2.value() / n;
    return s;
}

}  // namespace otr
