#pragma once

// Separate outcome models per treatment arm, evaluated at every subject so
// each subject gets posterior draws of both marginal success probabilities.

#include <Eigen/Dense>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "otr/error.hpp"
#include "otr/random.hpp"
#include "otr/samplers/bart.hpp"
#include "otr/samplers/dataset.hpp"
#include "otr/samplers/logistic.hpp"

namespace otr {

struct LogisticSampler {
    DesignBasis basis = DesignBasis::linear;
    McmcConfig mcmc;
};

using SamplerConfig = std::variant<LogisticSampler, BartConfig>;

inline std::string sampler_name(const SamplerConfig& cfg) {
    if (const auto* lg = std::get_if<LogisticSampler>(&cfg)) return "logistic-" + to_string(lg->basis);
    return "bart";
}

inline const McmcConfig& mcmc_of(const SamplerConfig& cfg) {
    if (const auto* lg = std::get_if<LogisticSampler>(&cfg)) return lg->mcmc;
    return std::get<BartConfig>(cfg).mcmc;
}

inline McmcConfig& mcmc_of(SamplerConfig& cfg) {
    if (auto* lg = std::get_if<LogisticSampler>(&cfg)) return lg->mcmc;
    return std::get<BartConfig>(cfg).mcmc;
}

// prob0(d, i) is draw d of P(Y(0)=1 | x_i); prob1 likewise for arm 1.
struct PosteriorDraws {
    Eigen::MatrixXd prob0;
    Eigen::MatrixXd prob1;
    std::string sampler;
    std::array<double, 2> acceptance_rate{0.0, 0.0};
    std::array<bool, 2> separation{false, false};

    Eigen::Index num_draws() const noexcept { return prob0.rows(); }
    Eigen::Index num_subjects() const noexcept { return prob0.cols(); }
};

namespace detail {

inline Eigen::MatrixXd select_rows(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
    return out;
}

}  // namespace detail

// Fits P(Y=1 | X, W=a) on the rows with W=a for a = 0, 1 independently, each
// on its own stream (seed, arm), and evaluates both at all n subjects.
inline PosteriorDraws fit_arm_models(const DataSet& data, const SamplerConfig& cfg) {
    data.validate();
    const McmcConfig& mcmc = mcmc_of(cfg);
    mcmc.validate();

    PosteriorDraws out;
    out.sampler = sampler_name(cfg);
    for (int arm = 0; arm <= 1; ++arm) {
        const auto rows = data.arm_rows(arm);
        if (rows.empty()) throw Error(ErrorKind::empty_arm, "no subjects received treatment " + std::to_string(arm));
        std::vector<int> y;
        y.reserve(rows.size());
        for (auto r : rows) y.push_back(data.outcome[static_cast<std::size_t>(r)]);
        const long ones = std::count(y.begin(), y.end(), 1);
        if (ones == 0 || ones == static_cast<long>(y.size())) {
            throw Error(ErrorKind::single_class_outcome,
                        "outcome is constant within treatment arm " + std::to_string(arm));
        }
        const Eigen::MatrixXd x_arm = detail::select_rows(data.covariates, rows);
        rng::Engine eng = rng::stream(mcmc.seed, {static_cast<std::uint64_t>(arm)});

        Eigen::MatrixXd probs;
        if (const auto* lg = std::get_if<LogisticSampler>(&cfg)) {
            std::vector<double> yd(y.begin(), y.end());
            const auto fit = fit_logistic_metropolis(yd, make_design(x_arm, lg->basis), lg->mcmc, eng);
            const Eigen::MatrixXd eta = fit.draws * make_design(data.covariates, lg->basis).transpose();
            probs = eta.unaryExpr([](double e) { return std::clamp(stats::expit(e), 1e-12, 1.0 - 1e-12); });
            out.acceptance_rate[static_cast<std::size_t>(arm)] = fit.acceptance_rate;
            out.separation[static_cast<std::size_t>(arm)] = fit.separation;
        } else {
            BartMoveStats moves;
            probs = fit_probit_bart(y, x_arm, data.covariates, std::get<BartConfig>(cfg), std::move(eng), &moves);
            long prop = 0;
            long acc = 0;
            for (int m = 0; m < 4; ++m) {
                prop += moves.proposed[static_cast<std::size_t>(m)];
                acc += moves.accepted[static_cast<std::size_t>(m)];
            }
            out.acceptance_rate[static_cast<std::size_t>(arm)] = prop > 0 ? static_cast<double>(acc) / prop : 0.0;
        }
        (arm == 0 ? out.prob0 : out.prob1) = std::move(probs);
    }
    return out;
}

}  // namespace otr
