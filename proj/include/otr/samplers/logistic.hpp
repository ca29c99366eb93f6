#pragma once

// Bayesian logistic regression under a flat prior, sampled by random-walk
// Metropolis with a Laplace-scaled Gaussian proposal.

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "otr/error.hpp"
#include "otr/random.hpp"
#include "otr/samplers/dataset.hpp"
#include "otr/stats.hpp"

namespace otr {

// Coefficient norm at which the mode search gives up (separation).
inline constexpr double kSeparationNormCap = 50.0;

struct LogisticMode {
    Eigen::VectorXd beta;
    Eigen::MatrixXd hessian;  // of the negative log-likelihood at beta
    bool separation = false;
    int iterations = 0;
};

namespace detail {

inline double logistic_loglik(const Eigen::VectorXd& eta, std::span<const double> y) {
    stats::CompensatedSum s;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        s.add(y[static_cast<std::size_t>(i)] * eta[i] - stats::log1pexp(eta[i]));
    }
    return s.value();
}

}  // namespace detail

// Maximum of the Bernoulli-logit likelihood by damped Newton iteration. If
// the iterate's norm exceeds kSeparationNormCap the search stops, the
// iterate is scaled back onto the cap and `separation` is set.
inline LogisticMode logistic_mode(std::span<const double> y, const Eigen::MatrixXd& design, int max_iter = 200) {
    const Eigen::Index n = design.rows();
    const Eigen::Index d = design.cols();
    if (static_cast<Eigen::Index>(y.size()) != n) {
        throw Error(ErrorKind::length_mismatch, "outcome and design row counts differ");
    }
    if (d < 1 || d >= n) throw Error(ErrorKind::rank_deficient_design, "need 1 <= columns < rows");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < d) throw Error(ErrorKind::rank_deficient_design, "design matrix is not full column rank");

    Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
    LogisticMode mode;
    mode.beta = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd eta = design * mode.beta;
    double ll = detail::logistic_loglik(eta, y);

    auto hessian_at = [&](const Eigen::VectorXd& e) {
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double p = stats::expit(e[i]);
            w[i] = p * (1.0 - p);
        }
        return Eigen::MatrixXd(design.transpose() * w.asDiagonal() * design);
    };

    for (int it = 0; it < max_iter; ++it) {
        mode.iterations = it + 1;
        Eigen::VectorXd p(n);
        for (Eigen::Index i = 0; i < n; ++i) p[i] = stats::expit(eta[i]);
        const Eigen::VectorXd grad = design.transpose() * (yv - p);
        Eigen::MatrixXd h = hessian_at(eta);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        Eigen::VectorXd step = ldlt.solve(grad);
        if (!step.allFinite()) break;

        double scale = 1.0;
        bool improved = false;
        double cand_ll = ll;
        Eigen::VectorXd candidate;
        for (int half = 0; half < 30; ++half) {
            candidate = mode.beta + scale * step;
            const Eigen::VectorXd cand_eta = design * candidate;
            cand_ll = detail::logistic_loglik(cand_eta, y);
            if (cand_ll >= ll - 1e-12) {
                improved = true;
                eta = cand_eta;
                break;
            }
            scale *= 0.5;
        }
        if (!improved) break;
        const double change = std::abs(cand_ll - ll);
        mode.beta = candidate;
        ll = cand_ll;

        if (mode.beta.norm() > kSeparationNormCap) {
            mode.separation = true;
            mode.beta *= kSeparationNormCap / mode.beta.norm();
            eta = design * mode.beta;
            break;
        }
        if (change < 1e-10 * (1.0 + std::abs(ll)) && (scale * step).norm() < 1e-8 * (1.0 + mode.beta.norm())) {
            break;
        }
    }
    if (!mode.separation) {
        // Perfect prediction with a bounded mode still means the likelihood
        // has no interior maximum.
        bool perfect = true;
        for (Eigen::Index i = 0; i < n && perfect; ++i) {
            perfect = std::abs(yv[i] - stats::expit(eta[i])) < 1e-6;
        }
        mode.separation = perfect;
    }
    mode.hessian = hessian_at(eta);
    return mode;
}

struct LogisticFit {
    Eigen::MatrixXd draws;  // kept iterations x columns
    Eigen::VectorXd mode;
    double acceptance_rate = 0.0;
    bool separation = false;
};

// Random-walk Metropolis on the coefficient vector under p(beta) ∝ 1 and a
// Bernoulli-logit likelihood. Proposal covariance is (2.38^2 / d) H^-1
// with H the negative log-likelihood Hessian at the mode; the chain starts
// at the mode.
inline LogisticFit fit_logistic_metropolis(std::span<const double> y, const Eigen::MatrixXd& design,
                                           const McmcConfig& cfg, rng::Engine& eng) {
    cfg.validate();
    const LogisticMode mode = logistic_mode(y, design);
    const Eigen::Index d = design.cols();

    Eigen::MatrixXd h = mode.hessian;
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    for (double jitter = 1e-10; llt.info() != Eigen::Success && jitter < 1e3; jitter *= 10.0) {
        h = mode.hessian + jitter * h.diagonal().cwiseAbs().maxCoeff() * Eigen::MatrixXd::Identity(d, d);
        llt.compute(h);
    }
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::rank_deficient_design, "Hessian at the mode is not positive definite");
    }
    // L L^T = H, so L^-T z has covariance H^-1.
    const Eigen::MatrixXd upper = llt.matrixU();
    const double scale = 2.38 / std::sqrt(static_cast<double>(d));

    LogisticFit fit;
    fit.mode = mode.beta;
    fit.separation = mode.separation;
    fit.draws.resize(cfg.draws, d);

    Eigen::VectorXd current = mode.beta;
    Eigen::VectorXd eta = design * current;
    double current_lp = detail::logistic_loglik(eta, y);
    Eigen::VectorXd z(d);
    long accepted = 0;
    const long total = static_cast<long>(cfg.burn_in) + static_cast<long>(cfg.draws) * cfg.thin;
    int kept = 0;
    for (long it = 0; it < total; ++it) {
        for (Eigen::Index k = 0; k < d; ++k) z[k] = rng::normal(eng);
        const Eigen::VectorXd proposal = current + scale * upper.triangularView<Eigen::Upper>().solve(z);
        const Eigen::VectorXd prop_eta = design * proposal;
        const double prop_lp = detail::logistic_loglik(prop_eta, y);
        const double log_u = std::log(rng::uniform01(eng));
        if (log_u < prop_lp - current_lp) {
            current = proposal;
            current_lp = prop_lp;
            ++accepted;
        }
        if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == cfg.thin - 1) {
            fit.draws.row(kept++) = current.transpose();
        }
    }
    fit.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(total);
    return fit;
}

// Basis expansions for the logistic arm models. The sampler never invents
// features; callers pick one of these (or supply their own design).
enum class DesignBasis { linear, cubic };

// Intercept followed by x_k^1..x_k^degree for every covariate k.
inline Eigen::MatrixXd polynomial_design(const Eigen::MatrixXd& x, int degree) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    Eigen::MatrixXd out(n, 1 + p * degree);
    out.col(0).setOnes();
    for (Eigen::Index k = 0; k < p; ++k) {
        Eigen::VectorXd power = Eigen::VectorXd::Ones(n);
        for (int deg = 1; deg <= degree; ++deg) {
            power = power.cwiseProduct(x.col(k));
            out.col(1 + k * degree + (deg - 1)) = power;
        }
    }
    return out;
}

inline Eigen::MatrixXd make_design(const Eigen::MatrixXd& x, DesignBasis basis) {
    return polynomial_design(x, basis == DesignBasis::cubic ? 3 : 1);
}

inline std::string to_string(DesignBasis b) { return b == DesignBasis::cubic ? "cubic" : "linear"; }

}  // namespace otr
