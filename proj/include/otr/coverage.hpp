#pragma once

// Coverage of the interval picked by a "smaller mean wins" selection under a
// bivariate normal means model with known variances:
//   (X, Y) ~ N((mu, nu), [[s^2, r s t], [r s t, t^2]]),
//   I = X +- s*xi if X <= Y else Y +- t*xi,  target T = mu if X <= Y else nu.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "otr/error.hpp"
#include "otr/parallel.hpp"
#include "otr/random.hpp"
#include "otr/stats.hpp"

namespace otr::coverage {

struct CoverageConfig {
    double mu = 0.0;
    double nu = 0.0;
    double sigma = 1.0;
    double tau = 1.0;
    double rho = 0.0;
    double alpha = 0.05;
    long replications = 100000;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(sigma > 0.0) || !(tau > 0.0) || !(std::abs(rho) < 1.0) || !std::isfinite(sigma) ||
            !std::isfinite(tau)) {
            throw Error(ErrorKind::invalid_covariance, "need sigma, tau > 0 and |rho| < 1");
        }
        if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::invalid_argument, "alpha must lie in (0,1)");
        if (replications < 1) throw Error(ErrorKind::invalid_argument, "need at least one replication");
        if (!std::isfinite(mu) || !std::isfinite(nu)) throw Error(ErrorKind::invalid_argument, "means must be finite");
    }
};

struct CoverageEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
    double select_first = 0.0;  // share of replications with X <= Y
    long replications = 0;
};

inline constexpr long kChunk = 1L << 16;

// Replications are split into fixed chunks, chunk c drawing from stream
// (seed, cell, c), so the estimate does not depend on the thread count.
inline CoverageEstimate coverage_experiment(const CoverageConfig& cfg, unsigned threads = 1, std::uint64_t cell = 0) {
    cfg.validate();
    const double xi = stats::normal_quantile(1.0 - cfg.alpha / 2.0);
    const double cond = std::sqrt(1.0 - cfg.rho * cfg.rho);
    const long chunks = (cfg.replications + kChunk - 1) / kChunk;
    std::vector<long> hits(static_cast<std::size_t>(chunks), 0);
    std::vector<long> first(static_cast<std::size_t>(chunks), 0);
    parallel_for(static_cast<std::size_t>(chunks), threads, [&](std::size_t c) {
        rng::Engine eng = rng::stream(cfg.seed, {cell, static_cast<std::uint64_t>(c)});
        const long begin = static_cast<long>(c) * kChunk;
        const long end = std::min(cfg.replications, begin + kChunk);
        long h = 0;
        long f = 0;
        for (long r = begin; r < end; ++r) {
            const double z1 = rng::normal(eng);
            const double z2 = rng::normal(eng);
            const double x = cfg.mu + cfg.sigma * z1;
            const double y = cfg.nu + cfg.tau * (cfg.rho * z1 + cond * z2);
            if (x <= y) {
                ++f;
                h += std::abs(x - cfg.mu) <= cfg.sigma * xi ? 1 : 0;
            } else {
                h += std::abs(y - cfg.nu) <= cfg.tau * xi ? 1 : 0;
            }
        }
        hits[c] = h;
        first[c] = f;
    });
    long total_hits = 0;
    long total_first = 0;
    for (std::size_t c = 0; c < hits.size(); ++c) {
        total_hits += hits[c];
        total_first += first[c];
    }
    CoverageEstimate est;
    est.replications = cfg.replications;
    const double r = static_cast<double>(cfg.replications);
    est.estimate = static_cast<double>(total_hits) / r;
    est.select_first = static_cast<double>(total_first) / r;
    est.standard_error = std::sqrt(std::max(est.estimate * (1.0 - est.estimate), 1.0 / r) / r);
    return est;
}

enum class BracketCase { equal, between_nominal_and_upper, between_lower_and_nominal };

inline std::string to_string(BracketCase c) {
    switch (c) {
    case BracketCase::equal: return "i";
    case BracketCase::between_nominal_and_upper: return "ii";
    case BracketCase::between_lower_and_nominal: return "iii";
    }
    return "?";
}

// Predicted coverage: exactly 1-alpha, inside (1-alpha, 1-alpha/2) or inside
// (1-3alpha/2, 1-alpha), plus the universal floor 1-2alpha.
struct Bracket {
    BracketCase which = BracketCase::equal;
    double lower = 0.0;
    double upper = 0.0;
    double floor = 0.0;
};

inline Bracket theorem_bracket(const CoverageConfig& cfg) {
    const double a = cfg.alpha;
    Bracket b;
    b.floor = 1.0 - 2.0 * a;
    if (cfg.mu == cfg.nu || cfg.sigma == cfg.tau) {
        b.which = BracketCase::equal;
        b.lower = b.upper = 1.0 - a;
    } else if ((cfg.mu > cfg.nu && cfg.sigma < cfg.tau) || (cfg.mu < cfg.nu && cfg.sigma > cfg.tau)) {
        b.which = BracketCase::between_nominal_and_upper;
        b.lower = 1.0 - a;
        b.upper = 1.0 - a / 2.0;
    } else {
        b.which = BracketCase::between_lower_and_nominal;
        b.lower = 1.0 - 1.5 * a;
        b.upper = 1.0 - a;
    }
    return b;
}

// Bracket check with `k` Monte Carlo standard errors of slack.
inline bool within_bracket(const CoverageEstimate& est, const Bracket& b, double k = 4.0) {
    const double slack = k * est.standard_error;
    const bool inside = est.estimate >= b.lower - slack && est.estimate <= b.upper + slack;
    return inside && est.estimate >= b.floor - slack;
}

struct SweepRow {
    CoverageConfig config;
    CoverageEstimate estimate;
    Bracket bracket;
    bool within = false;
};

inline std::vector<SweepRow> grid_sweep(const std::vector<CoverageConfig>& grid, unsigned threads = 1) {
    if (grid.empty()) throw Error(ErrorKind::empty_grid, "coverage grid has no cells");
    for (const auto& cfg : grid) cfg.validate();
    std::vector<SweepRow> rows(grid.size());
    for (std::size_t c = 0; c < grid.size(); ++c) {
        rows[c].config = grid[c];
        rows[c].estimate = coverage_experiment(grid[c], threads, static_cast<std::uint64_t>(c));
        rows[c].bracket = theorem_bracket(grid[c]);
        rows[c].within = within_bracket(rows[c].estimate, rows[c].bracket);
    }
    return rows;
}

}  // namespace otr::coverage
