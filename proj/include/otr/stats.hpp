#pragma once

// Scalar numerics shared by every module: link functions, the normal
// distribution, order-statistic quantiles and compensated summation.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "otr/error.hpp"

namespace otr::stats {

inline double expit(double x) noexcept {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double logit(double p) noexcept { return std::log(p / (1.0 - p)); }

// log(1 + exp(x)) without overflow.
inline double log1pexp(double x) noexcept {
    if (x > 35.0) return x;
    if (x < -35.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

inline double normal_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

inline double normal_pdf(double x) noexcept {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// Inverse standard normal CDF, Wichura's AS241 (PPND16). Relative accuracy
// is about 1e-16 over (0, 1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw Error(ErrorKind::invalid_argument, "normal_quantile needs p in (0,1)");
    }
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                    45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                    21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value = 0.0;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                     1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
                  4.6303378461565452959) * r + 1.42343711074968357734) /
                (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                     0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
                  2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                     0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
                  5.4637849111641143699) * r + 6.6579046435011037772) /
                (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                     7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                  0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -value : value;
}

// Neumaier's variant of Kahan summation; order of additions still matters
// for bit-identity, so callers add in a fixed order.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            compensation_ += (sum_ - t) + x;
        } else {
            compensation_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    CompensatedSum& operator+=(double x) noexcept {
        add(x);
        return *this;
    }
    double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

inline double sum(std::span<const double> xs) noexcept {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw Error(ErrorKind::empty_draws, "mean of an empty sample");
    return sum(xs) / static_cast<double>(xs.size());
}

// Continuous sample quantile with linear interpolation between order
// statistics (R type 7). Partially reorders `scratch`.
inline double quantile_inplace(std::span<double> scratch, double prob) {
    if (scratch.empty()) throw Error(ErrorKind::empty_draws, "quantile of an empty sample");
    const std::size_t n = scratch.size();
    const double h = (static_cast<double>(n) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    auto lo_it = scratch.begin() + static_cast<std::ptrdiff_t>(lo);
    std::nth_element(scratch.begin(), lo_it, scratch.end());
    const double x_lo = *lo_it;
    if (lo + 1 >= n || frac == 0.0) return x_lo;
    const double x_hi = *std::min_element(lo_it + 1, scratch.end());
    return x_lo + frac * (x_hi - x_lo);
}

inline double quantile(std::span<const double> xs, double prob) {
    std::vector<double> scratch(xs.begin(), xs.end());
    return quantile_inplace(scratch, prob);
}

}  // namespace otr::stats
