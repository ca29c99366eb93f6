#pragma once

// Bivariate binary potential-outcome kernel: joint cell probabilities, the
// partial odds ratio parametrization, loss coefficients and the expected
// loss / outcome functionals. Everything here is a pure function.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "otr/error.hpp"

namespace otr {

// Treatment decision; `one` is the more burdensome treatment.
enum class Decision : std::uint8_t { zero = 0, one = 1 };

constexpr int to_int(Decision a) noexcept { return static_cast<int>(a); }
constexpr Decision decision_from(bool treat) noexcept { return treat ? Decision::one : Decision::zero; }

// Joint distribution of (Y(0), Y(1)); cell jk means Y(0)=j, Y(1)=k.
struct ThetaVector {
    double theta00 = 0.25;
    double theta10 = 0.25;
    double theta01 = 0.25;
    double theta11 = 0.25;

    double cell(int j, int k) const noexcept {
        if (j == 0) return k == 0 ? theta00 : theta01;
        return k == 0 ? theta10 : theta11;
    }
    // P(Y(0) = 1)
    double theta1plus() const noexcept { return theta10 + theta11; }
    // P(Y(1) = 1)
    double thetaPlus1() const noexcept { return theta01 + theta11; }

    bool valid(double tol = 1e-12) const noexcept {
        const std::array<double, 4> c{theta00, theta10, theta01, theta11};
        for (double v : c) {
            if (!(v >= 0.0 && v <= 1.0)) return false;
        }
        return std::abs(theta00 + theta10 + theta01 + theta11 - 1.0) <= tol;
    }
};

// Success probabilities of the two arms: theta1plus = P(Y(0)=1),
// thetaPlus1 = P(Y(1)=1).
struct MarginalPair {
    double theta1plus = 0.5;
    double thetaPlus1 = 0.5;
};

enum class PhiMode { fixed, scan, uniform_prior };

// Partial odds ratio assumption for the sensitivity analysis: reference
// value phi0 and conservative bounds [lower, upper].
struct PhiSpec {
    double phi0 = 1.0;
    double lower = std::exp(-3.0);
    double upper = std::exp(3.0);
    PhiMode mode = PhiMode::scan;

    static PhiSpec fixed(double phi) { return PhiSpec{phi, phi, phi, PhiMode::fixed}; }

    void validate() const {
        if (!(lower > 0.0) || !std::isfinite(upper) || !(lower <= phi0 && phi0 <= upper)) {
            throw Error(ErrorKind::invalid_argument, "phi bounds must satisfy 0 < lower <= phi0 <= upper < inf");
        }
    }
};

// Loss coefficients L_jk^(a): loss when Y(0)=j, Y(1)=k and decision a is taken.
class LossSpec {
public:
    LossSpec() = default;

    // Coefficients in (j, k, a) lexicographic order:
    // L00^0, L00^1, L01^0, L01^1, L10^0, L10^1, L11^0, L11^1.
    explicit LossSpec(const std::array<double, 8>& coefficients) : c_(coefficients) {
        for (double v : c_) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw Error(ErrorKind::negative_coefficient, "loss coefficients must be finite and >= 0");
            }
        }
    }

    double operator()(int j, int k, Decision a) const noexcept { return c_[index(j, k, to_int(a))]; }
    double at(int j, int k, int a) const noexcept { return c_[index(j, k, a)]; }
    const std::array<double, 8>& coefficients() const noexcept { return c_; }

    friend bool operator==(const LossSpec&, const LossSpec&) = default;

private:
    static constexpr std::size_t index(int j, int k, int a) noexcept {
        return static_cast<std::size_t>(4 * j + 2 * k + a);
    }
    std::array<double, 8> c_{};
};

inline LossSpec conditional_loss_spec(double l00_1, double l01_0, double l10_1, double l11_1) {
    std::array<double, 8> c{};
    c[1] = l00_1;  // Y(0)=0,Y(1)=0, a=1: unnecessary burden
    c[2] = l01_0;  // Y(0)=0,Y(1)=1, a=0: avoidable failure
    c[5] = l10_1;  // Y(0)=1,Y(1)=0, a=1: failure plus burden
    c[7] = l11_1;  // Y(0)=1,Y(1)=1, a=1: unnecessary burden
    return LossSpec(c);
}

// Additive penalties: `failure` for Y(a)=0 under either arm, `burden` for a=1.
inline LossSpec marginal_loss_spec(double failure, double burden) {
    if (!(failure >= 0.0) || !(burden >= 0.0)) {
        throw Error(ErrorKind::negative_coefficient, "marginal loss penalties must be >= 0");
    }
    std::array<double, 8> c{};
    c[0] = failure;            // 00, a=0
    c[1] = failure + burden;   // 00, a=1
    c[2] = failure;            // 01, a=0
    c[3] = burden;             // 01, a=1
    c[4] = 0.0;                // 10, a=0
    c[5] = failure + burden;   // 10, a=1
    c[6] = 0.0;                // 11, a=0
    c[7] = burden;             // 11, a=1
    return LossSpec(c);
}

namespace presets {
inline LossSpec otr_max() { return conditional_loss_spec(0.0, 1.0, 1.0, 0.0); }
inline LossSpec otr_25() { return conditional_loss_spec(0.25, 1.0, 1.25, 0.25); }
inline LossSpec otr_50() { return conditional_loss_spec(0.50, 1.0, 1.50, 0.50); }
}  // namespace presets

// Marginals of exactly 0 or 1 leave the odds ratio undefined; they are
// pulled this far inside the unit interval.
inline constexpr double kMarginalClamp = 1e-12;
// Below this |phi - 1| the closed form is replaced by independence.
inline constexpr double kIndependenceBand = 1e-8;

inline MarginalPair clamp_marginals(MarginalPair m) {
    auto check = [](double p) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw Error(ErrorKind::invalid_marginal, "marginal probability outside [0,1]");
        }
        return std::clamp(p, kMarginalClamp, 1.0 - kMarginalClamp);
    };
    return {check(m.theta1plus), check(m.thetaPlus1)};
}

// Fréchet interval for theta11 given the marginals.
inline std::array<double, 2> frechet_bounds(const MarginalPair& m) noexcept {
    return {std::max(0.0, m.theta1plus + m.thetaPlus1 - 1.0), std::min(m.theta1plus, m.thetaPlus1)};
}

// Joint cells from the two marginals and the partial odds ratio phi, i.e.
// the root of (1-phi) t^2 + (1 - (1-phi)(p0+p1)) t - phi p0 p1 = 0 that lies
// in the Fréchet interval.
inline ThetaVector theta_from_marginals(MarginalPair m, double phi) {
    m = clamp_marginals(m);
    const double p0 = m.theta1plus;
    const double p1 = m.thetaPlus1;
    if (!(phi > 0.0) || !std::isfinite(phi)) {
        throw Error(ErrorKind::invalid_argument, "odds ratio must be positive and finite");
    }

    double t11 = 0.0;
    if (std::abs(phi - 1.0) < kIndependenceBand) {
        t11 = p0 * p1;
    } else {
        const double b = 1.0 - phi;
        const double c = 1.0 - b * (p0 + p1);
        const double d = -phi * p0 * p1;
        const double disc = c * c - 4.0 * b * d;
        // (-c + sqrt(disc)) / (2b) rewritten through the conjugate; c + sqrt(disc) > 0.
        t11 = -2.0 * d / (c + std::sqrt(std::max(disc, 0.0)));
    }

    const auto [lo, hi] = frechet_bounds({p0, p1});
    if (!std::isfinite(t11) || t11 < lo - 1e-9 || t11 > hi + 1e-9) {
        throw Error(ErrorKind::no_valid_root, "odds-ratio inversion left the Fréchet interval");
    }
    t11 = std::clamp(t11, lo, hi);

    ThetaVector theta;
    theta.theta11 = t11;
    theta.theta10 = p0 - t11;
    theta.theta01 = p1 - t11;
    theta.theta00 = std::max(0.0, 1.0 - p0 - p1 + t11);
    return theta;
}

inline double odds_ratio(const ThetaVector& theta) {
    if (theta.theta00 <= 0.0 || theta.theta10 <= 0.0 || theta.theta01 <= 0.0 || theta.theta11 <= 0.0) {
        throw Error(ErrorKind::zero_cell, "odds ratio undefined with an empty cell");
    }
    return theta.theta11 * theta.theta00 / (theta.theta10 * theta.theta01);
}

inline double expected_loss(Decision a, const ThetaVector& theta, const LossSpec& spec) noexcept {
    return spec(0, 0, a) * theta.theta00 + spec(1, 0, a) * theta.theta10 + spec(0, 1, a) * theta.theta01 +
           spec(1, 1, a) * theta.theta11;
}

// mu_L(1) - mu_L(0); negative favours the burdensome treatment.
inline double loss_contrast(const ThetaVector& theta, const LossSpec& spec) noexcept {
    return expected_loss(Decision::one, theta, spec) - expected_loss(Decision::zero, theta, spec);
}

inline double expected_outcome(Decision a, const ThetaVector& theta) noexcept {
    return a == Decision::zero ? theta.theta1plus() : theta.thetaPlus1();
}

inline double outcome_contrast(const ThetaVector& theta) noexcept {
    return theta.thetaPlus1() - theta.theta1plus();
}

// Marginal-coordinate forms. Writing the cells as theta00 = 1-p0-p1+t,
// theta10 = p0-t, theta01 = p1-t, theta11 = t gives
//   mu_L(a) = L00 (1-p0-p1) + L10 p0 + L01 p1 + w_a t,
//   w_a     = L00 - L10 - L01 + L11   (all at decision a),
// so t (and hence phi) only enters through w_a. When the weight is exactly
// zero the result is bitwise independent of phi and t is never computed.
inline double association_weight(Decision a, const LossSpec& spec) noexcept {
    return ((spec(0, 0, a) - spec(1, 0, a)) - spec(0, 1, a)) + spec(1, 1, a);
}

inline double expected_loss(Decision a, MarginalPair m, double phi, const LossSpec& spec) {
    m = clamp_marginals(m);
    const double p0 = m.theta1plus;
    const double p1 = m.thetaPlus1;
    double value = spec(0, 0, a) * (1.0 - p0 - p1) + spec(1, 0, a) * p0 + spec(0, 1, a) * p1;
    const double w = association_weight(a, spec);
    if (w != 0.0) value += w * theta_from_marginals(m, phi).theta11;
    return value;
}

inline double loss_contrast(MarginalPair m, double phi, const LossSpec& spec) {
    m = clamp_marginals(m);
    const double p0 = m.theta1plus;
    const double p1 = m.thetaPlus1;
    auto diff = [&spec](int j, int k) { return spec.at(j, k, 1) - spec.at(j, k, 0); };
    double value = diff(0, 0) * (1.0 - p0 - p1) + diff(1, 0) * p0 + diff(0, 1) * p1;
    const double w = association_weight(Decision::one, spec) - association_weight(Decision::zero, spec);
    if (w != 0.0) value += w * theta_from_marginals(m, phi).theta11;
    return value;
}

// Depends on the marginals only; clamping matches theta_from_marginals.
inline double expected_outcome(Decision a, MarginalPair m) {
    m = clamp_marginals(m);
    return a == Decision::zero ? m.theta1plus : m.thetaPlus1;
}

// True when some loss functional depends on the unidentified association.
inline bool association_sensitive(const LossSpec& spec) noexcept {
    return association_weight(Decision::zero, spec) != 0.0 || association_weight(Decision::one, spec) != 0.0;
}

}  // namespace otr
