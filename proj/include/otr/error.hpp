#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace otr {

enum class ErrorKind {
    invalid_argument,
    invalid_marginal,
    no_valid_root,
    zero_cell,
    negative_coefficient,
    empty_draws,
    too_few_draws,
    length_mismatch,
    rank_deficient_design,
    separation_detected,
    single_class_outcome,
    empty_covariates,
    empty_arm,
    invalid_covariance,
    empty_grid,
    missing_file,
    bad_schema,
    non_binary_outcome,
    non_binary_treatment,
    missing_values,
    config_parse,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_marginal: return "invalid-marginal";
    case ErrorKind::no_valid_root: return "no-valid-root";
    case ErrorKind::zero_cell: return "zero-cell";
    case ErrorKind::negative_coefficient: return "negative-coefficient";
    case ErrorKind::empty_draws: return "empty-draws";
    case ErrorKind::too_few_draws: return "too-few-draws";
    case ErrorKind::length_mismatch: return "length-mismatch";
    case ErrorKind::rank_deficient_design: return "rank-deficient-design";
    case ErrorKind::separation_detected: return "separation-detected";
    case ErrorKind::single_class_outcome: return "single-class-outcome";
    case ErrorKind::empty_covariates: return "empty-covariate-matrix";
    case ErrorKind::empty_arm: return "empty-arm";
    case ErrorKind::invalid_covariance: return "invalid-covariance";
    case ErrorKind::empty_grid: return "empty-grid";
    case ErrorKind::missing_file: return "missing-file";
    case ErrorKind::bad_schema: return "bad-schema";
    case ErrorKind::non_binary_outcome: return "non-binary-outcome";
    case ErrorKind::non_binary_treatment: return "non-binary-treatment";
    case ErrorKind::missing_values: return "missing-values";
    case ErrorKind::config_parse: return "config-parse";
    }
    return "unknown";
}

// All library failures are reported through this type; kind() is stable
// and meant for programmatic dispatch, what() for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace otr
