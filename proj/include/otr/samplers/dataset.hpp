#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "otr/error.hpp"

namespace otr {

// Observed data: covariates X (n x p), received treatment W and the outcome
// observed under it, Y(W).
struct DataSet {
    Eigen::MatrixXd covariates;
    std::vector<int> treatment;
    std::vector<int> outcome;
    std::vector<std::string> covariate_names;

    std::size_t size() const noexcept { return treatment.size(); }
    Eigen::Index num_covariates() const noexcept { return covariates.cols(); }

    void validate() const {
        const auto n = static_cast<Eigen::Index>(treatment.size());
        if (n < 1) throw Error(ErrorKind::invalid_argument, "data set has no rows");
        if (covariates.cols() < 1) throw Error(ErrorKind::empty_covariates, "data set has no covariates");
        if (covariates.rows() != n || static_cast<Eigen::Index>(outcome.size()) != n) {
            throw Error(ErrorKind::length_mismatch, "covariate, treatment and outcome lengths differ");
        }
        for (std::size_t i = 0; i < treatment.size(); ++i) {
            if (treatment[i] != 0 && treatment[i] != 1) {
                throw Error(ErrorKind::non_binary_treatment, "row " + std::to_string(i + 1));
            }
            if (outcome[i] != 0 && outcome[i] != 1) {
                throw Error(ErrorKind::non_binary_outcome, "row " + std::to_string(i + 1));
            }
        }
        if (!covariates.allFinite()) throw Error(ErrorKind::missing_values, "non-finite covariate value");
    }

    // Rows that received treatment `arm`, in input order.
    std::vector<Eigen::Index> arm_rows(int arm) const {
        std::vector<Eigen::Index> rows;
        for (std::size_t i = 0; i < treatment.size(); ++i) {
            if (treatment[i] == arm) rows.push_back(static_cast<Eigen::Index>(i));
        }
        return rows;
    }
};

struct McmcConfig {
    int draws = 5000;
    int burn_in = 1000;
    int thin = 1;
    std::uint64_t seed = 1;

    void validate() const {
        if (draws < 1 || burn_in < 0 || thin < 1) {
            throw Error(ErrorKind::invalid_argument, "MCMC config needs draws >= 1, burn_in >= 0, thin >= 1");
        }
    }
};

}  // namespace otr
