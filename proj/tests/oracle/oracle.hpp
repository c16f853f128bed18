#ifndef SPARSEBNB_TESTS_ORACLE_HPP_
#define SPARSEBNB_TESTS_ORACLE_HPP_

// Brute-force ground truth for tiny instances. Shares nothing with the solver beyond
// ProblemData and Fixations.

#include "sparsebnb/problem.hpp"

namespace oracle {

using sparsebnb::Index;
using sparsebnb::IndexSet;

struct OracleResult {
    double objective = 0;
    IndexSet support;
    Eigen::VectorXd beta;
};

/// min 1/2 ||y - X_S b||^2 + lambda2 ||b||^2 over |b| <= M, returned as a p-vector.
Eigen::VectorXd box_ridge(const sparsebnb::ProblemData<double>& prob, const IndexSet& support);

/// Exhaustive search over all 2^p supports. Throws TooLarge for p > 14.
OracleResult enumerate_exact(const sparsebnb::ProblemData<double>& prob);

/// Per-coordinate penalty of the interval relaxation, computed by minimizing
/// lambda0 z + lambda2 b^2 / z over z in [|b| / M, 1] (z = 0 allowed only when b = 0).
double perspective_penalty(sparsebnb::FixState state, double b, const sparsebnb::ProblemData<double>& prob);

/// argmin_b (b - t)^2 / (2 s) + perspective_penalty(b) over |b| <= M.
double perspective_prox(sparsebnb::FixState state, double t, double s, const sparsebnb::ProblemData<double>& prob);

struct RelaxationOracleResult {
    double value = 0;
    Eigen::VectorXd beta;
    Index iterations = 0;
    double stationarity = 0;
};

/// Minimizes 1/2 ||y - X b||^2 + sum_i perspective_penalty_i(b_i) with accelerated
/// proximal gradient until the gradient mapping is below 1e-9. Throws TooLarge for p > 10.
RelaxationOracleResult relaxation_oracle_full(const sparsebnb::ProblemData<double>& prob,
                                              const sparsebnb::Fixations& fix);

inline double relaxation_oracle(const sparsebnb::ProblemData<double>& prob, const sparsebnb::Fixations& fix) {
    return relaxation_oracle_full(prob, fix).value;
}

}  // namespace oracle

#endif  // SPARSEBNB_TESTS_ORACLE_HPP_
