#pragma once

#include "polyboot/moments.hpp"
#include "polyboot/sample.hpp"
#include "polyboot/types.hpp"

#include <string>
#include <vector>

namespace polyboot {

struct SolverSettings {
    double tolerance = 1e-10;
    int max_iterations = 100;
};

/// Root or minimizer found by an iterative solver.
struct SolverResult {
    ParamVector theta;
    int iterations = 0;
    double residual = 0.0;
    /// Set when the residual stalled at the floating-point floor above `tolerance`.
    bool precision_floor = false;
};

/// Gram matrices with condition number above this are rejected.
inline constexpr double kMaxConditionNumber = 1e12;

/// sum_k w_k x_k.
double weighted_mean(const PolyadicSample& sample, const ObservationWeights& weights, std::size_t column);
double weighted_mean(const PolyadicSample& sample, const ObservationWeights& weights, const std::string& column);

/// Solves (X' W X) theta = X' W y. SingularDesign when the weighted Gram
/// matrix is singular or its condition number exceeds kMaxConditionNumber.
ParamVector weighted_ols(const Matrix& X, const Vector& y, const Vector& weights);
ParamVector weighted_ols(const PolyadicSample& sample, const ObservationWeights& weights, const std::string& y,
                         const std::vector<std::string>& x, bool intercept);

/// Pseudo-Poisson ML: root of sum w (y - exp(x'theta)) x by damped Newton on
/// the weighted Poisson log-likelihood, started at OLS of log(y + 1).
SolverResult ppml_fit(const Matrix& X, const Vector& y, const Vector& weights, const SolverSettings& settings = {});
ParamVector weighted_ppml(const PolyadicSample& sample, const ObservationWeights& weights, const std::string& y,
                          const std::vector<std::string>& x, bool intercept, const SolverSettings& settings = {});

/// Newton root finder for a just-identified moment system, with step halving
/// whenever the residual norm would increase.
SolverResult solve_z(const MomentFunction& moment, const PolyadicSample& sample, const ObservationWeights& weights,
                     const ParamVector& init, const SolverSettings& settings = {});

}  // namespace polyboot
