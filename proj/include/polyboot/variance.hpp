#pragma once

#include "polyboot/moments.hpp"
#include "polyboot/sample.hpp"

#include <functional>
#include <string>

namespace polyboot {

struct VarianceEstimate {
    /// K x K covariance of theta_hat.
    Matrix covariance;
    /// Average Jacobian of the moment at theta_hat.
    Matrix sigma1;
    /// Shared-unit cross term (zero for the naive estimator).
    Matrix sigma2;
    /// Own term: pair average for Graham, observation average for naive.
    Matrix sigma3;
    std::string method;
    /// A negative diagonal entry was clamped to zero.
    bool clamped = false;

    Vector se() const { return covariance.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// Dyadic-robust variance of a Z-estimator,
///   (1/n) S1^{-1} (4 S2 + 2/(n-1) (S3 - 2 S2)) S1^{-T}.
/// Needs a dyadic sample with every ordered pair observed and L = K.
VarianceEstimate graham_variance(const MomentFunction& moment, const PolyadicSample& sample,
                                 const ParamVector& theta_hat);

/// Sandwich treating every observed tuple as independent.
VarianceEstimate naive_dyad_robust(const MomentFunction& moment, const PolyadicSample& sample,
                                   const ParamVector& theta_hat);

/// Rows (and columns) of `v` for the listed parameters.
VarianceEstimate select_parameters(const VarianceEstimate& v, const std::vector<std::size_t>& index);

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

/// Standard normal quantile.
double normal_quantile(double p);

/// gamma_hat +/- z_{(1+level)/2} sqrt(g' V g).
Interval delta_method_interval(double gamma_hat, const Vector& gradient, const Matrix& covariance, double level);
Interval delta_method_interval(double gamma_hat, const Vector& gradient, const VarianceEstimate& variance,
                               double level);

/// Central-difference gradient of a scalar map, step 1e-6 (1 + |theta_j|).
Vector numeric_gradient(const std::function<double(const ParamVector&)>& g, const ParamVector& theta);

}  // namespace polyboot
