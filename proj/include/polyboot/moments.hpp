#pragma once

#include "polyboot/sample.hpp"
#include "polyboot/types.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace polyboot {

/// Moment equations psi(X; theta) with L outputs and K parameters.
///
/// `eval` is mandatory. `jacobian` (L x K per observation) is optional; when
/// absent, derivatives are taken by central differences. `residual` and
/// `instruments` describe moments of the residual-times-instrument form
/// e(X; theta) * Z(X), which the ACM-style weight matrix needs. `initial`
/// supplies a data-driven start value for the solvers.
struct MomentFunction {
    using Eval = std::function<void(std::span<const double>, const ParamVector&, Eigen::Ref<Vector>)>;
    using Jacobian = std::function<void(std::span<const double>, const ParamVector&, Eigen::Ref<Matrix>)>;
    using Residual = std::function<double(std::span<const double>, const ParamVector&)>;
    using Instruments = std::function<void(std::span<const double>, Eigen::Ref<Vector>)>;
    using Initial = std::function<ParamVector(const PolyadicSample&, const ObservationWeights&)>;

    std::string name;
    std::size_t num_moments = 0;
    std::size_t num_params = 0;
    std::vector<std::string> param_names;
    Eval eval;
    Jacobian jacobian;
    Residual residual;
    Instruments instruments;
    Initial initial;

    bool has_jacobian() const noexcept { return static_cast<bool>(jacobian); }
    bool is_residual_form() const noexcept { return residual && instruments; }
    bool just_identified() const noexcept { return num_moments == num_params; }
};

inline constexpr const char* kInterceptName = "(intercept)";

/// Resolved regression columns. With an intercept, parameter 0 is the
/// intercept and the regressors follow in the listed order.
struct RegressionColumns {
    std::size_t y = 0;
    std::vector<std::size_t> x;
    std::vector<std::size_t> z;
    bool intercept = false;

    static RegressionColumns resolve(const PolyadicSample& sample, const std::string& y,
                                     const std::vector<std::string>& x, bool intercept,
                                     const std::vector<std::string>& z = {});
    std::size_t num_regressors() const noexcept { return x.size() + (intercept ? 1 : 0); }
    std::size_t num_instruments() const noexcept { return z.size() + (intercept ? 1 : 0); }
    std::vector<std::string> param_names(const PolyadicSample& sample) const;
};

/// psi = x - theta.
MomentFunction mean_moment(const PolyadicSample& sample, const std::string& column);
/// psi = (y - x'theta) x.
MomentFunction ols_moment(const PolyadicSample& sample, const std::string& y,
                          const std::vector<std::string>& x, bool intercept);
/// psi = (y - exp(x'theta)) x.
MomentFunction ppml_moment(const PolyadicSample& sample, const std::string& y,
                           const std::vector<std::string>& x, bool intercept);
/// psi = (y - x'theta) z; with an intercept a constant joins both x and z.
MomentFunction linear_iv_moment(const PolyadicSample& sample, const std::string& y,
                                const std::vector<std::string>& x, const std::vector<std::string>& z,
                                bool intercept);

/// Design matrix (N x K) for resolved regression columns, intercept first.
Matrix design_matrix(const PolyadicSample& sample, const RegressionColumns& cols);
Matrix instrument_matrix(const PolyadicSample& sample, const RegressionColumns& cols);

/// Row i is psi(X_i; theta).
Matrix moment_matrix(const MomentFunction& m, const PolyadicSample& sample, const ParamVector& theta);
/// sum_i w_i psi(X_i; theta). Zero-weight rows are skipped.
Vector moment_mean(const MomentFunction& m, const PolyadicSample& sample, const Vector& weights,
                   const ParamVector& theta);
/// Jacobian (L x K) of moment_mean: analytic when available, otherwise
/// central differences with step 1e-6 * (1 + |theta_j|).
Matrix moment_jacobian(const MomentFunction& m, const PolyadicSample& sample, const Vector& weights,
                       const ParamVector& theta);
/// Central-difference Jacobian for one observation.
Matrix numeric_observation_jacobian(const MomentFunction& m, std::span<const double> obs,
                                    const ParamVector& theta);
/// Analytic Jacobian for one observation when available, numeric otherwise.
Matrix observation_jacobian(const MomentFunction& m, std::span<const double> obs, const ParamVector& theta);

}  // namespace polyboot
