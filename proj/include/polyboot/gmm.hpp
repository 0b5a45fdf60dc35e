#pragma once

#include "polyboot/estimators.hpp"
#include "polyboot/moments.hpp"

#include <optional>
#include <vector>

namespace polyboot {

enum class GmmMode { one_step, two_step, iterated };
enum class WeightMatrixStyle { identity, centered, acm };

/// Symmetric PSD L x L weight matrix.
struct GmmWeightMatrix {
    Matrix matrix;
    WeightMatrixStyle style = WeightMatrixStyle::identity;
    /// Eigenvalues were floored at 1e-12 * lambda_max before inversion.
    bool ridged = false;
};

struct GmmSettings {
    GmmMode mode = GmmMode::two_step;
    WeightMatrixStyle style = WeightMatrixStyle::centered;
    /// First-order-condition tolerance, max |G' W psi_bar|.
    double foc_tolerance = 1e-8;
    int max_iterations = 200;
    /// Iterated GMM: stop when |theta_{w+1} - theta_w| <= this.
    double iteration_tolerance = 1e-10;
    int max_outer_iterations = 100;
    SolverSettings z_solver{};
};

/// One theta-update of iterated GMM, under the weight matrix of that update.
struct GmmIterationTrace {
    double objective_before = 0.0;
    double objective_after = 0.0;
    double step = 0.0;
};

struct GmmResult {
    ParamVector theta;
    ParamVector first_step;
    GmmWeightMatrix weight;
    double objective = 0.0;
    double foc = 0.0;
    int iterations = 0;
    bool ridged = false;
    std::vector<GmmIterationTrace> trace;
};

/// Inverse of the weighted centered moment covariance at theta.
GmmWeightMatrix centered_weight_matrix(const MomentFunction& moment, const PolyadicSample& sample,
                                       const ObservationWeights& weights, const ParamVector& theta);
/// [ (sum w e^2) (sum w Z Z') ]^{-1} for residual-times-instrument moments.
GmmWeightMatrix acm_weight_matrix(const MomentFunction& moment, const PolyadicSample& sample,
                                  const ObservationWeights& weights, const ParamVector& theta);
GmmWeightMatrix weight_matrix(WeightMatrixStyle style, const MomentFunction& moment, const PolyadicSample& sample,
                              const ObservationWeights& weights, const ParamVector& theta);

/// Inverts a symmetric PSD matrix through its eigendecomposition, flooring
/// eigenvalues at 1e-12 * lambda_max. `reference_scale` is the size of the
/// quantity the matrix was formed from; a lambda_max below 1e-14 times it
/// counts as zero and raises SingularWeightMatrix.
GmmWeightMatrix invert_psd(const Matrix& cov, double reference_scale, WeightMatrixStyle style);

/// psi_bar' W psi_bar.
double gmm_objective(const MomentFunction& moment, const PolyadicSample& sample, const ObservationWeights& weights,
                     const Matrix& W, const ParamVector& theta);

/// Gauss-Newton minimization of the quadratic form, started at `init`.
SolverResult minimize_quadratic_form(const MomentFunction& moment, const PolyadicSample& sample,
                                     const ObservationWeights& weights, const Matrix& W, const ParamVector& init,
                                     const GmmSettings& settings);
/// Multi-start minimization from the moment's initializer and from zero;
/// returns the lower objective.
SolverResult minimize_multistart(const MomentFunction& moment, const PolyadicSample& sample,
                                 const ObservationWeights& weights, const Matrix& W, const GmmSettings& settings);

GmmResult gmm_one_step(const MomentFunction& moment, const PolyadicSample& sample, const ObservationWeights& weights,
                       const GmmSettings& settings = {});
/// Identity-weighted first step, then the weight matrix at the first-step
/// estimate. Just-identified systems are solved directly as psi_bar = 0.
GmmResult gmm_two_step(const MomentFunction& moment, const PolyadicSample& sample, const ObservationWeights& weights,
                       const GmmSettings& settings = {});
/// Alternates theta- and weight-updates from the identity (or from the weight
/// matrix at `warm_start`) until the parameter change is below tolerance.
GmmResult gmm_iterated(const MomentFunction& moment, const PolyadicSample& sample, const ObservationWeights& weights,
                       const GmmSettings& settings = {}, const std::optional<ParamVector>& warm_start = std::nullopt);
GmmResult gmm_estimate(const MomentFunction& moment, const PolyadicSample& sample, const ObservationWeights& weights,
                       const GmmSettings& settings = {});

/// Two-step GMM written as one just-identified system in
/// (theta1, theta2, m, vec Omega, vec G1, vec G2): first-step FOC, moment
/// mean, centered covariance, Jacobians at both steps and the second-step
/// FOC G2' Omega^{-1} psi(theta2). Its root reproduces gmm_two_step.
struct StackedLayout {
    std::size_t k = 0;
    std::size_t l = 0;
    std::size_t theta1() const noexcept { return 0; }
    std::size_t theta2() const noexcept { return k; }
    std::size_t mean() const noexcept { return 2 * k; }
    std::size_t omega() const noexcept { return 2 * k + l; }
    std::size_t g1() const noexcept { return 2 * k + l + l * l; }
    std::size_t g2() const noexcept { return 2 * k + l + l * l + l * k; }
    std::size_t size() const noexcept { return 2 * k + l + l * l + 2 * l * k; }
};

MomentFunction stacked_two_step_moment(const MomentFunction& base);
StackedLayout stacked_layout(const MomentFunction& base);
/// Start value for the stacked system: both thetas at `theta0`, the other
/// blocks evaluated there.
ParamVector stacked_initial_point(const MomentFunction& base, const PolyadicSample& sample,
                                  const ObservationWeights& weights, const ParamVector& theta0);
/// Stacked parameter vector implied by a two-step result.
ParamVector stacked_point(const MomentFunction& base, const PolyadicSample& sample, const ObservationWeights& weights,
                          const GmmResult& two_step);

}  // namespace polyboot
