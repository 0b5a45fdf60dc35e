#include "polyboot/gmm.hpp"

#include "polyboot/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace polyboot {

namespace {

constexpr int kMaxHalvings = 60;

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

Matrix centered_covariance(const MomentFunction& moment, const PolyadicSample& sample, const Vector& w,
                           const ParamVector& theta, double* uncentered_trace) {
    const Matrix psi = moment_matrix(moment, sample, theta);
    const Vector mean = psi.transpose() * w;
    const Matrix centered = psi.rowwise() - mean.transpose();
    if (uncentered_trace) {
        *uncentered_trace = (psi.array().square().colwise() * w.array()).sum();
    }
    return centered.transpose() * w.asDiagonal() * centered;
}

}  // namespace

GmmWeightMatrix invert_psd(const Matrix& cov, double reference_scale, WeightMatrixStyle style) {
    const Matrix sym = 0.5 * (cov + cov.transpose());
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success) {
        throw SingularWeightMatrix("eigendecomposition of the moment covariance failed");
    }
    const Vector lambda = eig.eigenvalues();
    const double lmax = lambda.maxCoeff();
    if (!(lmax > 1e-14 * reference_scale) || !(lmax > 0.0)) {
        throw SingularWeightMatrix("moment covariance is numerically zero");
    }
    const double floor = 1e-12 * lmax;
    GmmWeightMatrix out;
    out.style = style;
    Vector inv(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] < floor) {
            out.ridged = true;
        }
        inv[i] = 1.0 / std::max(lambda[i], floor);
    }
    const Matrix& V = eig.eigenvectors();
    out.matrix = V * inv.asDiagonal() * V.transpose();
    out.matrix = 0.5 * (out.matrix + out.matrix.transpose());
    return out;
}

GmmWeightMatrix centered_weight_matrix(const MomentFunction& moment, const PolyadicSample& sample,
                                       const ObservationWeights& weights, const ParamVector& theta) {
    if (!theta.allFinite()) {
        throw ParamError("weight matrix requested at a non-finite parameter");
    }
    double ref = 0.0;
    const Matrix cov = centered_covariance(moment, sample, weights.values, theta, &ref);
    return invert_psd(cov, ref, WeightMatrixStyle::centered);
}

GmmWeightMatrix acm_weight_matrix(const MomentFunction& moment, const PolyadicSample& sample,
                                  const ObservationWeights& weights, const ParamVector& theta) {
    if (!moment.is_residual_form()) {
        throw ParamError("ACM weight matrix needs a residual-times-instrument moment");
    }
    const auto l = static_cast<Eigen::Index>(moment.num_moments);
    double e2 = 0.0;
    Matrix zz = Matrix::Zero(l, l);
    Vector z(l);
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double w = weights.values[static_cast<Eigen::Index>(i)];
        if (w == 0.0) {
            continue;
        }
        const double e = moment.residual(sample.row(i), theta);
        moment.instruments(sample.row(i), z);
        e2 += w * e * e;
        zz += w * z * z.transpose();
    }
    const Matrix m = e2 * zz;
    return invert_psd(m, m.trace(), WeightMatrixStyle::acm);
}

GmmWeightMatrix weight_matrix(WeightMatrixStyle style, const MomentFunction& moment, const PolyadicSample& sample,
                              const ObservationWeights& weights, const ParamVector& theta) {
    switch (style) {
        case WeightMatrixStyle::identity: {
            const auto l = static_cast<Eigen::Index>(moment.num_moments);
            return {Matrix::Identity(l, l), WeightMatrixStyle::identity, false};
        }
        case WeightMatrixStyle::centered:
            return centered_weight_matrix(moment, sample, weights, theta);
        case WeightMatrixStyle::acm:
            return acm_weight_matrix(moment, sample, weights, theta);
    }
    throw ParamError("unknown weight matrix style");
}

double gmm_objective(const MomentFunction& moment, const PolyadicSample& sample, const ObservationWeights& weights,
                     const Matrix& W, const ParamVector& theta) {
    const Vector f = moment_mean(moment, sample, weights.values, theta);
    return f.dot(W * f);
}

SolverResult minimize_quadratic_form(const MomentFunction& moment, const PolyadicSample& sample,
                                     const ObservationWeights& weights, const Matrix& W, const ParamVector& init,
                                     const GmmSettings& settings) {
    const Vector& w = weights.values;
    ParamVector theta = init;
    Vector f = moment_mean(moment, sample, w, theta);
    double q = f.dot(W * f);
    for (int it = 0; it < settings.max_iterations; ++it) {
        if (!std::isfinite(q)) {
            throw SolverError("GMM objective is not finite");
        }
        const Matrix G = moment_jacobian(moment, sample, w, theta);
        const Vector grad = G.transpose() * W * f;
        const double foc = max_abs(grad);
        if (foc <= settings.foc_tolerance) {
            return {theta, it, foc, false};
        }
        const Matrix H = G.transpose() * W * G;
        const Eigen::ColPivHouseholderQR<Matrix> qr(H);
        if (qr.rank() < H.cols()) {
            throw SolverError("GMM Gauss-Newton matrix is rank deficient", foc);
        }
        const Vector step = qr.solve(-grad);
        double t = 1.0;
        bool improved = false;
        for (int h = 0; h < kMaxHalvings; ++h, t *= 0.5) {
            const ParamVector cand = theta + t * step;
            const Vector cand_f = moment_mean(moment, sample, w, cand);
            const double cand_q = cand_f.dot(W * cand_f);
            if (std::isfinite(cand_q) && cand_q < q) {
                theta = cand;
                f = cand_f;
                q = cand_q;
                improved = true;
                break;
            }
        }
        if (!improved) {
            if (max_abs(step) <= 1e-9 * (1.0 + max_abs(theta))) {
                return {theta, it + 1, foc, true};
            }
            throw SolverError("GMM line search failed (FOC " + fmt(foc) + ")", foc);
        }
    }
    const Matrix G = moment_jacobian(moment, sample, w, theta);
    const double foc = max_abs(G.transpose() * W * f);
    if (foc <= settings.foc_tolerance) {
        return {theta, settings.max_iterations, foc, false};
    }
    throw SolverError("GMM minimization did not converge (FOC " + fmt(foc) + ")", foc);
}

SolverResult minimize_multistart(const MomentFunction& moment, const PolyadicSample& sample,
                                 const ObservationWeights& weights, const Matrix& W, const GmmSettings& settings) {
    std::vector<ParamVector> starts;
    if (moment.initial) {
        try {
            starts.push_back(moment.initial(sample, weights));
        } catch (const Error&) {
            // fall through to the zero start
        }
    }
    const ParamVector zero = ParamVector::Zero(static_cast<Eigen::Index>(moment.num_params));
    if (starts.empty() || !starts.front().isApprox(zero)) {
        starts.push_back(zero);
    }
    std::optional<SolverResult> best;
    double best_q = std::numeric_limits<double>::infinity();
    std::optional<SolverError> last_error;
    for (const auto& s : starts) {
        try {
            auto r = minimize_quadratic_form(moment, sample, weights, W, s, settings);
            const double q = gmm_objective(moment, sample, weights, W, r.theta);
            if (!best || q < best_q) {
                best = std::move(r);
                best_q = q;
            }
        } catch (const SolverError& e) {
            last_error = e;
        }
    }
    if (!best) {
        throw *last_error;
    }
    return *best;
}

namespace {

GmmResult just_identified(const MomentFunction& moment, const PolyadicSample& sample,
                          const ObservationWeights& weights, const GmmSettings& settings) {
    ParamVector init = ParamVector::Zero(static_cast<Eigen::Index>(moment.num_params));
    if (moment.initial) {
        init = moment.initial(sample, weights);
    }
    const auto z = solve_z(moment, sample, weights, init, settings.z_solver);
    GmmResult out;
    out.theta = z.theta;
    out.first_step = z.theta;
    const auto l = static_cast<Eigen::Index>(moment.num_moments);
    out.weight = {Matrix::Identity(l, l), WeightMatrixStyle::identity, false};
    out.objective = gmm_objective(moment, sample, weights, out.weight.matrix, z.theta);
    out.foc = z.residual;
    out.iterations = 1;
    return out;
}

}  // namespace

GmmResult gmm_one_step(const MomentFunction& moment, const PolyadicSample& sample, const ObservationWeights& weights,
                       const GmmSettings& settings) {
    if (moment.num_moments < moment.num_params) {
        throw ParamError("GMM needs at least as many moments as parameters");
    }
    if (moment.just_identified()) {
        return just_identified(moment, sample, weights, settings);
    }
    const auto l = static_cast<Eigen::Index>(moment.num_moments);
    const Matrix I = Matrix::Identity(l, l);
    const auto r = minimize_multistart(moment, sample, weights, I, settings);
    GmmResult out;
    out.theta = r.theta;
    out.first_step = r.theta;
    out.weight = {I, WeightMatrixStyle::identity, false};
    out.objective = gmm_objective(moment, sample, weights, I, r.theta);
    out.foc = r.residual;
    out.iterations = r.iterations;
    return out;
}

GmmResult gmm_two_step(const MomentFunction& moment, const PolyadicSample& sample, const ObservationWeights& weights,
                       const GmmSettings& settings) {
    if (moment.num_moments < moment.num_params) {
        throw ParamError("GMM needs at least as many moments as parameters");
    }
    if (moment.just_identified()) {
        return just_identified(moment, sample, weights, settings);
    }
    const auto first = gmm_one_step(moment, sample, weights, settings);
    const auto style = settings.style == WeightMatrixStyle::identity ? WeightMatrixStyle::centered : settings.style;
    GmmResult out;
    out.first_step = first.theta;
    out.weight = weight_matrix(style, moment, sample, weights, first.theta);
    SolverResult second;
    try {
        second = minimize_quadratic_form(moment, sample, weights, out.weight.matrix, first.theta, settings);
    } catch (const SolverError&) {
        second = minimize_multistart(moment, sample, weights, out.weight.matrix, settings);
    }
    out.theta = second.theta;
    out.objective = gmm_objective(moment, sample, weights, out.weight.matrix, second.theta);
    out.foc = second.residual;
    out.iterations = first.iterations + second.iterations;
    out.ridged = out.weight.ridged;
    return out;
}

GmmResult gmm_iterated(const MomentFunction& moment, const PolyadicSample& sample, const ObservationWeights& weights,
                       const GmmSettings& settings, const std::optional<ParamVector>& warm_start) {
    if (moment.num_moments < moment.num_params) {
        throw ParamError("GMM needs at least as many moments as parameters");
    }
    if (moment.just_identified()) {
        return just_identified(moment, sample, weights, settings);
    }
    const auto style = settings.style == WeightMatrixStyle::identity ? WeightMatrixStyle::centered : settings.style;
    const auto l = static_cast<Eigen::Index>(moment.num_moments);

    GmmResult out;
    std::optional<ParamVector> theta = warm_start;
    GmmWeightMatrix omega = theta ? weight_matrix(style, moment, sample, weights, *theta)
                                  : GmmWeightMatrix{Matrix::Identity(l, l), WeightMatrixStyle::identity, false};
    out.ridged = omega.ridged;
    for (int w = 0; w < settings.max_outer_iterations; ++w) {
        SolverResult r;
        GmmIterationTrace tr;
        if (theta) {
            tr.objective_before = gmm_objective(moment, sample, weights, omega.matrix, *theta);
            r = minimize_quadratic_form(moment, sample, weights, omega.matrix, *theta, settings);
        } else {
            r = minimize_multistart(moment, sample, weights, omega.matrix, settings);
            tr.objective_before = std::numeric_limits<double>::quiet_NaN();
        }
        tr.objective_after = gmm_objective(moment, sample, weights, omega.matrix, r.theta);
        tr.step = theta ? max_abs(r.theta - *theta) : std::numeric_limits<double>::infinity();
        out.trace.push_back(tr);
        if (w == 0) {
            out.first_step = r.theta;
        }
        const bool converged = theta && tr.step <= settings.iteration_tolerance;
        theta = r.theta;
        out.foc = r.residual;
        if (converged) {
            out.theta = *theta;
            out.weight = omega;
            out.objective = tr.objective_after;
            out.iterations = w + 1;
            return out;
        }
        omega = weight_matrix(style, moment, sample, weights, *theta);
        out.ridged = out.ridged || omega.ridged;
    }
    std::ostringstream os;
    os << "iterated GMM did not converge in " << settings.max_outer_iterations << " iterations; last steps:";
    const std::size_t from = out.trace.size() > 5 ? out.trace.size() - 5 : 0;
    for (std::size_t i = from; i < out.trace.size(); ++i) {
        os << ' ' << out.trace[i].step;
    }
    throw SolverError(os.str(), out.trace.empty() ? 0.0 : out.trace.back().step);
}

GmmResult gmm_estimate(const MomentFunction& moment, const PolyadicSample& sample, const ObservationWeights& weights,
                       const GmmSettings& settings) {
    switch (settings.mode) {
        case GmmMode::one_step:
            return gmm_one_step(moment, sample, weights, settings);
        case GmmMode::two_step:
            return gmm_two_step(moment, sample, weights, settings);
        case GmmMode::iterated:
            return gmm_iterated(moment, sample, weights, settings);
    }
    throw ParamError("unknown GMM mode");
}

StackedLayout stacked_layout(const MomentFunction& base) { return {base.num_params, base.num_moments}; }

MomentFunction stacked_two_step_moment(const MomentFunction& base) {
    const StackedLayout lay = stacked_layout(base);
    const auto k = static_cast<Eigen::Index>(lay.k);
    const auto l = static_cast<Eigen::Index>(lay.l);
    MomentFunction m;
    m.name = "stacked-two-step(" + base.name + ")";
    m.num_moments = lay.size();
    m.num_params = lay.size();
    for (Eigen::Index j = 0; j < k; ++j) {
        m.param_names.push_back("theta1[" + std::to_string(j) + "]");
    }
    for (Eigen::Index j = 0; j < k; ++j) {
        m.param_names.push_back("theta2[" + std::to_string(j) + "]");
    }
    for (Eigen::Index i = 0; i < l; ++i) {
        m.param_names.push_back("m[" + std::to_string(i) + "]");
    }
    for (Eigen::Index j = 0; j < l; ++j) {
        for (Eigen::Index i = 0; i < l; ++i) {
            m.param_names.push_back("omega[" + std::to_string(i) + "," + std::to_string(j) + "]");
        }
    }
    for (const char* g : {"g1", "g2"}) {
        for (Eigen::Index j = 0; j < k; ++j) {
            for (Eigen::Index i = 0; i < l; ++i) {
                m.param_names.push_back(std::string(g) + "[" + std::to_string(i) + "," + std::to_string(j) + "]");
            }
        }
    }
    m.eval = [base, lay, k, l](std::span<const double> obs, const ParamVector& p, Eigen::Ref<Vector> out) {
        const ParamVector theta1 = p.segment(static_cast<Eigen::Index>(lay.theta1()), k);
        const ParamVector theta2 = p.segment(static_cast<Eigen::Index>(lay.theta2()), k);
        const Vector mean = p.segment(static_cast<Eigen::Index>(lay.mean()), l);
        const Eigen::Map<const Matrix> omega(p.data() + lay.omega(), l, l);
        const Eigen::Map<const Matrix> g1(p.data() + lay.g1(), l, k);
        const Eigen::Map<const Matrix> g2(p.data() + lay.g2(), l, k);

        Vector psi1(l);
        Vector psi2(l);
        base.eval(obs, theta1, psi1);
        base.eval(obs, theta2, psi2);
        const Matrix j1 = observation_jacobian(base, obs, theta1);
        const Matrix j2 = observation_jacobian(base, obs, theta2);
        const Vector dev = psi1 - mean;

        Eigen::Index at = 0;
        const Matrix d1 = g1 - j1;
        out.segment(at, l * k) = Eigen::Map<const Vector>(d1.data(), l * k);
        at += l * k;
        out.segment(at, k) = g1.transpose() * psi1;
        at += k;
        out.segment(at, l) = dev;
        at += l;
        const Matrix dom = omega - dev * dev.transpose();
        out.segment(at, l * l) = Eigen::Map<const Vector>(dom.data(), l * l);
        at += l * l;
        const Matrix d2 = g2 - j2;
        out.segment(at, l * k) = Eigen::Map<const Vector>(d2.data(), l * k);
        at += l * k;
        out.segment(at, k) = g2.transpose() * omega.partialPivLu().solve(psi2);
    };
    return m;
}

namespace {

ParamVector pack_stacked(const StackedLayout& lay, const ParamVector& theta1, const ParamVector& theta2,
                         const Vector& mean, const Matrix& omega, const Matrix& g1, const Matrix& g2) {
    ParamVector p(static_cast<Eigen::Index>(lay.size()));
    const auto k = static_cast<Eigen::Index>(lay.k);
    const auto l = static_cast<Eigen::Index>(lay.l);
    p.segment(static_cast<Eigen::Index>(lay.theta1()), k) = theta1;
    p.segment(static_cast<Eigen::Index>(lay.theta2()), k) = theta2;
    p.segment(static_cast<Eigen::Index>(lay.mean()), l) = mean;
    p.segment(static_cast<Eigen::Index>(lay.omega()), l * l) = Eigen::Map<const Vector>(omega.data(), l * l);
    p.segment(static_cast<Eigen::Index>(lay.g1()), l * k) = Eigen::Map<const Vector>(g1.data(), l * k);
    p.segment(static_cast<Eigen::Index>(lay.g2()), l * k) = Eigen::Map<const Vector>(g2.data(), l * k);
    return p;
}

}  // namespace

ParamVector stacked_initial_point(const MomentFunction& base, const PolyadicSample& sample,
                                  const ObservationWeights& weights, const ParamVector& theta0) {
    const auto lay = stacked_layout(base);
    const Vector mean = moment_mean(base, sample, weights.values, theta0);
    const Matrix cov = centered_covariance(base, sample, weights.values, theta0, nullptr);
    const Matrix jac = moment_jacobian(base, sample, weights.values, theta0);
    return pack_stacked(lay, theta0, theta0, mean, cov, jac, jac);
}

ParamVector stacked_point(const MomentFunction& base, const PolyadicSample& sample, const ObservationWeights& weights,
                          const GmmResult& two_step) {
    const auto lay = stacked_layout(base);
    const Vector mean = moment_mean(base, sample, weights.values, two_step.first_step);
    const Matrix cov = centered_covariance(base, sample, weights.values, two_step.first_step, nullptr);
    const Matrix j1 = moment_jacobian(base, sample, weights.values, two_step.first_step);
    const Matrix j2 = moment_jacobian(base, sample, weights.values, two_step.theta);
    return pack_stacked(lay, two_step.first_step, two_step.theta, mean, cov, j1, j2);
}

}  // namespace polyboot
