#include "polyboot/estimators.hpp"

#include "polyboot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace polyboot {

namespace {

constexpr int kMaxHalvings = 50;
constexpr double kMaxLinearIndex = 700.0;

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

double weighted_mean(const PolyadicSample& sample, const ObservationWeights& weights, std::size_t column) {
    double acc = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        acc += weights.values[static_cast<Eigen::Index>(i)] * sample.value(i, column);
    }
    return acc;
}

double weighted_mean(const PolyadicSample& sample, const ObservationWeights& weights, const std::string& column) {
    return weighted_mean(sample, weights, sample.column_index(column));
}

ParamVector weighted_ols(const Matrix& X, const Vector& y, const Vector& weights) {
    if (X.cols() == 0) {
        throw ParamError("OLS needs at least one regressor");
    }
    const Matrix gram = X.transpose() * weights.asDiagonal() * X;
    const Vector rhs = X.transpose() * weights.cwiseProduct(y);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double lmax = eig.eigenvalues().maxCoeff();
    const double lmin = eig.eigenvalues().minCoeff();
    if (!(lmax > 0.0) || !(lmin > 0.0) || lmax / lmin > kMaxConditionNumber) {
        throw SingularDesign("weighted design is singular (condition number " +
                             (lmin > 0.0 ? fmt(lmax / lmin) : std::string("inf")) + ")");
    }
    return gram.ldlt().solve(rhs);
}

ParamVector weighted_ols(const PolyadicSample& sample, const ObservationWeights& weights, const std::string& y,
                         const std::vector<std::string>& x, bool intercept) {
    const auto cols = RegressionColumns::resolve(sample, y, x, intercept);
    return weighted_ols(design_matrix(sample, cols), sample.column(cols.y), weights.values);
}

SolverResult ppml_fit(const Matrix& X, const Vector& y, const Vector& weights, const SolverSettings& settings) {
    if ((y.array() < 0.0).any()) {
        throw DataError("PPML dependent variable must be nonnegative");
    }
    const double wy = weights.dot(y);
    if (!(wy > 0.0)) {
        throw SolverError("PPML dependent variable is zero on every weighted observation");
    }
    ParamVector theta = weighted_ols(X, (y.array() + 1.0).log().matrix(), weights);

    auto loglik = [&](const ParamVector& t) {
        const Vector eta = (X * t).cwiseMin(kMaxLinearIndex);
        return weights.dot((y.array() * eta.array() - eta.array().exp()).matrix());
    };
    auto score = [&](const ParamVector& t) {
        const Vector mu = (X * t).cwiseMin(kMaxLinearIndex).array().exp().matrix();
        return Vector(X.transpose() * weights.cwiseProduct(y - mu));
    };

    const double scale = std::max(1.0, wy * X.cwiseAbs().maxCoeff());
    const double tol = settings.tolerance * scale;
    double ll = loglik(theta);
    Vector s = score(theta);
    for (int it = 0; it < settings.max_iterations; ++it) {
        const double res = max_abs(s);
        if (res <= tol) {
            return {theta, it, res, false};
        }
        const Vector mu = (X * theta).cwiseMin(kMaxLinearIndex).array().exp().matrix();
        const Matrix hess = X.transpose() * weights.cwiseProduct(mu).asDiagonal() * X;
        const Eigen::LDLT<Matrix> ldlt(hess);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            throw SolverError("PPML Hessian is not positive definite", res);
        }
        const Vector step = ldlt.solve(s);
        double t = 1.0;
        bool improved = false;
        for (int h = 0; h < kMaxHalvings; ++h, t *= 0.5) {
            const ParamVector cand = theta + t * step;
            const double cand_ll = loglik(cand);
            if (std::isfinite(cand_ll) && cand_ll >= ll) {
                theta = cand;
                ll = cand_ll;
                improved = true;
                break;
            }
        }
        s = score(theta);
        // Newton steps at rounding level: the score cannot be pushed further down.
        const bool stalled = improved && (t * step).lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + max_abs(theta));
        if (!improved || stalled) {
            const double r = max_abs(s);
            if (r <= tol) {
                return {theta, it + 1, r, false};
            }
            if (r <= std::sqrt(settings.tolerance) * scale) {
                return {theta, it + 1, r, true};
            }
            throw SolverError("PPML line search failed", r);
        }
    }
    const double res = max_abs(s);
    if (res <= tol) {
        return {theta, settings.max_iterations, res, false};
    }
    throw SolverError("PPML did not converge in " + std::to_string(settings.max_iterations) +
                          " iterations (residual " + fmt(res) + ")",
                      res);
}

ParamVector weighted_ppml(const PolyadicSample& sample, const ObservationWeights& weights, const std::string& y,
                          const std::vector<std::string>& x, bool intercept, const SolverSettings& settings) {
    const auto cols = RegressionColumns::resolve(sample, y, x, intercept);
    return ppml_fit(design_matrix(sample, cols), sample.column(cols.y), weights.values, settings).theta;
}

SolverResult solve_z(const MomentFunction& moment, const PolyadicSample& sample, const ObservationWeights& weights,
                     const ParamVector& init, const SolverSettings& settings) {
    if (!moment.just_identified()) {
        throw ParamError("solve_z needs as many moments as parameters");
    }
    if (static_cast<std::size_t>(init.size()) != moment.num_params) {
        throw ParamError("initial point has the wrong dimension");
    }
    const Vector& w = weights.values;
    ParamVector theta = init;
    Vector f = moment_mean(moment, sample, w, theta);
    double norm = f.norm();
    for (int it = 0; it < settings.max_iterations; ++it) {
        const double res = max_abs(f);
        if (!std::isfinite(res)) {
            throw SolverError("moment residual is not finite", res);
        }
        if (res <= settings.tolerance) {
            return {theta, it, res, false};
        }
        const Matrix jac = moment_jacobian(moment, sample, w, theta);
        const Eigen::ColPivHouseholderQR<Matrix> qr(jac);
        if (qr.rank() < jac.cols()) {
            throw SolverError("moment Jacobian is rank deficient", res);
        }
        const Vector step = qr.solve(-f);
        double t = 1.0;
        bool improved = false;
        for (int h = 0; h < kMaxHalvings; ++h, t *= 0.5) {
            const ParamVector cand = theta + t * step;
            const Vector cand_f = moment_mean(moment, sample, w, cand);
            const double cand_norm = cand_f.norm();
            if (std::isfinite(cand_norm) && cand_norm < norm) {
                theta = cand;
                f = cand_f;
                norm = cand_norm;
                improved = true;
                break;
            }
        }
        if (!improved) {
            // Stalled: accept only if the residual is at the rounding floor of
            // the moment magnitudes.
            Vector buf(static_cast<Eigen::Index>(moment.num_moments));
            double scale = 0.0;
            for (std::size_t i = 0; i < sample.size(); ++i) {
                moment.eval(sample.row(i), theta, buf);
                scale += w[static_cast<Eigen::Index>(i)] * max_abs(buf);
            }
            if (res <= 1e-8 * std::max(1.0, scale)) {
                return {theta, it + 1, res, true};
            }
            throw SolverError("Newton line search failed (residual " + fmt(res) + ")", res);
        }
    }
    const double res = max_abs(f);
    if (res <= settings.tolerance) {
        return {theta, settings.max_iterations, res, false};
    }
    throw SolverError("Newton solver did not converge in " + std::to_string(settings.max_iterations) +
                          " iterations (residual " + fmt(res) + ")",
                      res);
}

}  // namespace polyboot
