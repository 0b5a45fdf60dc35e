#include "polyboot/variance.hpp"

#include "polyboot/errors.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace polyboot {

namespace {

Matrix average_jacobian(const MomentFunction& moment, const PolyadicSample& sample, const ParamVector& theta) {
    const auto w = uniform_weights(sample);
    return moment_jacobian(moment, sample, w.values, theta);
}

Matrix invert_jacobian(const Matrix& s1) {
    const Eigen::JacobiSVD<Matrix> svd(s1);
    const Vector sv = svd.singularValues();
    const double smax = sv.size() ? sv.maxCoeff() : 0.0;
    const double smin = sv.size() ? sv.minCoeff() : 0.0;
    if (!(smax > 0.0) || !(smin > 1e-12 * smax)) {
        throw SingularJacobian("average moment Jacobian is singular");
    }
    return s1.fullPivLu().inverse();
}

void finish(VarianceEstimate& v, const Matrix& A, const Matrix& meat, double scale) {
    Matrix cov = scale * A * meat * A.transpose();
    cov = 0.5 * (cov + cov.transpose());
    for (Eigen::Index j = 0; j < cov.rows(); ++j) {
        if (cov(j, j) < 0.0) {
            cov(j, j) = 0.0;
            v.clamped = true;
        }
    }
    v.covariance = std::move(cov);
}

}  // namespace

VarianceEstimate graham_variance(const MomentFunction& moment, const PolyadicSample& sample,
                                 const ParamVector& theta_hat) {
    if (sample.order() != 2) {
        throw Unsupported("Graham variance needs dyadic data");
    }
    if (sample.has_cluster()) {
        throw Unsupported("Graham variance does not support a cluster dimension");
    }
    if (!sample.is_full_index_set()) {
        throw Unsupported("Graham variance needs every ordered pair observed (sample has missing dyads)");
    }
    if (!moment.just_identified()) {
        throw ParamError("Graham variance needs a just-identified moment");
    }
    const std::size_t n = sample.n_units();
    const auto L = static_cast<Eigen::Index>(moment.num_moments);

    VarianceEstimate v;
    v.method = "graham";
    v.sigma1 = average_jacobian(moment, sample, theta_hat);
    const Matrix A = invert_jacobian(v.sigma1);

    const Matrix psi = moment_matrix(moment, sample, theta_hat);
    Matrix S = Matrix::Zero(L, static_cast<Eigen::Index>(n));
    Matrix P3 = Matrix::Zero(L, L);
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const auto t = sample.tuple(i);
        if (t[0] > t[1]) {
            continue;
        }
        const auto rev = sample.reverse_of(i);
        const Vector phi = 0.5 * (psi.row(static_cast<Eigen::Index>(i)) + psi.row(static_cast<Eigen::Index>(*rev)))
                                     .transpose();
        P3.noalias() += phi * phi.transpose();
        S.col(t[0]) += phi;
        S.col(t[1]) += phi;
    }
    const double dn = static_cast<double>(n);
    const double pairs = dn * (dn - 1.0) / 2.0;
    const double triples = dn * (dn - 1.0) * (dn - 2.0) / 6.0;
    v.sigma3 = P3 / pairs;
    if (n >= 3) {
        v.sigma2 = (S * S.transpose() - 2.0 * P3) / (6.0 * triples);
    } else {
        v.sigma2 = Matrix::Zero(L, L);
    }
    v.sigma2 = 0.5 * (v.sigma2 + v.sigma2.transpose());
    const Matrix meat = 4.0 * v.sigma2 + (2.0 / (dn - 1.0)) * (v.sigma3 - 2.0 * v.sigma2);
    finish(v, A, meat, 1.0 / dn);
    return v;
}

VarianceEstimate naive_dyad_robust(const MomentFunction& moment, const PolyadicSample& sample,
                                   const ParamVector& theta_hat) {
    if (!moment.just_identified()) {
        throw ParamError("dyad-robust variance needs a just-identified moment");
    }
    const auto L = static_cast<Eigen::Index>(moment.num_moments);
    const double N = static_cast<double>(sample.size());
    VarianceEstimate v;
    v.method = "naive";
    v.sigma1 = average_jacobian(moment, sample, theta_hat);
    const Matrix A = invert_jacobian(v.sigma1);
    const Matrix psi = moment_matrix(moment, sample, theta_hat);
    v.sigma3 = psi.transpose() * psi / N;
    v.sigma2 = Matrix::Zero(L, L);
    finish(v, A, v.sigma3, 1.0 / N);
    return v;
}

VarianceEstimate select_parameters(const VarianceEstimate& v, const std::vector<std::size_t>& index) {
    VarianceEstimate out = v;
    const auto k = static_cast<Eigen::Index>(index.size());
    out.covariance.resize(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) {
            out.covariance(a, b) = v.covariance(static_cast<Eigen::Index>(index[static_cast<std::size_t>(a)]),
                                                static_cast<Eigen::Index>(index[static_cast<std::size_t>(b)]));
        }
    }
    return out;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw ParamError("normal quantile needs p in (0, 1)");
    }
    return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

Interval delta_method_interval(double gamma_hat, const Vector& gradient, const Matrix& covariance, double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw ParamError("level must lie strictly between 0 and 1");
    }
    if (!gradient.allFinite()) {
        throw ParamError("gradient has non-finite entries");
    }
    if (gradient.size() != covariance.rows() || covariance.rows() != covariance.cols()) {
        throw ParamError("gradient and covariance dimensions differ");
    }
    const double var = std::max(0.0, gradient.dot(covariance * gradient));
    const double half = normal_quantile(0.5 + level / 2.0) * std::sqrt(var);
    return {gamma_hat - half, gamma_hat + half};
}

Interval delta_method_interval(double gamma_hat, const Vector& gradient, const VarianceEstimate& variance,
                               double level) {
    return delta_method_interval(gamma_hat, gradient, variance.covariance, level);
}

Vector numeric_gradient(const std::function<double(const ParamVector&)>& g, const ParamVector& theta) {
    Vector grad(theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        const double h = 1e-6 * (1.0 + std::abs(theta[j]));
        ParamVector up = theta;
        ParamVector down = theta;
        up[j] += h;
        down[j] -= h;
        grad[j] = (g(up) - g(down)) / (up[j] - down[j]);
    }
    return grad;
}

}  // namespace polyboot
