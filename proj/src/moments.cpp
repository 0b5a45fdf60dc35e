#include "polyboot/moments.hpp"

#include "polyboot/errors.hpp"
#include "polyboot/estimators.hpp"

#include <cmath>

namespace polyboot {

namespace {

void fill_regressors(std::span<const double> obs, const RegressionColumns& cols, Eigen::Ref<Vector> out) {
    Eigen::Index j = 0;
    if (cols.intercept) {
        out[j++] = 1.0;
    }
    for (const auto c : cols.x) {
        out[j++] = obs[c];
    }
}

void fill_instruments(std::span<const double> obs, const RegressionColumns& cols, Eigen::Ref<Vector> out) {
    Eigen::Index j = 0;
    if (cols.intercept) {
        out[j++] = 1.0;
    }
    for (const auto c : cols.z) {
        out[j++] = obs[c];
    }
}

double linear_index(std::span<const double> obs, const RegressionColumns& cols, const ParamVector& theta) {
    double eta = 0.0;
    Eigen::Index j = 0;
    if (cols.intercept) {
        eta += theta[j++];
    }
    for (const auto c : cols.x) {
        eta += theta[j++] * obs[c];
    }
    return eta;
}

}  // namespace

RegressionColumns RegressionColumns::resolve(const PolyadicSample& sample, const std::string& y,
                                             const std::vector<std::string>& x, bool intercept,
                                             const std::vector<std::string>& z) {
    RegressionColumns cols;
    cols.y = sample.column_index(y);
    for (const auto& name : x) {
        cols.x.push_back(sample.column_index(name));
    }
    for (const auto& name : z) {
        cols.z.push_back(sample.column_index(name));
    }
    cols.intercept = intercept;
    if (cols.num_regressors() == 0) {
        throw ParamError("regression needs at least one regressor");
    }
    return cols;
}

std::vector<std::string> RegressionColumns::param_names(const PolyadicSample& sample) const {
    std::vector<std::string> names;
    if (intercept) {
        names.emplace_back(kInterceptName);
    }
    for (const auto c : x) {
        names.push_back(sample.variable_names()[c]);
    }
    return names;
}

Matrix design_matrix(const PolyadicSample& sample, const RegressionColumns& cols) {
    Matrix X(static_cast<Eigen::Index>(sample.size()), static_cast<Eigen::Index>(cols.num_regressors()));
    for (std::size_t i = 0; i < sample.size(); ++i) {
        Vector r(X.cols());
        fill_regressors(sample.row(i), cols, r);
        X.row(static_cast<Eigen::Index>(i)) = r.transpose();
    }
    return X;
}

Matrix instrument_matrix(const PolyadicSample& sample, const RegressionColumns& cols) {
    Matrix Z(static_cast<Eigen::Index>(sample.size()), static_cast<Eigen::Index>(cols.num_instruments()));
    for (std::size_t i = 0; i < sample.size(); ++i) {
        Vector r(Z.cols());
        fill_instruments(sample.row(i), cols, r);
        Z.row(static_cast<Eigen::Index>(i)) = r.transpose();
    }
    return Z;
}

MomentFunction mean_moment(const PolyadicSample& sample, const std::string& column) {
    const auto c = sample.column_index(column);
    MomentFunction m;
    m.name = "mean";
    m.num_moments = 1;
    m.num_params = 1;
    m.param_names = {column};
    m.eval = [c](std::span<const double> obs, const ParamVector& theta, Eigen::Ref<Vector> out) {
        out[0] = obs[c] - theta[0];
    };
    m.jacobian = [](std::span<const double>, const ParamVector&, Eigen::Ref<Matrix> out) { out(0, 0) = -1.0; };
    m.initial = [c](const PolyadicSample& s, const ObservationWeights& w) {
        ParamVector t(1);
        t[0] = weighted_mean(s, w, c);
        return t;
    };
    return m;
}

MomentFunction ols_moment(const PolyadicSample& sample, const std::string& y, const std::vector<std::string>& x,
                          bool intercept) {
    const auto cols = RegressionColumns::resolve(sample, y, x, intercept);
    const auto k = static_cast<Eigen::Index>(cols.num_regressors());
    MomentFunction m;
    m.name = "ols";
    m.num_moments = cols.num_regressors();
    m.num_params = cols.num_regressors();
    m.param_names = cols.param_names(sample);
    m.eval = [cols, k](std::span<const double> obs, const ParamVector& theta, Eigen::Ref<Vector> out) {
        Vector r(k);
        fill_regressors(obs, cols, r);
        out = (obs[cols.y] - r.dot(theta)) * r;
    };
    m.jacobian = [cols, k](std::span<const double> obs, const ParamVector&, Eigen::Ref<Matrix> out) {
        Vector r(k);
        fill_regressors(obs, cols, r);
        out = -r * r.transpose();
    };
    m.residual = [cols](std::span<const double> obs, const ParamVector& theta) {
        return obs[cols.y] - linear_index(obs, cols, theta);
    };
    m.instruments = [cols](std::span<const double> obs, Eigen::Ref<Vector> out) { fill_regressors(obs, cols, out); };
    m.initial = [cols](const PolyadicSample& s, const ObservationWeights& w) {
        return weighted_ols(design_matrix(s, cols), s.column(cols.y), w.values);
    };
    return m;
}

MomentFunction ppml_moment(const PolyadicSample& sample, const std::string& y, const std::vector<std::string>& x,
                           bool intercept) {
    const auto cols = RegressionColumns::resolve(sample, y, x, intercept);
    const auto k = static_cast<Eigen::Index>(cols.num_regressors());
    MomentFunction m;
    m.name = "ppml";
    m.num_moments = cols.num_regressors();
    m.num_params = cols.num_regressors();
    m.param_names = cols.param_names(sample);
    m.eval = [cols, k](std::span<const double> obs, const ParamVector& theta, Eigen::Ref<Vector> out) {
        Vector r(k);
        fill_regressors(obs, cols, r);
        out = (obs[cols.y] - std::exp(r.dot(theta))) * r;
    };
    m.jacobian = [cols, k](std::span<const double> obs, const ParamVector& theta, Eigen::Ref<Matrix> out) {
        Vector r(k);
        fill_regressors(obs, cols, r);
        out = -std::exp(r.dot(theta)) * r * r.transpose();
    };
    m.initial = [cols](const PolyadicSample& s, const ObservationWeights& w) {
        const Vector y = s.column(cols.y);
        return weighted_ols(design_matrix(s, cols), (y.array() + 1.0).log().matrix(), w.values);
    };
    return m;
}

MomentFunction linear_iv_moment(const PolyadicSample& sample, const std::string& y,
                                const std::vector<std::string>& x, const std::vector<std::string>& z,
                                bool intercept) {
    const auto cols = RegressionColumns::resolve(sample, y, x, intercept, z);
    if (cols.num_instruments() < cols.num_regressors()) {
        throw ParamError("linear-iv needs at least as many instruments as regressors");
    }
    const auto k = static_cast<Eigen::Index>(cols.num_regressors());
    const auto l = static_cast<Eigen::Index>(cols.num_instruments());
    MomentFunction m;
    m.name = "linear-iv";
    m.num_moments = cols.num_instruments();
    m.num_params = cols.num_regressors();
    m.param_names = cols.param_names(sample);
    m.eval = [cols, l](std::span<const double> obs, const ParamVector& theta, Eigen::Ref<Vector> out) {
        Vector zr(l);
        fill_instruments(obs, cols, zr);
        out = (obs[cols.y] - linear_index(obs, cols, theta)) * zr;
    };
    m.jacobian = [cols, k, l](std::span<const double> obs, const ParamVector&, Eigen::Ref<Matrix> out) {
        Vector zr(l);
        Vector r(k);
        fill_instruments(obs, cols, zr);
        fill_regressors(obs, cols, r);
        out = -zr * r.transpose();
    };
    m.residual = [cols](std::span<const double> obs, const ParamVector& theta) {
        return obs[cols.y] - linear_index(obs, cols, theta);
    };
    m.instruments = [cols](std::span<const double> obs, Eigen::Ref<Vector> out) { fill_instruments(obs, cols, out); };
    m.initial = [cols](const PolyadicSample& s, const ObservationWeights& w) {
        return weighted_ols(design_matrix(s, cols), s.column(cols.y), w.values);
    };
    return m;
}

Matrix moment_matrix(const MomentFunction& m, const PolyadicSample& sample, const ParamVector& theta) {
    Matrix out(static_cast<Eigen::Index>(sample.size()), static_cast<Eigen::Index>(m.num_moments));
    Vector buf(static_cast<Eigen::Index>(m.num_moments));
    for (std::size_t i = 0; i < sample.size(); ++i) {
        m.eval(sample.row(i), theta, buf);
        out.row(static_cast<Eigen::Index>(i)) = buf.transpose();
    }
    return out;
}

Vector moment_mean(const MomentFunction& m, const PolyadicSample& sample, const Vector& weights,
                   const ParamVector& theta) {
    Vector acc = Vector::Zero(static_cast<Eigen::Index>(m.num_moments));
    Vector buf(static_cast<Eigen::Index>(m.num_moments));
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double w = weights[static_cast<Eigen::Index>(i)];
        if (w == 0.0) {
            continue;
        }
        m.eval(sample.row(i), theta, buf);
        acc += w * buf;
    }
    return acc;
}

Matrix moment_jacobian(const MomentFunction& m, const PolyadicSample& sample, const Vector& weights,
                       const ParamVector& theta) {
    const auto l = static_cast<Eigen::Index>(m.num_moments);
    const auto k = static_cast<Eigen::Index>(m.num_params);
    if (m.has_jacobian()) {
        Matrix acc = Matrix::Zero(l, k);
        Matrix buf(l, k);
        for (std::size_t i = 0; i < sample.size(); ++i) {
            const double w = weights[static_cast<Eigen::Index>(i)];
            if (w == 0.0) {
                continue;
            }
            m.jacobian(sample.row(i), theta, buf);
            acc += w * buf;
        }
        return acc;
    }
    Matrix jac(l, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double h = 1e-6 * (1.0 + std::abs(theta[j]));
        ParamVector up = theta;
        ParamVector down = theta;
        up[j] += h;
        down[j] -= h;
        jac.col(j) = (moment_mean(m, sample, weights, up) - moment_mean(m, sample, weights, down)) / (up[j] - down[j]);
    }
    return jac;
}

Matrix numeric_observation_jacobian(const MomentFunction& m, std::span<const double> obs, const ParamVector& theta) {
    const auto l = static_cast<Eigen::Index>(m.num_moments);
    const auto k = static_cast<Eigen::Index>(m.num_params);
    Matrix jac(l, k);
    Vector f_up(l);
    Vector f_down(l);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double h = 1e-6 * (1.0 + std::abs(theta[j]));
        ParamVector up = theta;
        ParamVector down = theta;
        up[j] += h;
        down[j] -= h;
        m.eval(obs, up, f_up);
        m.eval(obs, down, f_down);
        jac.col(j) = (f_up - f_down) / (up[j] - down[j]);
    }
    return jac;
}

Matrix observation_jacobian(const MomentFunction& m, std::span<const double> obs, const ParamVector& theta) {
    if (!m.has_jacobian()) {
        return numeric_observation_jacobian(m, obs, theta);
    }
    Matrix jac(static_cast<Eigen::Index>(m.num_moments), static_cast<Eigen::Index>(m.num_params));
    m.jacobian(obs, theta, jac);
    return jac;
}

}  // namespace polyboot
