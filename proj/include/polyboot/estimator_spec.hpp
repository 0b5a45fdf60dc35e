#pragma once

#include "polyboot/estimators.hpp"
#include "polyboot/gmm.hpp"
#include "polyboot/moments.hpp"
#include "polyboot/sample.hpp"

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace polyboot {

struct MeanSpec {
    std::string column;
};

struct OlsSpec {
    std::string y;
    std::vector<std::string> x;
    bool intercept = false;
};

struct PpmlSpec {
    std::string y;
    std::vector<std::string> x;
    bool intercept = false;
};

/// GMM over a built-in moment (`ols`, `ppml`, `linear-iv`) or a custom one.
struct GmmSpec {
    std::string moment = "linear-iv";
    std::string y;
    std::vector<std::string> x;
    std::vector<std::string> z;
    bool intercept = false;
    std::function<MomentFunction(const PolyadicSample&)> custom;
    GmmSettings settings{};
};

struct EstimatorSpec {
    std::variant<MeanSpec, OlsSpec, PpmlSpec, GmmSpec> variant;
    SolverSettings solver{};

    std::string kind() const;
};

/// Builds a built-in moment by name.
MomentFunction builtin_moment(const std::string& name, const PolyadicSample& sample, const std::string& y,
                              const std::vector<std::string>& x, const std::vector<std::string>& z, bool intercept);

struct EstimateOutcome {
    ParamVector theta;
    int iterations = 0;
    bool precision_floor = false;
    bool ridged = false;
};

/// Just-identified system whose root contains the estimator. For an
/// over-identified two-step GMM this is the stacked system, and `theta_index`
/// picks the second-step parameters out of its unknowns.
struct ZSystem {
    MomentFunction moment;
    std::vector<std::size_t> theta_index;
    ParamVector point;
};

/// An EstimatorSpec bound to one sample. Column lookups and design matrices
/// are resolved once; evaluate() is const and safe to call concurrently.
class Estimator {
public:
    static Estimator bind(const EstimatorSpec& spec, const PolyadicSample& sample);

    EstimateOutcome evaluate(const ObservationWeights& weights) const;
    ParamVector estimate(const ObservationWeights& weights) const { return evaluate(weights).theta; }

    const std::vector<std::string>& param_names() const noexcept { return state_->param_names; }
    std::size_t dimension() const noexcept { return state_->param_names.size(); }
    const EstimatorSpec& spec() const noexcept { return state_->spec; }
    const PolyadicSample& sample() const noexcept { return *state_->sample; }
    /// Moment equations of the estimator (the mean, OLS and PPML scores for
    /// those variants).
    const MomentFunction& moment() const noexcept { return state_->moment; }

    /// Just-identified system at uniform weights, with its root at `theta`.
    /// Iterated and ACM-weighted GMM have no such system (Unsupported).
    ZSystem z_system(const ParamVector& theta) const;

private:
    struct State {
        EstimatorSpec spec;
        const PolyadicSample* sample = nullptr;
        std::vector<std::string> param_names;
        MomentFunction moment;
        std::size_t column = 0;
        Matrix X;
        Vector y;
    };
    std::shared_ptr<const State> state_;
};

}  // namespace polyboot
