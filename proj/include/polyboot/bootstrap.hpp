#pragma once

#include "polyboot/estimator_spec.hpp"
#include "polyboot/sample.hpp"
#include "polyboot/weights.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace polyboot {

enum class Scheme { bayes, pigeonhole, prior };

std::string scheme_name(Scheme scheme);
Scheme parse_scheme(const std::string& name);

struct BootstrapOptions {
    Scheme scheme = Scheme::bayes;
    /// Prior precision for Scheme::prior.
    double alpha = 0.0;
    std::size_t draws = 1000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    /// Multiply in an independent draw per cluster level.
    bool multiway = false;
    /// Dirichlet weights within each exchangeability group.
    bool grouped = false;
    /// More failed draws than this fraction of B raises BootstrapError.
    double max_failure_fraction = 0.2;
};

struct DrawRecord {
    std::uint64_t index = 0;
    bool ok = false;
    int iterations = 0;
    bool precision_floor = false;
    bool ridged = false;
    /// Observations that received exactly zero weight.
    std::size_t zero_weight = 0;
    std::string failure;
};

struct BootstrapResult {
    std::string method;
    Scheme scheme = Scheme::bayes;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    std::size_t B = 0;
    std::vector<std::string> param_names;
    ParamVector point_estimate;
    /// Successful draws in draw-index order, (B - failed) x K.
    Matrix draws;
    std::vector<std::uint64_t> draw_indices;
    std::size_t failed = 0;
    std::map<std::string, std::size_t> failure_reasons;
    std::vector<DrawRecord> records;

    std::size_t successful() const noexcept { return static_cast<std::size_t>(draws.rows()); }
};

struct CredibleInterval {
    double level = 0.95;
    Vector lower;
    Vector upper;
};

/// Observation weights of draw b under the given scheme.
ObservationWeights draw_weights(const PolyadicSample& sample, const BootstrapOptions& options, std::uint64_t b);

/// Runs B draws of the estimator on resampled weights. Failed draws
/// (degenerate weights, solver failures, singular matrices) are recorded and
/// left out of `draws`.
BootstrapResult run_bootstrap(const Estimator& estimator, const BootstrapOptions& options);
BootstrapResult run_bootstrap(const PolyadicSample& sample, const EstimatorSpec& spec, const BootstrapOptions& options);

/// Same as run_bootstrap with Gamma(alpha/n, 1) unit draws.
BootstrapResult run_marginal_prior(const Estimator& estimator, double alpha, std::size_t draws, std::uint64_t seed,
                                   unsigned threads = 0);

/// Linear-interpolation quantile of sorted values, inclusive endpoints.
double quantile_sorted(const std::vector<double>& sorted, double p);
double quantile(std::vector<double> values, double p);

/// Equal-tailed interval from the (1-level)/2 and (1+level)/2 quantiles.
CredibleInterval credible_interval(const BootstrapResult& result, double level);
CredibleInterval credible_interval(const Matrix& draws, double level);

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(std::vector<double> a, std::vector<double> b);
/// Asymptotic two-sample critical value c(alpha) sqrt((m + n) / (m n)).
double ks_critical_value(std::size_t m, std::size_t n, double alpha);

struct Histogram {
    std::vector<double> edges;
    std::vector<std::size_t> counts;
};
Histogram histogram(const std::vector<double>& values, std::size_t bins);

/// Discrete distribution over parameter values.
struct DiscreteAtomSet {
    struct Atom {
        ParamVector location;
        double mass = 0.0;
        /// Units of the pair that produced the atom.
        UnitId first = 0;
        UnitId second = 0;
        bool both_directions = false;
    };
    std::vector<Atom> atoms;
};

enum class AtomRule {
    /// Midpoint of chi evaluated at each direction of the pair.
    midpoint,
    /// chi evaluated at the average of the two directions' features.
    pair_mean,
};

using FeatureMap = std::function<Vector(std::span<const double>)>;
using MeanMap = std::function<ParamVector(const Vector&)>;

/// Atoms of the limiting marginal prior of chi(E[rho(X)]) for dyadic data: one
/// atom per unordered pair with at least one observed direction, masses
/// uniform over those pairs. A pair seen in one direction contributes chi at
/// that single observation.
DiscreteAtomSet limiting_prior_atoms(const PolyadicSample& sample, const FeatureMap& rho, const MeanMap& chi,
                                     AtomRule rule = AtomRule::midpoint);

/// Fraction of draws within `tolerance` (max norm) of some atom.
double mass_near_atoms(const Matrix& draws, const DiscreteAtomSet& atoms, double tolerance);

}  // namespace polyboot
