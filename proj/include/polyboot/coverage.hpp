#pragma once

#include "polyboot/bootstrap.hpp"
#include "polyboot/estimator_spec.hpp"
#include "polyboot/rng.hpp"
#include "polyboot/sample.hpp"

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace polyboot {

/// Latent-variable dyadic DGP: C_1..C_n iid N(0, latent_sd^2 I_d), and
/// X_ij = link(C_i, C_j, noise) on the full ordered-pair index set.
struct SyntheticDGP {
    using Link = std::function<void(std::span<const double>, std::span<const double>, Stream&, std::span<double>)>;

    std::string name;
    std::size_t n = 0;
    std::size_t latent_dim = 1;
    double latent_sd = 1.0;
    std::vector<std::string> variable_names;
    Link link;
};

/// Every row equals `value`, column "x".
SyntheticDGP constant_dgp(std::size_t n, double value);
/// x_ij = C_i + noise_sd * eps.
SyntheticDGP sender_dgp(std::size_t n, double noise_sd);
/// x_ij = C_i + C_j + sigma_eps * eps, C ~ N(0, sigma_c^2).
SyntheticDGP unit_effects_dgp(std::size_t n, double sigma_c, double sigma_eps);
/// x_ij = A_i + A_j + eta, y_ij = beta0 + beta1 x_ij + U_i + U_j + sigma_eps * eps,
/// with A, U ~ N(0, sigma_c^2) and eta ~ N(0, 1). Columns y, x.
SyntheticDGP regression_dgp(std::size_t n, double beta0, double beta1, double sigma_c, double sigma_eps);

/// Replication r of the DGP; unit labels u0..u{n-1}.
PolyadicSample generate_synthetic(const SyntheticDGP& dgp, std::uint64_t seed, std::uint64_t r);

/// Dyadic sample in which unit k appears counts[k] times: each copy becomes
/// its own unit and each observed (k, l) row is emitted once per pair of
/// copies. Copies of the same unit share no dyads.
PolyadicSample pigeonhole_replicate(const PolyadicSample& sample, const std::vector<double>& counts);

/// pigeonhole_replicate with multinomial counts from (seed, r); degenerate
/// draws are redrawn up to 100 times before DgpError.
PolyadicSample pigeonhole_dgp_resample(const PolyadicSample& sample, std::uint64_t seed, std::uint64_t r);

enum class CoverageMethod { bayes, pigeonhole, naive, graham };
std::string method_name(CoverageMethod m);
CoverageMethod parse_method(const std::string& name);

struct CoverageConfig {
    enum class Source { synthetic, pigeonhole_of };
    Source source = Source::synthetic;
    std::optional<SyntheticDGP> dgp;
    /// Source sample for Source::pigeonhole_of.
    const PolyadicSample* sample = nullptr;
    EstimatorSpec spec;
    std::vector<CoverageMethod> methods{CoverageMethod::bayes};
    std::size_t replications = 100;
    std::size_t draws = 500;
    double level = 0.95;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    /// Estimand; when absent it is the point estimate on the source sample
    /// (pigeonhole) or on a reference sample of about 10^6 dyads (synthetic).
    std::optional<ParamVector> truth;
    /// Called after each finished replication with (done, total).
    std::function<void(std::size_t, std::size_t)> progress;
};

struct MethodCoverage {
    CoverageMethod method = CoverageMethod::bayes;
    /// Replications with an interval for this method.
    std::size_t evaluated = 0;
    std::size_t failures = 0;
    std::size_t skipped = 0;
    std::string skip_reason;
    std::map<std::string, std::size_t> failure_reasons;
    /// Per parameter.
    Vector coverage;
    Vector mean_width;
};

struct CoverageReport {
    double level = 0.95;
    std::size_t replications = 0;
    std::size_t draws = 0;
    std::uint64_t seed = 0;
    std::string source;
    std::vector<std::string> param_names;
    ParamVector truth;
    /// Replications whose data could not be generated or estimated.
    std::size_t data_failures = 0;
    /// Mean and SD of the point estimates across replications.
    ParamVector mean_estimate;
    Vector estimate_sd;
    std::vector<MethodCoverage> methods;
};

/// Cover test with a relative slack of 1e-9 so that degenerate intervals at
/// the truth count as covering.
bool interval_covers(double lower, double upper, double truth);

CoverageReport run_coverage(const CoverageConfig& config);

}  // namespace polyboot
