#pragma once

#include "polyboot/bootstrap.hpp"
#include "polyboot/sample.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace polyboot {

/// g(data, theta) with `arity` outputs. Must be deterministic.
struct CounterfactualFn {
    std::string name;
    std::size_t arity = 1;
    std::vector<std::string> output_names;
    std::function<Vector(const PolyadicSample&, const ParamVector&)> eval;
};

/// g(theta) = theta.
CounterfactualFn identity_counterfactual(const std::vector<std::string>& param_names);

/// g(theta) = exp(theta[param] * mean of `column` over the sample).
CounterfactualFn toy_growth(const PolyadicSample& sample, const std::string& column, std::size_t param);

/// Name -> factory. A spec string is `name[:args]`; the factory receives the
/// sample, the estimator's parameter names and the text after the first colon.
class CounterfactualRegistry {
public:
    using Factory = std::function<CounterfactualFn(const PolyadicSample&, const std::vector<std::string>&,
                                                   const std::string&)>;

    /// Registry holding `identity` and `toy-growth:<column>[:<param>]`.
    static CounterfactualRegistry with_builtins();

    void add(const std::string& name, Factory factory);
    bool contains(const std::string& name) const { return factories_.count(name) > 0; }
    std::vector<std::string> names() const;
    CounterfactualFn make(const std::string& spec, const PolyadicSample& sample,
                          const std::vector<std::string>& param_names) const;

private:
    std::map<std::string, Factory> factories_;
};

struct PredictionDraws {
    std::string name;
    std::vector<std::string> output_names;
    std::string source_method;
    /// g at the point estimate.
    Vector point;
    /// One row per successful theta draw with finite output.
    Matrix draws;
    std::vector<std::uint64_t> draw_indices;
    /// Draws dropped because g returned non-finite values or threw.
    std::size_t dropped = 0;
};

/// Evaluates g on the original sample at every theta draw.
PredictionDraws propagate(const PolyadicSample& sample, const BootstrapResult& result, const CounterfactualFn& g,
                          unsigned threads = 0);

struct Exceedance {
    double threshold = 0.0;
    /// Fraction of draws strictly above the threshold.
    double probability = 0.0;
    /// Monte Carlo standard error sqrt(p (1 - p) / B).
    double mc_se = 0.0;
};

struct OutputSummary {
    std::string name;
    double point = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    double skewness = 0.0;
    std::vector<Exceedance> exceedance;
};

struct CounterfactualSummary {
    double level = 0.95;
    std::size_t draws = 0;
    std::size_t dropped = 0;
    std::vector<OutputSummary> outputs;
};

CounterfactualSummary summarize(const PredictionDraws& preds, double level, const std::vector<double>& thresholds);

/// Fraction of draws whose outputs are ordered as at the point prediction.
double ranking_stability(const PredictionDraws& preds);

}  // namespace polyboot
