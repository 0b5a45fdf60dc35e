#pragma once

#include "polyboot/bootstrap.hpp"
#include "polyboot/counterfactual.hpp"
#include "polyboot/coverage.hpp"
#include "polyboot/variance.hpp"

#include <json.hpp>

#include <iosfwd>
#include <vector>

namespace polyboot {

using Json = nlohmann::ordered_json;

Json to_json(const Vector& v);
Json to_json(const Matrix& m);

struct BootstrapReportOptions {
    std::vector<double> levels{0.95};
    bool emit_draws = false;
    std::size_t histogram_bins = 20;
};

Json bootstrap_report(const BootstrapResult& result, const BootstrapReportOptions& options);
Json variance_report(const VarianceEstimate& v, const std::vector<std::string>& param_names);
Json counterfactual_report(const PredictionDraws& preds, const CounterfactualSummary& summary, bool emit_draws);
Json coverage_report(const CoverageReport& report);
Json atoms_report(const DiscreteAtomSet& atoms, const PolyadicSample& sample);

/// Long-format CSV tables: parameter,level,lower,upper / method,parameter,coverage,...
void bootstrap_csv(const BootstrapResult& result, const std::vector<double>& levels, std::ostream& out);
void coverage_csv(const CoverageReport& report, std::ostream& out);

}  // namespace polyboot
