#pragma once

#include "odim/dimstats.hpp"
#include "odim/embstore.hpp"
#include "odim/onedim.hpp"
#include "odim/persistence.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace odim {

using json = nlohmann::json;

json metadata_json(const RunMetadata & meta);

// {means, variances, mean_variance, outlier_dims, principal, ...}
json stats_report(const DimStats & stats);
std::string stats_csv(const DimStats & stats);  // dim,mean,variance

// "full/oned Δx.xx" with both accuracies in percent; an improvement is
// written with an explicit sign ("Δ+2.56").
std::string format_delta_cell(double full_percent, double oned_percent);

json rule_json(const ThresholdRule & rule);
json principal_report(const PrincipalResult & result, const EmbeddingSet & val);
json sweep_summary(const SweepResult & sweep);
std::string sweep_csv(const SweepResult & sweep);  // dim,variance,variance_percentile,val_accuracy

json persistence_report(const PersistenceTable & table, std::span<const DimFrequency> top,
                        const std::optional<StageComparison> & stages);
std::string persistence_csv(const PersistenceTable & table);  // dim,count,frequency

// Per-dimension mean against dimension index.
std::string activation_svg(std::span<const double> means, const std::string & title);

// Variance against validation accuracy, one point per dimension, with the
// outlier threshold drawn as a dashed vertical line.
std::string sweep_scatter_svg(const SweepResult & sweep, const std::string & title);

struct FrequencyPanel {
    std::string model_name;
    std::vector<DimFrequency> top;
};

// Horizontal bars: frequency on x, dimension index on y.
std::string frequency_bars_svg(std::span<const FrequencyPanel> panels);

}  // namespace odim
