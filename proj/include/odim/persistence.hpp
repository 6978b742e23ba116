#pragma once

#include "odim/dimstats.hpp"
#include "odim/embstore.hpp"

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace odim {

// Outlier occurrence counts for one model across a set of runs.
struct PersistenceTable {
    std::string model_name;
    std::size_t dims = 0;
    std::size_t runs_total = 0;
    std::map<std::size_t, std::size_t> per_dim_counts;  // only dims with count >= 1

    double frequency(std::size_t dim) const;
    std::map<std::size_t, double> per_dim_frequency() const;
    std::size_t unique_outliers() const noexcept { return per_dim_counts.size(); }

    // Folds another table for the same model and width into this one.
    void merge(const PersistenceTable & other);
};

PersistenceTable aggregate(std::span<const EmbeddingSet> runs);
// Same, from already computed statistics.
PersistenceTable aggregate_stats(const std::string & model_name, std::span<const DimStats> runs);

struct StageSummary {
    std::size_t runs = 0;
    std::size_t unique_outliers = 0;
    double avg_var_rho = 0.0;  // mean over runs of variances[principal]
    std::set<std::size_t> outlier_dims;
};

struct StageComparison {
    StageSummary pre;
    StageSummary fine;
    std::set<std::size_t> persisted_dims;
};

StageComparison compare_stages(std::span<const EmbeddingSet> pretrained, std::span<const EmbeddingSet> finetuned);
StageComparison compare_stage_stats(const std::string & model_name, std::span<const DimStats> pretrained,
                                    std::span<const DimStats> finetuned);

struct DimFrequency {
    std::size_t dim = 0;
    std::size_t count = 0;
    double frequency = 0.0;

    bool operator==(const DimFrequency &) const = default;
};

// Descending count, ascending dim on ties, at most k entries.
std::vector<DimFrequency> top_k_report(const PersistenceTable & table, std::size_t k);

}  // namespace odim
