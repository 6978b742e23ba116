#include "odim/persistence.hpp"

#include "odim/errors.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace odim {

namespace {

void check_runs(std::span<const EmbeddingSet> runs) {
    if (runs.empty()) throw analysis_error("no runs to aggregate");
    const auto & first = runs.front();
    for (const auto & run : runs) {
        if (run.meta().model_name != first.meta().model_name) {
            throw analysis_error(fmt::format("cannot aggregate runs of '{}' with runs of '{}'",
                                             run.meta().model_name, first.meta().model_name));
        }
        if (run.dims() != first.dims()) {
            throw analysis_error(fmt::format("model '{}' has runs with d = {} and d = {}", first.meta().model_name,
                                             first.dims(), run.dims()));
        }
    }
}

std::vector<DimStats> stats_of(std::span<const EmbeddingSet> runs) {
    std::vector<DimStats> out;
    out.reserve(runs.size());
    for (const auto & run : runs) out.push_back(compute_stats(run));
    return out;
}

StageSummary summarize(const std::string & model_name, std::span<const DimStats> runs) {
    const PersistenceTable table = aggregate_stats(model_name, runs);
    StageSummary s;
    s.runs = runs.size();
    s.unique_outliers = table.unique_outliers();
    for (const auto & [dim, count] : table.per_dim_counts) s.outlier_dims.insert(dim);
    double total = 0.0;
    for (const auto & st : runs) total += st.variances[st.principal];
    s.avg_var_rho = total / static_cast<double>(runs.size());
    return s;
}

}  // namespace

double PersistenceTable::frequency(std::size_t dim) const {
    const auto it = per_dim_counts.find(dim);
    if (it == per_dim_counts.end() || runs_total == 0) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(runs_total);
}

std::map<std::size_t, double> PersistenceTable::per_dim_frequency() const {
    std::map<std::size_t, double> out;
    for (const auto & [dim, count] : per_dim_counts) out.emplace(dim, frequency(dim));
    return out;
}

void PersistenceTable::merge(const PersistenceTable & other) {
    if (other.model_name != model_name || other.dims != dims) {
        throw analysis_error(fmt::format("cannot merge '{}' (d = {}) into '{}' (d = {})", other.model_name,
                                         other.dims, model_name, dims));
    }
    runs_total += other.runs_total;
    for (const auto & [dim, count] : other.per_dim_counts) per_dim_counts[dim] += count;
}

PersistenceTable aggregate_stats(const std::string & model_name, std::span<const DimStats> runs) {
    if (runs.empty()) throw analysis_error("no runs to aggregate");
    PersistenceTable table;
    table.model_name = model_name;
    table.dims = runs.front().dims;
    for (const auto & st : runs) {
        if (st.dims != table.dims) {
            throw analysis_error(fmt::format("model '{}' has runs with d = {} and d = {}", model_name, table.dims,
                                             st.dims));
        }
        ++table.runs_total;
        for (std::size_t dim : st.outlier_dims()) ++table.per_dim_counts[dim];
    }
    return table;
}

PersistenceTable aggregate(std::span<const EmbeddingSet> runs) {
    check_runs(runs);
    const auto stats = stats_of(runs);
    return aggregate_stats(runs.front().meta().model_name, stats);
}

StageComparison compare_stage_stats(const std::string & model_name, std::span<const DimStats> pretrained,
                                    std::span<const DimStats> finetuned) {
    if (pretrained.empty() || finetuned.empty()) throw analysis_error("both stages need at least one run");
    if (pretrained.front().dims != finetuned.front().dims) {
        throw analysis_error(fmt::format("model '{}' has pretrained d = {} but finetuned d = {}", model_name,
                                         pretrained.front().dims, finetuned.front().dims));
    }
    StageComparison cmp;
    cmp.pre = summarize(model_name, pretrained);
    cmp.fine = summarize(model_name, finetuned);
    std::set_intersection(cmp.pre.outlier_dims.begin(), cmp.pre.outlier_dims.end(), cmp.fine.outlier_dims.begin(),
                          cmp.fine.outlier_dims.end(), std::inserter(cmp.persisted_dims, cmp.persisted_dims.end()));
    return cmp;
}

StageComparison compare_stages(std::span<const EmbeddingSet> pretrained, std::span<const EmbeddingSet> finetuned) {
    check_runs(pretrained);
    check_runs(finetuned);
    if (pretrained.front().meta().model_name != finetuned.front().meta().model_name) {
        throw analysis_error(fmt::format("stages belong to different models: '{}' vs '{}'",
                                         pretrained.front().meta().model_name,
                                         finetuned.front().meta().model_name));
    }
    const auto pre = stats_of(pretrained);
    const auto fine = stats_of(finetuned);
    return compare_stage_stats(pretrained.front().meta().model_name, pre, fine);
}

std::vector<DimFrequency> top_k_report(const PersistenceTable & table, std::size_t k) {
    std::vector<DimFrequency> out;
    out.reserve(table.per_dim_counts.size());
    for (const auto & [dim, count] : table.per_dim_counts) out.push_back({dim, count, table.frequency(dim)});
    // map iteration is already ascending by dim; stable sort keeps that on ties
    std::stable_sort(out.begin(), out.end(),
                     [](const DimFrequency & a, const DimFrequency & b) { return a.count > b.count; });
    if (out.size() > k) out.resize(k);
    return out;
}

}  // namespace odim
