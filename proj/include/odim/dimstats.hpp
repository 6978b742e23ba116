#pragma once

#include "odim/embstore.hpp"

#include <cstddef>
#include <vector>

namespace odim {

// A dimension is an outlier when its variance is at least this multiple of
// the average per-dimension variance (outliers included in the average).
inline constexpr double outlier_ratio = 5.0;

struct DimStats {
    std::size_t dims = 0;
    std::vector<double> means;
    std::vector<double> variances;  // population variance (divide by n)
    double mean_variance = 0.0;
    std::vector<bool> outlier_mask;
    // Max-variance dimension, lowest index on ties. Defined whether or not
    // it passes the outlier test.
    std::size_t principal = 0;

    double outlier_threshold() const noexcept { return outlier_ratio * mean_variance; }
    std::vector<std::size_t> outlier_dims() const;
};

DimStats compute_stats(const EmbeddingSet & set);

// Builds the derived fields (mean_variance, mask, principal) from raw
// per-dimension moments.
DimStats stats_from_moments(std::vector<double> means, std::vector<double> variances);

std::size_t count_outliers(const DimStats & stats);

// 100 * #{i : var[i] < var[dim]} / d, rounded half-up.
int variance_percentile(const DimStats & stats, std::size_t dim);

}  // namespace odim
