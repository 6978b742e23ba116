#include "odim/dimstats.hpp"

#include "odim/errors.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

namespace odim {

std::vector<std::size_t> DimStats::outlier_dims() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < outlier_mask.size(); ++i) {
        if (outlier_mask[i]) out.push_back(i);
    }
    return out;
}

DimStats stats_from_moments(std::vector<double> means, std::vector<double> variances) {
    DimStats s;
    s.dims = variances.size();
    s.means = std::move(means);
    s.variances = std::move(variances);
    s.mean_variance = s.dims == 0 ? 0.0
                                  : std::accumulate(s.variances.begin(), s.variances.end(), 0.0) /
                                        static_cast<double>(s.dims);
    const double threshold = s.outlier_threshold();
    s.outlier_mask.resize(s.dims);
    for (std::size_t i = 0; i < s.dims; ++i) {
        // All-zero variances must not mark everything (0 >= 0).
        s.outlier_mask[i] = s.variances[i] > 0.0 && s.variances[i] >= threshold;
    }
    s.principal = static_cast<std::size_t>(std::max_element(s.variances.begin(), s.variances.end()) -
                                           s.variances.begin());
    return s;
}

DimStats compute_stats(const EmbeddingSet & set) {
    const std::size_t d = set.dims();
    std::vector<double> mean(d, 0.0);
    std::vector<double> m2(d, 0.0);

    // Welford, streaming over rows so the row-major matrix is read once.
    for (std::size_t r = 0; r < set.rows(); ++r) {
        const auto row = set.row(r);
        const double count = static_cast<double>(r + 1);
        for (std::size_t j = 0; j < d; ++j) {
            const double x = row[j];
            const double delta = x - mean[j];
            mean[j] += delta / count;
            m2[j] += delta * (x - mean[j]);
        }
    }
    const double n = static_cast<double>(set.rows());
    for (auto & v : m2) v = std::max(0.0, v / n);
    return stats_from_moments(std::move(mean), std::move(m2));
}

std::size_t count_outliers(const DimStats & stats) {
    return static_cast<std::size_t>(std::count(stats.outlier_mask.begin(), stats.outlier_mask.end(), true));
}

int variance_percentile(const DimStats & stats, std::size_t dim) {
    if (dim >= stats.dims) {
        throw analysis_error(fmt::format("dimension {} out of range (d = {})", dim, stats.dims));
    }
    const double v = stats.variances[dim];
    const auto below = static_cast<std::size_t>(
        std::count_if(stats.variances.begin(), stats.variances.end(), [v](double x) { return x < v; }));
    return static_cast<int>((200 * below + stats.dims) / (2 * stats.dims));
}

}  // namespace odim
