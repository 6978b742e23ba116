#include "odim/onedim.hpp"

#include "odim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include <boost/math/statistics/bivariate_statistics.hpp>
#include <fmt/format.h>

namespace odim {

namespace {

constexpr std::size_t max_grid_points = 10'000'000;

void require_both_classes(const EmbeddingSet & train) {
    const auto labels = train.labels();
    const auto ones = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
    if (ones == 0 || ones == labels.size()) {
        throw analysis_error(fmt::format("training data for {}/{} contains a single class; no threshold to fit",
                                         train.meta().model_name, train.meta().task_name));
    }
}

void require_dim(const EmbeddingSet & set, std::size_t dim) {
    if (dim >= set.dims()) {
        throw analysis_error(fmt::format("dimension {} out of range (d = {})", dim, set.dims()));
    }
}

void require_same_width(const EmbeddingSet & train, const EmbeddingSet & val) {
    if (train.dims() != val.dims()) {
        throw analysis_error(fmt::format("train has d = {} but validation has d = {}", train.dims(), val.dims()));
    }
}

double sample_mean(const EmbeddingSet & train, std::size_t dim, std::span<const std::size_t> sample) {
    double sum = 0.0;
    for (std::size_t r : sample) sum += train.value(r, dim);
    return sum / static_cast<double>(sample.size());
}

// Sorted column with a running count of label-1 rows, so the number of
// correct unflipped predictions at any threshold is two lookups.
class SortedColumn {
public:
    SortedColumn(const EmbeddingSet & set, std::size_t dim) {
        const std::size_t n = set.rows();
        std::vector<std::pair<double, std::uint8_t>> pairs(n);
        for (std::size_t r = 0; r < n; ++r) pairs[r] = {set.value(r, dim), set.label(r)};
        std::sort(pairs.begin(), pairs.end());
        values_.resize(n);
        ones_prefix_.resize(n + 1, 0);
        for (std::size_t i = 0; i < n; ++i) {
            values_[i] = pairs[i].first;
            ones_prefix_[i + 1] = ones_prefix_[i] + pairs[i].second;
        }
    }

    std::size_t size() const noexcept { return values_.size(); }

    std::size_t correct_unflipped(double threshold) const {
        const auto at_or_below = static_cast<std::size_t>(
            std::upper_bound(values_.begin(), values_.end(), threshold) - values_.begin());
        const std::size_t ones_below = ones_prefix_[at_or_below];
        const std::size_t zeros_below = at_or_below - ones_below;
        const std::size_t ones_above = ones_prefix_.back() - ones_below;
        return zeros_below + ones_above;
    }

private:
    std::vector<double> values_;
    std::vector<std::size_t> ones_prefix_;
};

ThresholdRule search_grid(const SortedColumn & column, std::size_t dim, double mu, std::span<const double> grid) {
    const std::size_t n = column.size();
    ThresholdRule best;
    best.dim = dim;
    best.mu = mu;
    std::size_t best_score = 0;
    std::size_t best_correct = 0;
    bool have = false;
    for (double eps : grid) {
        const std::size_t correct = column.correct_unflipped(mu + eps);
        const std::size_t score = std::max(correct, n - correct);
        if (!have || score > best_score) {
            have = true;
            best_score = score;
            best_correct = correct;
            best.epsilon = eps;
        }
    }
    best.flipped = n - best_correct > best_correct;
    best.train_accuracy = static_cast<double>(best_score) / static_cast<double>(n);
    return best;
}

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

bool is_constant(std::span<const double> x) {
    return std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end();
}

}  // namespace

void EpsilonGrid::validate() const {
    if (!std::isfinite(min) || !std::isfinite(max)) throw format_error("grid", "bounds must be finite");
    if (!(step > 0.0) || !std::isfinite(step)) throw format_error("grid-step", "must be positive");
    if (max < min) throw format_error("grid-max", "must not be below grid-min");
    if ((max - min) / step >= static_cast<double>(max_grid_points)) {
        throw format_error("grid-step", "too many grid points");
    }
}

std::vector<double> EpsilonGrid::values() const {
    validate();
    const auto steps = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9));
    std::vector<double> out(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) out[i] = min + static_cast<double>(i) * step;
    return out;
}

std::vector<std::size_t> draw_sample(std::size_t n, std::size_t sample_size, std::uint64_t seed) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    if (sample_size >= n) return all;
    std::vector<std::size_t> picked;
    picked.reserve(sample_size);
    std::mt19937_64 rng(seed);
    std::sample(all.begin(), all.end(), std::back_inserter(picked), sample_size, rng);
    return picked;
}

ThresholdRule fit_rule_at(const EmbeddingSet & train, std::size_t dim, double mu, const EpsilonGrid & grid) {
    require_dim(train, dim);
    require_both_classes(train);
    const auto eps = grid.values();
    return search_grid(SortedColumn(train, dim), dim, mu, eps);
}

ThresholdRule fit_rule(const EmbeddingSet & train, std::size_t dim, const FitOptions & options) {
    require_dim(train, dim);
    require_both_classes(train);
    if (options.sample_size == 0) throw format_error("sample-size", "must be at least 1");
    const auto sample = draw_sample(train.rows(), options.sample_size, options.sample_seed);
    return fit_rule_at(train, dim, sample_mean(train, dim, sample), options.grid);
}

double apply_rule(const ThresholdRule & rule, const EmbeddingSet & set) {
    if (rule.dim >= set.dims()) {
        throw analysis_error(fmt::format("rule uses dimension {} but the set has d = {}", rule.dim, set.dims()));
    }
    std::size_t correct = 0;
    for (std::size_t r = 0; r < set.rows(); ++r) {
        correct += rule.predict(set.value(r, rule.dim)) == set.label(r);
    }
    return static_cast<double>(correct) / static_cast<double>(set.rows());
}

PrincipalResult evaluate_principal(const EmbeddingSet & train, const EmbeddingSet & val, const FitOptions & options) {
    require_same_width(train, val);
    require_both_classes(train);
    if (options.sample_size == 0) throw format_error("sample-size", "must be at least 1");

    const auto sample = draw_sample(train.rows(), options.sample_size, options.sample_seed);
    const DimStats sampled = compute_stats(train.subset(sample));

    PrincipalResult result;
    result.rho = sampled.principal;
    result.rule = fit_rule_at(train, result.rho, sampled.means[result.rho], options.grid);
    result.val_accuracy = apply_rule(result.rule, val);
    return result;
}

SweepResult sweep_all_dims(const EmbeddingSet & train, const EmbeddingSet & val, const FitOptions & options,
                           unsigned workers) {
    require_same_width(train, val);
    require_both_classes(train);
    if (options.sample_size == 0) throw format_error("sample-size", "must be at least 1");
    const auto grid = options.grid.values();
    const auto sample = draw_sample(train.rows(), options.sample_size, options.sample_seed);

    SweepResult result;
    result.val_stats = compute_stats(val);
    const std::size_t d = train.dims();
    result.per_dim.resize(d);

    auto fit_one = [&](std::size_t dim) {
        SweepRecord & rec = result.per_dim[dim];
        rec.dim = dim;
        rec.variance = result.val_stats.variances[dim];
        rec.variance_percentile = variance_percentile(result.val_stats, dim);
        rec.rule = search_grid(SortedColumn(train, dim), dim, sample_mean(train, dim, sample), grid);
        rec.val_accuracy = apply_rule(rec.rule, val);
    };

    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, d));
    if (workers <= 1) {
        for (std::size_t dim = 0; dim < d; ++dim) fit_one(dim);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t dim = w; dim < d; dim += workers) fit_one(dim);
            });
        }
    }

    std::vector<double> variances(d);
    std::vector<double> accuracies(d);
    for (std::size_t i = 0; i < d; ++i) {
        variances[i] = result.per_dim[i].variance;
        accuracies[i] = result.per_dim[i].val_accuracy;
        if (accuracies[i] > accuracies[result.best_dim]) result.best_dim = i;
    }
    result.correlation_pearson = pearson(variances, accuracies);
    result.correlation_spearman = spearman(variances, accuracies);
    return result;
}

double percent_change(double full_accuracy, double oned_accuracy) {
    if (!(full_accuracy > 0.0)) throw analysis_error("full-model accuracy must be positive");
    return 100.0 * (full_accuracy - oned_accuracy) / full_accuracy;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2 || is_constant(x) || is_constant(y)) return std::nullopt;
    const std::vector<double> xs(x.begin(), x.end());
    const std::vector<double> ys(y.begin(), y.end());
    const double r = boost::math::statistics::correlation_coefficient(xs, ys);
    if (!std::isfinite(r)) return std::nullopt;
    return std::clamp(r, -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) return std::nullopt;
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

}  // namespace odim
