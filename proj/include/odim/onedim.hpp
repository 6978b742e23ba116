#pragma once

#include "odim/dimstats.hpp"
#include "odim/embstore.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace odim {

// Offsets tried around the sampled mean. Defaults give
// {-50, -49.5, ..., 49.5, 50} (201 values).
struct EpsilonGrid {
    double min = -50.0;
    double max = 50.0;
    double step = 0.5;

    void validate() const;
    std::vector<double> values() const;
};

struct FitOptions {
    std::size_t sample_size = 500;
    std::uint64_t sample_seed = 0;
    EpsilonGrid grid;
};

// Single-dimension threshold classifier:
//   unflipped: label 0 if x <= mu + epsilon, else 1
//   flipped:   the complement (label 1 if x <= mu + epsilon, else 0)
struct ThresholdRule {
    std::size_t dim = 0;
    double mu = 0.0;
    double epsilon = 0.0;
    bool flipped = false;
    double train_accuracy = 0.0;

    double threshold() const noexcept { return mu + epsilon; }
    std::uint8_t predict(double x) const noexcept {
        const bool above = x > threshold();
        return static_cast<std::uint8_t>(above != flipped);
    }

    bool operator==(const ThresholdRule &) const = default;
};

// Seeded uniform sample without replacement of min(sample_size, n) row
// indices, returned in ascending order.
std::vector<std::size_t> draw_sample(std::size_t n, std::size_t sample_size, std::uint64_t seed);

ThresholdRule fit_rule(const EmbeddingSet & train, std::size_t dim, const FitOptions & options = {});

// Grid search with a caller-supplied mean. `fit_rule` delegates here after
// sampling.
ThresholdRule fit_rule_at(const EmbeddingSet & train, std::size_t dim, double mu, const EpsilonGrid & grid);

double apply_rule(const ThresholdRule & rule, const EmbeddingSet & set);

struct PrincipalResult {
    std::size_t rho = 0;
    ThresholdRule rule;
    double val_accuracy = 0.0;
};

// rho is the max-variance dimension of the sampled training rows; the same
// sample supplies mu.
PrincipalResult evaluate_principal(const EmbeddingSet & train, const EmbeddingSet & val,
                                   const FitOptions & options = {});

struct SweepRecord {
    std::size_t dim = 0;
    double variance = 0.0;
    int variance_percentile = 0;
    double val_accuracy = 0.0;
    ThresholdRule rule;
};

struct SweepResult {
    std::vector<SweepRecord> per_dim;
    std::size_t best_dim = 0;
    std::optional<double> correlation_pearson;
    std::optional<double> correlation_spearman;
    DimStats val_stats;
};

// Fits every dimension. Per-dimension work is independent, so `workers`
// threads (0 = hardware concurrency) give identical results to one.
SweepResult sweep_all_dims(const EmbeddingSet & train, const EmbeddingSet & val, const FitOptions & options = {},
                           unsigned workers = 0);

// 100 * (full - oned) / full, both in percent. Positive is a degradation.
double percent_change(double full_accuracy, double oned_accuracy);

// Absent when either series is constant or shorter than 2.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

}  // namespace odim
