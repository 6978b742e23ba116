#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "odim/errors.hpp"
#include "odim/onedim.hpp"
#include "odim/synthgen.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace odim;

namespace {

FitOptions all_rows() {
    FitOptions o;
    o.sample_size = 1'000'000;
    return o;
}

std::vector<double> column(const EmbeddingSet & set, std::size_t dim) {
    std::vector<double> v;
    for (std::size_t r = 0; r < set.rows(); ++r) v.push_back(set.value(r, dim));
    return v;
}

std::vector<std::uint8_t> labels_of(const EmbeddingSet & set) { return {set.labels().begin(), set.labels().end()}; }

EmbeddingSet relabel(const EmbeddingSet & set, std::vector<std::uint8_t> labels) {
    return EmbeddingSet::create(set.meta(), set.rows(), set.dims(), {set.data().begin(), set.data().end()},
                                std::move(labels));
}

EmbeddingSet swap_labels(const EmbeddingSet & set) {
    auto l = labels_of(set);
    for (auto & x : l) x = 1 - x;
    return relabel(set, l);
}

// Random single-column instance with both classes and some class signal.
EmbeddingSet random_instance(std::mt19937_64 & rng, std::size_t n, double half_width) {
    std::uniform_real_distribution<double> shift(-1.0, 1.0);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    const double sep = shift(rng) * half_width * 0.5;
    std::vector<float> values(n);
    std::vector<std::uint8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = i < 2 ? static_cast<std::uint8_t>(i) : coin(rng);
        const double base = labels[i] ? sep : -sep;
        values[i] = static_cast<float>(std::clamp(base + u(rng) * half_width, -half_width, half_width));
    }
    return oracle::column_set(values, labels);
}

SynthSpec planted_spec(std::size_t n, std::size_t d, std::size_t dim, std::uint64_t seed) {
    SynthSpec s;
    s.n = n;
    s.d = d;
    s.planted = {{dim, -3.0, 3.0, 1.0}};
    s.seed = seed;
    return s;
}

}  // namespace

TEST_CASE("grid has 201 values by default") {
    const auto g = EpsilonGrid{}.values();
    REQUIRE(g.size() == 201);
    CHECK(g.front() == -50.0);
    CHECK(g[1] == -49.5);
    CHECK(g[100] == 0.0);
    CHECK(g.back() == 50.0);
    CHECK_THROWS_AS((EpsilonGrid{1.0, 0.0, 0.5}.values()), format_error);
    CHECK_THROWS_AS((EpsilonGrid{-1.0, 1.0, 0.0}.values()), format_error);
}

TEST_CASE("fit_rule worked example matches the exhaustive-grid oracle") {
    const auto train = oracle::column_set({-1.0f, -2.0f, -1.5f, 2.0f, 3.0f, 2.5f}, {0, 0, 0, 1, 1, 1});
    const auto want = oracle::exhaustive_grid(column(train, 0), labels_of(train), 0.5, oracle::default_grid());
    // Frozen from the oracle: threshold -1.0 already separates (x=-1.0 takes the <= branch).
    REQUIRE(want.epsilon == -1.5);
    REQUIRE(want.correct == 6);

    const auto rule = fit_rule(train, 0, all_rows());
    CHECK(rule.dim == 0);
    CHECK(rule.mu == 0.5);
    CHECK(rule.epsilon == -1.5);
    CHECK_FALSE(rule.flipped);
    CHECK(rule.train_accuracy == 1.0);

    SUBCASE("labels swapped -> flipped, same accuracy") {
        const auto swapped = fit_rule(swap_labels(train), 0, all_rows());
        CHECK(swapped.flipped);
        CHECK(swapped.train_accuracy == 1.0);
        CHECK(swapped.epsilon == -1.5);
    }
    SUBCASE("apply to validation rows") {
        const auto val = oracle::column_set({-1.2f, 2.8f}, {0, 1});
        CHECK(apply_rule(rule, val) == 1.0);
    }
}

TEST_CASE("fit_rule errors") {
    const auto single = oracle::column_set({1.0f, 2.0f, 3.0f}, {0, 0, 0});
    CHECK_THROWS_AS(fit_rule(single, 0), analysis_error);
    const auto ok = oracle::column_set({1.0f, 2.0f}, {0, 1});
    CHECK_THROWS_AS(fit_rule(ok, 1), analysis_error);
    FitOptions none;
    none.sample_size = 0;
    CHECK_THROWS_AS(fit_rule(ok, 0, none), format_error);
}

TEST_CASE("boundary value takes the <= branch") {
    ThresholdRule rule;
    rule.mu = 0.25;
    rule.epsilon = 0.25;
    CHECK(rule.predict(0.5) == 0);
    CHECK(rule.predict(std::nextafter(0.5, 1.0)) == 1);
    rule.flipped = true;
    CHECK(rule.predict(0.5) == 1);
    CHECK(rule.predict(std::nextafter(0.5, 1.0)) == 0);

    ThresholdRule unflipped;
    unflipped.mu = 0.25;
    unflipped.epsilon = 0.25;
    const auto at = oracle::column_set({0.5f}, {0});
    CHECK(apply_rule(unflipped, at) == 1.0);
}

TEST_CASE("apply_rule complement and dimension check") {
    std::mt19937_64 rng(3);
    const auto val = random_instance(rng, 50, 10.0);
    ThresholdRule rule;
    rule.mu = 0.3;
    rule.epsilon = -1.0;
    const double a = apply_rule(rule, val);
    CHECK(apply_rule(rule, swap_labels(val)) == doctest::Approx(1.0 - a));
    rule.flipped = true;
    CHECK(apply_rule(rule, val) == doctest::Approx(1.0 - a));
    rule.dim = 1;
    CHECK_THROWS_AS(apply_rule(rule, val), analysis_error);
}

TEST_CASE("fast grid search agrees with the exhaustive oracle") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> size(2, 150);
    for (int trial = 0; trial < 100; ++trial) {
        const auto train = random_instance(rng, size(rng), 45.0);
        FitOptions opt;
        opt.sample_size = 1 + trial % 40;
        opt.sample_seed = static_cast<std::uint64_t>(trial);
        const auto rule = fit_rule(train, 0, opt);

        const auto sample = draw_sample(train.rows(), opt.sample_size, opt.sample_seed);
        double mu = 0.0;
        for (auto r : sample) mu += train.value(r, 0);
        mu /= static_cast<double>(sample.size());
        CHECK(rule.mu == mu);

        const auto want = oracle::exhaustive_grid(column(train, 0), labels_of(train), mu, oracle::default_grid());
        CHECK(rule.epsilon == want.epsilon);
        CHECK(rule.flipped == want.flipped);
        CHECK(rule.train_accuracy == static_cast<double>(want.correct) / static_cast<double>(train.rows()));
        CHECK(apply_rule(rule, train) == rule.train_accuracy);
    }
}

TEST_CASE("property: flip guarantee reaches the majority-class rate") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        const auto train = random_instance(rng, 20 + trial, 40.0);
        const auto rule = fit_rule(train, 0, all_rows());
        const auto l = train.labels();
        const double ones = static_cast<double>(std::count(l.begin(), l.end(), 1)) / static_cast<double>(l.size());
        CHECK(rule.train_accuracy >= std::max(ones, 1.0 - ones));
        CHECK(rule.train_accuracy >= 0.5);
    }
}

TEST_CASE("property: grid never beats the midpoint oracle, and ties it when a grid point is optimal") {
    std::mt19937_64 rng(21);
    const auto grid = oracle::default_grid();
    for (int trial = 0; trial < 60; ++trial) {
        const auto train = random_instance(rng, 5 + static_cast<std::size_t>(trial) * 3, 40.0);
        const auto rule = fit_rule(train, 0, all_rows());
        const auto best = oracle::midpoint_oracle(column(train, 0), labels_of(train));
        const auto correct = static_cast<std::size_t>(std::llround(rule.train_accuracy * train.rows()));
        CHECK(correct <= best.best_correct);
        bool grid_hits_optimum = false;
        for (double eps : grid) {
            for (const auto & iv : best.optimal) grid_hits_optimum |= iv.contains(rule.mu + eps);
        }
        CHECK(grid_hits_optimum == (correct == best.best_correct));
    }
}

TEST_CASE("property: determinism") {
    std::mt19937_64 rng(8);
    const auto train = random_instance(rng, 120, 30.0);
    FitOptions opt;
    opt.sample_size = 17;
    opt.sample_seed = 12345;
    CHECK(fit_rule(train, 0, opt) == fit_rule(train, 0, opt));
    CHECK(draw_sample(1000, 50, 9) == draw_sample(1000, 50, 9));
}

TEST_CASE("draw_sample is sorted, unique and bounded") {
    const auto s = draw_sample(1000, 500, 1);
    CHECK(s.size() == 500);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 500);
    CHECK(s.back() < 1000);
    CHECK(draw_sample(10, 500, 1).size() == 10);
    CHECK(draw_sample(1000, 500, 1) != draw_sample(1000, 500, 2));
}

TEST_CASE("property: prediction is a monotone step in the value") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-60.0, 60.0);
    for (int trial = 0; trial < 50; ++trial) {
        const auto rule = fit_rule(random_instance(rng, 40, 30.0), 0, all_rows());
        std::vector<double> xs(200);
        for (auto & x : xs) x = u(rng);
        xs.push_back(rule.threshold());
        std::sort(xs.begin(), xs.end());
        const std::uint8_t hi = rule.flipped ? 0 : 1;
        bool seen_hi = false;
        for (double x : xs) {
            if (rule.predict(x) == hi) seen_hi = true;
            else CHECK_FALSE(seen_hi);
        }
    }
}

TEST_CASE("property: label swap toggles flipped and keeps accuracy") {
    std::mt19937_64 rng(41);
    int checked = 0;
    for (int trial = 0; trial < 80; ++trial) {
        const auto train = random_instance(rng, 30 + trial, 35.0);
        const auto a = fit_rule(train, 0, all_rows());
        const auto b = fit_rule(swap_labels(train), 0, all_rows());
        CHECK(a.train_accuracy == b.train_accuracy);
        CHECK(a.epsilon == b.epsilon);
        const auto correct = std::llround(a.train_accuracy * train.rows());
        if (2 * correct != static_cast<long long>(train.rows())) {
            CHECK(a.flipped != b.flipped);
            ++checked;
        }
    }
    CHECK(checked > 50);
}

TEST_CASE("evaluate_principal recovers a planted dimension") {
    const auto [train, val] = generate(planted_spec(2000, 64, 17, 4));
    const auto res = evaluate_principal(train, val);
    CHECK(res.rho == 17);
    CHECK(res.rule.dim == 17);
    CHECK(res.val_accuracy >= 0.95);
}

TEST_CASE("evaluate_principal: train == val gives val accuracy == train accuracy") {
    const auto [train, val] = generate(planted_spec(400, 8, 2, 9));
    const auto res = evaluate_principal(train, train);
    CHECK(res.val_accuracy == res.rule.train_accuracy);
}

TEST_CASE("evaluate_principal picks rho from the sampled rows") {
    FitOptions opt;
    opt.sample_size = 10;
    opt.sample_seed = 5;
    const auto sample = draw_sample(40, opt.sample_size, opt.sample_seed);
    const std::set<std::size_t> in_sample(sample.begin(), sample.end());

    // Dim 0 varies everywhere; dim 1 varies hugely, but only outside the sample.
    std::vector<std::vector<float>> rows;
    std::vector<std::uint8_t> labels;
    for (std::size_t r = 0; r < 40; ++r) {
        const float spike = in_sample.count(r) ? 0.0f : (r % 2 ? 100.0f : -100.0f);
        rows.push_back({r % 2 ? 1.0f : -1.0f, spike});
        labels.push_back(static_cast<std::uint8_t>(r % 2));
    }
    const auto train = oracle::make_set(rows, labels);
    CHECK(compute_stats(train).principal == 1);
    const auto res = evaluate_principal(train, train, opt);
    CHECK(res.rho == 0);
    CHECK(res.val_accuracy == 1.0);
    CHECK_THROWS_AS(evaluate_principal(train, oracle::column_set({1.0f}, {0}), opt), analysis_error);
}

TEST_CASE("sweep: noise dim vs separating dim") {
    SynthSpec s;
    s.n = 1000;
    s.d = 2;
    s.planted = {{1, -4.0, 4.0, 1.0}};
    s.seed = 3;
    const auto [train, val] = generate(s);
    const auto sweep = sweep_all_dims(train, val);
    REQUIRE(sweep.per_dim.size() == 2);
    CHECK(sweep.per_dim[0].val_accuracy < 0.6);
    CHECK(sweep.per_dim[1].val_accuracy > 0.99);
    CHECK(sweep.best_dim == 1);
    CHECK(sweep.per_dim[1].variance_percentile == 50);
}

TEST_CASE("sweep: identical copies tie, correlation absent") {
    std::vector<std::vector<float>> rows;
    std::vector<std::uint8_t> labels;
    for (int r = 0; r < 30; ++r) {
        const float v = (r % 2 ? 2.0f : -2.0f) + 0.01f * static_cast<float>(r);
        rows.push_back({v, v, v});
        labels.push_back(static_cast<std::uint8_t>(r % 2));
    }
    const auto set = oracle::make_set(rows, labels);
    const auto sweep = sweep_all_dims(set, set);
    CHECK(sweep.per_dim[0].val_accuracy == sweep.per_dim[1].val_accuracy);
    CHECK(sweep.per_dim[1].val_accuracy == sweep.per_dim[2].val_accuracy);
    CHECK(sweep.best_dim == 0);
    CHECK_FALSE(sweep.correlation_spearman.has_value());
    CHECK_FALSE(sweep.correlation_pearson.has_value());
}

TEST_CASE("sweep: variance-coupled signal gives positive correlation; workers do not matter") {
    SynthSpec s;
    s.n = 800;
    s.d = 24;
    s.seed = 77;
    // class separation and variance grow together
    for (std::size_t j = 0; j < s.d; j += 2) {
        const double half = 0.25 * static_cast<double>(j);
        s.planted.push_back({j, -half, half, 1.0});
    }
    const auto [train, val] = generate(s);
    const auto one = sweep_all_dims(train, val, {}, 1);
    const auto many = sweep_all_dims(train, val, {}, 5);
    REQUIRE(one.correlation_spearman.has_value());
    CHECK(*one.correlation_spearman > 0.5);
    CHECK(*one.correlation_pearson > 0.5);
    CHECK(one.best_dim == many.best_dim);
    for (std::size_t j = 0; j < s.d; ++j) {
        CHECK(one.per_dim[j].rule == many.per_dim[j].rule);
        CHECK(one.per_dim[j].val_accuracy == many.per_dim[j].val_accuracy);
    }
}

TEST_CASE("percent_change reproduces table cells") {
    CHECK(std::abs(percent_change(91.86, 77.58) - 15.54) <= 0.01);
    CHECK(percent_change(91.41, 91.41) == 0.0);
    CHECK(std::abs(percent_change(91.41, 93.75) - (-2.56)) <= 0.01);
    CHECK_THROWS_AS(percent_change(0.0, 50.0), analysis_error);
}

TEST_CASE("property: percent_change fixed point and monotonicity") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.1, 100.0);
    for (int i = 0; i < 200; ++i) {
        const double full = u(rng);
        const double a = u(rng);
        const double b = u(rng);
        CHECK(percent_change(full, full) == 0.0);
        if (a < b) CHECK(percent_change(full, a) > percent_change(full, b));
    }
}

TEST_CASE("correlations") {
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> y{2, 4, 6, 8};
    const std::vector<double> z{1, 10, 100, 1000};
    CHECK(*pearson(x, y) == doctest::Approx(1.0));
    CHECK(*spearman(x, z) == doctest::Approx(1.0));
    CHECK(*pearson(x, z) < 1.0);
    const std::vector<double> rev{4, 3, 2, 1};
    CHECK(*spearman(x, rev) == doctest::Approx(-1.0));
    // ties: average ranks {1.5,1.5,3,4} vs {1,2,3,4}
    const std::vector<double> tied{5, 5, 6, 7};
    CHECK(*spearman(tied, x) == doctest::Approx(0.9486832980505138));
    const std::vector<double> flat{3, 3, 3, 3};
    CHECK_FALSE(pearson(x, flat).has_value());
    CHECK_FALSE(spearman(flat, x).has_value());
}
