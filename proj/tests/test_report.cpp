#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "odim/report.hpp"
#include "odim/synthgen.hpp"
#include "oracles.hpp"
#include "xml_check.hpp"

#include <algorithm>

using namespace odim;

namespace {

std::size_t line_count(const std::string & s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("xml checker sanity") {
    CHECK(xmlcheck::well_formed("<a><b x=\"1\"/>t &amp; u</a>"));
    CHECK_FALSE(xmlcheck::well_formed("<a><b></a>"));
    CHECK_FALSE(xmlcheck::well_formed("<a>x & y</a>"));
    CHECK_FALSE(xmlcheck::well_formed("<a/><b/>"));
}

TEST_CASE("delta cell formatting") {
    // 100 * 14.28 / 91.86 = 15.5454...
    CHECK(format_delta_cell(91.86, 77.58) == "91.86/77.58 Δ15.55");
    CHECK(format_delta_cell(91.41, 91.41) == "91.41/91.41 Δ0.00");
    CHECK(format_delta_cell(91.41, 93.75) == "91.41/93.75 Δ+2.56");
    CHECK(format_delta_cell(91.77, 91.69) == "91.77/91.69 Δ0.09");
}

TEST_CASE("stats report carries the documented keys") {
    const auto s = compute_stats(oracle::make_set({{0, 1}, {2, 3}, {4, 5}}, {0, 1, 0}));
    const auto r = stats_report(s);
    for (const char * key : {"means", "variances", "mean_variance", "outlier_dims", "principal"}) {
        CHECK(r.contains(key));
    }
    CHECK(r["outlier_dims"].empty());
    CHECK(r["principal"] == 0);
    const auto csv = stats_csv(s);
    CHECK(csv.rfind("dim,mean,variance\n", 0) == 0);
    CHECK(line_count(csv) == 3);
}

TEST_CASE("principal report includes the table cell when full accuracy is known") {
    SynthSpec spec;
    spec.n = 300;
    spec.d = 6;
    spec.planted = {{2, -3, 3, 1}};
    spec.meta.full_model_accuracy = 0.9;
    const auto [train, val] = generate(spec);
    const auto res = evaluate_principal(train, val);
    const auto r = principal_report(res, val);
    CHECK(r["rho"] == 2);
    CHECK(r["percent_change"].get<double>() == doctest::Approx(percent_change(90.0, 100.0 * res.val_accuracy)));
    CHECK(r["table_cell"].get<std::string>().rfind("90.00/", 0) == 0);

    spec.meta.full_model_accuracy.reset();
    const auto [t2, v2] = generate(spec);
    CHECK(principal_report(evaluate_principal(t2, v2), v2)["percent_change"].is_null());
}

TEST_CASE("sweep outputs") {
    SynthSpec spec;
    spec.n = 200;
    spec.d = 5;
    spec.planted = {{4, -2, 2, 1}};
    const auto [train, val] = generate(spec);
    const auto sweep = sweep_all_dims(train, val);
    const auto csv = sweep_csv(sweep);
    CHECK(csv.rfind("dim,variance,variance_percentile,val_accuracy\n", 0) == 0);
    CHECK(line_count(csv) == 6);
    const auto svg = sweep_scatter_svg(sweep, "synthetic <task> & more");
    CHECK(xmlcheck::well_formed(svg));
    CHECK(svg.find("stroke-dasharray") != std::string::npos);
    std::size_t circles = 0;
    for (auto pos = svg.find("<circle"); pos != std::string::npos; pos = svg.find("<circle", pos + 1)) ++circles;
    CHECK(circles == 5);
    CHECK(sweep_summary(sweep)["best_dim"] == 4);
}

TEST_CASE("activation and frequency SVGs are well-formed") {
    const std::vector<double> means{0.1, -3.0, 0.2, 8.5, 0.0};
    CHECK(xmlcheck::well_formed(activation_svg(means, "m / t (finetuned)")));
    CHECK(xmlcheck::well_formed(activation_svg(std::vector<double>{0.0}, "single")));

    const std::vector<FrequencyPanel> panels{{"gpt2", {{138, 20, 1.0}, {378, 10, 0.5}}}, {"empty", {}}};
    const auto svg = frequency_bars_svg(panels);
    CHECK(xmlcheck::well_formed(svg));
    CHECK(svg.find(">138<") != std::string::npos);
}

TEST_CASE("persistence report mirrors the table") {
    PersistenceTable t;
    t.model_name = "m";
    t.dims = 10;
    t.runs_total = 4;
    t.per_dim_counts = {{3, 4}, {8, 2}};
    const auto top = top_k_report(t, 7);
    StageComparison cmp;
    cmp.pre.unique_outliers = 1;
    cmp.pre.avg_var_rho = 2.5;
    cmp.persisted_dims = {3};
    const auto r = persistence_report(t, top, cmp);
    CHECK(r["unique_outliers"] == 2);
    CHECK(r["per_dim_frequency"]["8"] == 0.5);
    CHECK(r["top_k"][0]["dim"] == 3);
    CHECK(r["stages"]["pretrained"]["num_outliers"] == 1);
    CHECK(r["stages"]["persisted_dims"][0] == 3);
    CHECK(persistence_report(t, top, std::nullopt)["stages"].is_null());
    CHECK(persistence_csv(t) == "dim,count,frequency\n3,4,1\n8,2,0.5\n");
}
