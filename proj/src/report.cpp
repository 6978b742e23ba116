#include "odim/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

namespace odim {

namespace {

std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

// Maps data coordinates into a fixed plotting rectangle.
struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    double px_lo = 0.0;
    double px_hi = 1.0;

    double operator()(double v) const {
        if (hi == lo) return 0.5 * (px_lo + px_hi);
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

class Svg {
public:
    Svg(int width, int height) : width_(width), height_(height) {
        out_ << fmt::format(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
            "<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
            width, height);
    }

    void line(double x1, double y1, double x2, double y2, std::string_view stroke, double width = 1.0,
              std::string_view dash = {}) {
        out_ << fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" "
                            "stroke-width=\"{}\"",
                            x1, y1, x2, y2, stroke, width);
        if (!dash.empty()) out_ << fmt::format(" stroke-dasharray=\"{}\"", dash);
        out_ << "/>\n";
    }

    void rect(double x, double y, double w, double h, std::string_view fill) {
        out_ << fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n", x, y,
                            std::max(0.0, w), std::max(0.0, h), fill);
    }

    void circle(double cx, double cy, double r, std::string_view fill) {
        out_ << fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{}\" fill=\"{}\" fill-opacity=\"0.7\"/>\n", cx, cy,
                            r, fill);
    }

    void polyline(std::span<const std::pair<double, double>> pts, std::string_view stroke) {
        out_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1\" points=\"";
        for (const auto & [x, y] : pts) out_ << fmt::format("{:.2f},{:.2f} ", x, y);
        out_ << "\"/>\n";
    }

    void text(double x, double y, std::string_view s, int size = 12, std::string_view anchor = "start") {
        out_ << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"{}\" "
                            "text-anchor=\"{}\">{}</text>\n",
                            x, y, size, anchor, xml_escape(s));
    }

    std::string finish() {
        out_ << "</svg>\n";
        return out_.str();
    }

    int width() const { return width_; }
    int height() const { return height_; }

private:
    int width_;
    int height_;
    std::ostringstream out_;
};

void frame(Svg & svg, const Axis & x, const Axis & y, const std::string & x_label, const std::string & y_label) {
    svg.line(x.px_lo, y.px_lo, x.px_hi, y.px_lo, "black");
    svg.line(x.px_lo, y.px_lo, x.px_lo, y.px_hi, "black");
    svg.text(x.px_lo, y.px_lo + 16, fmt::format("{:.4g}", x.lo), 10, "middle");
    svg.text(x.px_hi, y.px_lo + 16, fmt::format("{:.4g}", x.hi), 10, "middle");
    svg.text(x.px_lo - 4, y.px_lo, fmt::format("{:.4g}", y.lo), 10, "end");
    svg.text(x.px_lo - 4, y.px_hi + 4, fmt::format("{:.4g}", y.hi), 10, "end");
    svg.text(0.5 * (x.px_lo + x.px_hi), y.px_lo + 32, x_label, 12, "middle");
    svg.text(12, 0.5 * (y.px_lo + y.px_hi), y_label, 12, "start");
}

std::string fixed2(double v) { return fmt::format("{:.2f}", v); }

}  // namespace

json metadata_json(const RunMetadata & meta) {
    json m;
    m["model_name"] = meta.model_name;
    m["task_name"] = meta.task_name;
    m["seed"] = meta.seed;
    m["split"] = to_string(meta.split);
    m["stage"] = to_string(meta.stage);
    m["full_model_accuracy"] = meta.full_model_accuracy ? json(*meta.full_model_accuracy) : json(nullptr);
    return m;
}

json stats_report(const DimStats & stats) {
    json r;
    r["dims"] = stats.dims;
    r["means"] = stats.means;
    r["variances"] = stats.variances;
    r["mean_variance"] = stats.mean_variance;
    r["outlier_threshold"] = stats.outlier_threshold();
    r["outlier_dims"] = stats.outlier_dims();
    r["principal"] = stats.principal;
    return r;
}

std::string stats_csv(const DimStats & stats) {
    std::string out = "dim,mean,variance\n";
    for (std::size_t i = 0; i < stats.dims; ++i) {
        out += fmt::format("{},{},{}\n", i, stats.means[i], stats.variances[i]);
    }
    return out;
}

std::string format_delta_cell(double full_percent, double oned_percent) {
    const double delta = percent_change(full_percent, oned_percent);
    std::string d = fixed2(std::abs(delta));
    if (delta < 0.0 && d != "0.00") d = "+" + d;
    return fmt::format("{}/{} Δ{}", fixed2(full_percent), fixed2(oned_percent), d);
}

json rule_json(const ThresholdRule & rule) {
    json r;
    r["dim"] = rule.dim;
    r["mu"] = rule.mu;
    r["epsilon"] = rule.epsilon;
    r["threshold"] = rule.threshold();
    r["flipped"] = rule.flipped;
    r["train_accuracy"] = rule.train_accuracy;
    return r;
}

json principal_report(const PrincipalResult & result, const EmbeddingSet & val) {
    json r;
    r["rho"] = result.rho;
    r["mu"] = result.rule.mu;
    r["epsilon"] = result.rule.epsilon;
    r["flipped"] = result.rule.flipped;
    r["train_accuracy"] = result.rule.train_accuracy;
    r["val_accuracy"] = result.val_accuracy;
    r["meta"] = metadata_json(val.meta());
    if (val.meta().full_model_accuracy && *val.meta().full_model_accuracy > 0.0) {
        const double full = 100.0 * *val.meta().full_model_accuracy;
        const double oned = 100.0 * result.val_accuracy;
        r["full_model_accuracy"] = *val.meta().full_model_accuracy;
        r["percent_change"] = percent_change(full, oned);
        r["table_cell"] = format_delta_cell(full, oned);
    } else {
        r["percent_change"] = nullptr;
    }
    return r;
}

json sweep_summary(const SweepResult & sweep) {
    json r;
    const auto & best = sweep.per_dim.at(sweep.best_dim);
    r["best_dim"] = sweep.best_dim;
    r["best_val_accuracy"] = best.val_accuracy;
    r["best_variance_percentile"] = best.variance_percentile;
    r["best_rule"] = rule_json(best.rule);
    r["correlation_pearson"] = sweep.correlation_pearson ? json(*sweep.correlation_pearson) : json(nullptr);
    r["correlation_spearman"] = sweep.correlation_spearman ? json(*sweep.correlation_spearman) : json(nullptr);
    r["outlier_threshold"] = sweep.val_stats.outlier_threshold();
    return r;
}

std::string sweep_csv(const SweepResult & sweep) {
    std::string out = "dim,variance,variance_percentile,val_accuracy\n";
    for (const auto & rec : sweep.per_dim) {
        out += fmt::format("{},{},{},{}\n", rec.dim, rec.variance, rec.variance_percentile, rec.val_accuracy);
    }
    return out;
}

json persistence_report(const PersistenceTable & table, std::span<const DimFrequency> top,
                        const std::optional<StageComparison> & stages) {
    json r;
    r["model_name"] = table.model_name;
    r["dims"] = table.dims;
    r["runs_total"] = table.runs_total;
    r["unique_outliers"] = table.unique_outliers();
    json counts = json::object();
    json freqs = json::object();
    for (const auto & [dim, count] : table.per_dim_counts) {
        counts[std::to_string(dim)] = count;
        freqs[std::to_string(dim)] = table.frequency(dim);
    }
    r["per_dim_counts"] = counts;
    r["per_dim_frequency"] = freqs;
    json t = json::array();
    for (const auto & e : top) t.push_back({{"dim", e.dim}, {"count", e.count}, {"frequency", e.frequency}});
    r["top_k"] = t;
    if (stages) {
        auto stage = [](const StageSummary & s) {
            return json{{"runs", s.runs},
                        {"num_outliers", s.unique_outliers},
                        {"avg_var_rho", s.avg_var_rho},
                        {"outlier_dims", s.outlier_dims}};
        };
        r["stages"] = {{"pretrained", stage(stages->pre)},
                       {"finetuned", stage(stages->fine)},
                       {"persisted_dims", stages->persisted_dims}};
    } else {
        r["stages"] = nullptr;
    }
    return r;
}

std::string persistence_csv(const PersistenceTable & table) {
    std::string out = "dim,count,frequency\n";
    for (const auto & [dim, count] : table.per_dim_counts) {
        out += fmt::format("{},{},{}\n", dim, count, table.frequency(dim));
    }
    return out;
}

std::string activation_svg(std::span<const double> means, const std::string & title) {
    Svg svg(900, 360);
    double lo = 0.0;
    double hi = 0.0;
    for (double m : means) {
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    if (lo == hi) hi = lo + 1.0;
    const Axis x{0.0, static_cast<double>(std::max<std::size_t>(means.size(), 2) - 1), 70.0, 880.0};
    const Axis y{lo, hi, 310.0, 30.0};
    svg.text(450, 18, title, 14, "middle");
    frame(svg, x, y, "dimension", "mean");
    svg.line(x.px_lo, y(0.0), x.px_hi, y(0.0), "#999999", 0.5);
    std::vector<std::pair<double, double>> pts;
    pts.reserve(means.size());
    for (std::size_t i = 0; i < means.size(); ++i) pts.emplace_back(x(static_cast<double>(i)), y(means[i]));
    svg.polyline(pts, "#1f77b4");
    return svg.finish();
}

std::string sweep_scatter_svg(const SweepResult & sweep, const std::string & title) {
    Svg svg(640, 420);
    const double threshold = sweep.val_stats.outlier_threshold();
    double vmax = threshold;
    double amin = 1.0;
    double amax = 0.0;
    for (const auto & rec : sweep.per_dim) {
        vmax = std::max(vmax, rec.variance);
        amin = std::min(amin, rec.val_accuracy);
        amax = std::max(amax, rec.val_accuracy);
    }
    if (vmax <= 0.0) vmax = 1.0;
    if (amin >= amax) {
        amin = std::max(0.0, amin - 0.05);
        amax = std::min(1.0, amax + 0.05);
    }
    const Axis x{0.0, vmax * 1.05, 70.0, 620.0};
    const Axis y{amin, amax, 370.0, 30.0};
    svg.text(345, 18, title, 14, "middle");
    frame(svg, x, y, "variance", "1-D accuracy");
    for (const auto & rec : sweep.per_dim) {
        const bool outlier = sweep.val_stats.outlier_mask[rec.dim];
        svg.circle(x(rec.variance), y(rec.val_accuracy), 3, outlier ? "#d62728" : "#1f77b4");
    }
    svg.line(x(threshold), y.px_lo, x(threshold), y.px_hi, "#444444", 1.0, "6,4");
    svg.text(x(threshold) + 4, y.px_hi + 12, "5x avg variance", 10);
    return svg.finish();
}

std::string frequency_bars_svg(std::span<const FrequencyPanel> panels) {
    constexpr double bar_h = 18.0;
    constexpr double panel_gap = 40.0;
    double height = 20.0;
    for (const auto & p : panels) height += panel_gap + bar_h * static_cast<double>(std::max<std::size_t>(p.top.size(), 1));
    Svg svg(520, static_cast<int>(height) + 30);

    double top = 20.0;
    for (const auto & p : panels) {
        svg.text(260, top + 14, p.model_name, 13, "middle");
        top += panel_gap - 10.0;
        const Axis x{0.0, 1.0, 80.0, 500.0};
        for (const auto & e : p.top) {
            svg.text(x.px_lo - 6, top + bar_h - 5, std::to_string(e.dim), 11, "end");
            svg.rect(x.px_lo, top + 2, x(e.frequency) - x.px_lo, bar_h - 4, "#1f77b4");
            svg.text(x(e.frequency) + 4, top + bar_h - 5, fmt::format("{:.2f}", e.frequency), 10);
            top += bar_h;
        }
        if (p.top.empty()) {
            svg.text(x.px_lo, top + bar_h - 5, "no outlier dimensions", 11);
            top += bar_h;
        }
        svg.line(x.px_lo, top, x.px_hi, top, "black");
        top += 10.0;
    }
    svg.text(290, top + 16, "frequency", 12, "middle");
    return svg.finish();
}

}  // namespace odim
