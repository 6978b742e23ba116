#include "odim/cli.hpp"

#include "odim/corpus.hpp"
#include "odim/dimstats.hpp"
#include "odim/embstore.hpp"
#include "odim/errors.hpp"
#include "odim/onedim.hpp"
#include "odim/persistence.hpp"
#include "odim/report.hpp"
#include "odim/synthgen.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

namespace odim {

namespace {

struct GlobalOptions {
    std::string json_path;
    std::string csv_path;
    std::string plot_path;
    FitOptions fit;
    unsigned workers = 0;
};

void write_text(const std::filesystem::path & path, const std::string & text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error(fmt::format("cannot create '{}'", path.string()));
    f << text;
    if (!f) throw io_error(fmt::format("failed writing '{}'", path.string()));
}

void emit_json(const json & report, const GlobalOptions & g, std::ostream & out) {
    if (g.json_path.empty()) {
        out << report.dump(2) << '\n';
    } else {
        write_text(g.json_path, report.dump(2) + "\n");
    }
}

std::string read_text(const std::filesystem::path & path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error(fmt::format("cannot open '{}'", path.string()));
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// ---- stats ----------------------------------------------------------------

struct StatsArgs {
    std::vector<std::string> dumps;
    std::string diagram;
    bool average = false;
};

int cmd_stats(const StatsArgs & a, const GlobalOptions & g, std::ostream & out, std::ostream &) {
    if (a.dumps.size() > 1 && !a.average) {
        throw format_error("dumps", "several dumps given; pass --average to combine them");
    }
    std::vector<DimStats> stats;
    std::vector<RunMetadata> metas;
    for (const auto & path : a.dumps) {
        const EmbeddingSet set = read_dump(path);
        if (!stats.empty() && set.dims() != stats.front().dims) {
            throw analysis_error(fmt::format("'{}' has d = {} but '{}' has d = {}", path, set.dims(),
                                             a.dumps.front(), stats.front().dims));
        }
        metas.push_back(set.meta());
        stats.push_back(compute_stats(set));
    }

    // element-wise mean of per-run means
    std::vector<double> means(stats.front().dims, 0.0);
    for (const auto & s : stats) {
        for (std::size_t i = 0; i < means.size(); ++i) means[i] += s.means[i];
    }
    for (auto & m : means) m /= static_cast<double>(stats.size());

    json report;
    if (stats.size() == 1) {
        report = stats_report(stats.front());
        report["meta"] = metadata_json(metas.front());
    } else {
        json runs = json::array();
        for (std::size_t i = 0; i < stats.size(); ++i) {
            json r = stats_report(stats[i]);
            r["meta"] = metadata_json(metas[i]);
            r["path"] = a.dumps[i];
            runs.push_back(std::move(r));
        }
        report["runs"] = std::move(runs);
        report["average_means"] = means;
    }
    emit_json(report, g, out);

    const std::string diagram = !a.diagram.empty() ? a.diagram : g.plot_path;
    std::string csv_path = g.csv_path;
    if (!diagram.empty()) {
        std::string title = fmt::format("{} / {} ({})", metas.front().model_name, metas.front().task_name,
                                        to_string(metas.front().stage));
        if (stats.size() > 1) title += fmt::format(", mean of {} runs", stats.size());
        write_text(diagram, activation_svg(means, title));
        if (csv_path.empty()) csv_path = std::filesystem::path(diagram).replace_extension(".csv").string();
    }
    if (!csv_path.empty()) {
        std::vector<double> variances(means.size(), 0.0);
        for (const auto & s : stats) {
            for (std::size_t i = 0; i < variances.size(); ++i) variances[i] += s.variances[i];
        }
        for (auto & v : variances) v /= static_cast<double>(stats.size());
        DimStats combined = stats.size() == 1 ? stats.front() : stats_from_moments(means, variances);
        write_text(csv_path, stats_csv(combined));
    }
    return exit_ok;
}

// ---- oned -----------------------------------------------------------------

struct OnedArgs {
    std::string train;
    std::string val;
    bool sweep = false;
};

int cmd_oned(const OnedArgs & a, const GlobalOptions & g, std::ostream & out, std::ostream &) {
    const EmbeddingSet train = read_dump(a.train);
    const EmbeddingSet val = read_dump(a.val);

    json report;
    report["principal"] = principal_report(evaluate_principal(train, val, g.fit), val);
    report["sample_size"] = g.fit.sample_size;
    report["sample_seed"] = g.fit.sample_seed;
    report["grid"] = {{"min", g.fit.grid.min}, {"max", g.fit.grid.max}, {"step", g.fit.grid.step}};

    const bool want_sweep = a.sweep || !g.plot_path.empty() || !g.csv_path.empty();
    if (want_sweep) {
        const SweepResult sweep = sweep_all_dims(train, val, g.fit, g.workers);
        report["sweep"] = sweep_summary(sweep);
        if (!g.csv_path.empty()) write_text(g.csv_path, sweep_csv(sweep));
        if (!g.plot_path.empty()) {
            const auto & m = val.meta();
            write_text(g.plot_path, sweep_scatter_svg(sweep, fmt::format("{} / {}", m.model_name, m.task_name)));
        }
    } else {
        report["sweep"] = nullptr;
    }
    emit_json(report, g, out);
    return exit_ok;
}

// ---- persist --------------------------------------------------------------

struct PersistArgs {
    std::string root;
    std::string model;
    std::size_t top_k = 7;
    std::string split = "validation";
};

int cmd_persist(const PersistArgs & a, const GlobalOptions & g, std::ostream & out, std::ostream & err) {
    if (a.top_k == 0) throw format_error("top-k", "must be at least 1");
    Split split;
    try {
        split = parse_split(a.split);
    } catch (const std::invalid_argument &) {
        throw format_error("split", "must be 'train' or 'validation'");
    }
    if (split == Split::train) {
        err << "warning: aggregating train-split dumps; outlier counts are conventionally taken on validation data\n";
    }

    const CorpusIndex index = scan_corpus(a.root);
    std::vector<std::string> models = index.model_names();
    if (!a.model.empty()) {
        if (std::find(models.begin(), models.end(), a.model) == models.end()) {
            throw format_error("model", fmt::format("no dumps for model '{}' under '{}'", a.model, a.root));
        }
        models = {a.model};
    }

    json reports = json::array();
    std::vector<FrequencyPanel> panels;
    std::string csv;
    for (const auto & model : models) {
        std::vector<DimStats> fine;
        std::vector<DimStats> pre;
        for (const auto & e : index.entries) {
            if (e.meta.model_name != model || e.meta.split != split) continue;
            auto & bucket = e.meta.stage == Stage::finetuned ? fine : pre;
            const EmbeddingSet set = read_dump(e.path);
            if (!fine.empty() && fine.front().dims != set.dims()) {
                throw analysis_error(fmt::format("model '{}' mixes d = {} and d = {}", model, fine.front().dims, set.dims()));
            }
            if (!pre.empty() && pre.front().dims != set.dims()) {
                throw analysis_error(fmt::format("model '{}' mixes d = {} and d = {}", model, pre.front().dims, set.dims()));
            }
            bucket.push_back(compute_stats(set));
        }
        if (fine.empty()) {
            err << fmt::format("warning: model '{}' has no fine-tuned {} dumps; skipped\n", model, to_string(split));
            continue;
        }
        const PersistenceTable table = aggregate_stats(model, fine);
        const auto top = top_k_report(table, a.top_k);
        std::optional<StageComparison> stages;
        if (!pre.empty()) stages = compare_stage_stats(model, pre, fine);
        reports.push_back(persistence_report(table, top, stages));
        panels.push_back({model, top});
        if (models.size() > 1) csv += fmt::format("# model={}\n", model);
        csv += persistence_csv(table);
    }
    if (reports.empty()) throw analysis_error("no model has fine-tuned dumps to aggregate");

    emit_json(json{{"models", reports}}, g, out);
    if (!g.csv_path.empty()) write_text(g.csv_path, csv);
    if (!g.plot_path.empty()) write_text(g.plot_path, frequency_bars_svg(panels));
    return exit_ok;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
    std::string spec;
    std::string out_prefix;
};

int cmd_synth(const SynthArgs & a, const GlobalOptions & g, std::ostream & out, std::ostream &) {
    const SynthSpec spec = parse_synth_spec(read_text(a.spec));
    const auto [train, val] = generate(spec);
    const std::string train_path = a.out_prefix + "_train.embd";
    const std::string val_path = a.out_prefix + "_val.embd";
    write_dump(train, train_path);
    write_dump(val, val_path);
    emit_json(json{{"train", train_path}, {"validation", val_path}, {"n", spec.n}, {"d", spec.d}}, g, out);
    return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string> & args, std::ostream & out, std::ostream & err) {
    CLI::App app{"Outlier-dimension analysis for sentence-embedding dumps", "odim"};
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--json", g.json_path, "Write the JSON report here instead of stdout");
    app.add_option("--csv", g.csv_path, "Write the per-dimension CSV here");
    app.add_option("--plot", g.plot_path, "Write the SVG figure here");
    app.add_option("--grid-min", g.fit.grid.min, "Smallest epsilon offset")->capture_default_str();
    app.add_option("--grid-max", g.fit.grid.max, "Largest epsilon offset")->capture_default_str();
    app.add_option("--grid-step", g.fit.grid.step, "Epsilon grid spacing")->capture_default_str();
    app.add_option("--sample-size", g.fit.sample_size, "Training rows sampled to pick rho and its mean")
        ->capture_default_str();
    app.add_option("--sample-seed", g.fit.sample_seed, "Seed for the training sample")->capture_default_str();
    app.add_option("--workers", g.workers, "Threads for the dimension sweep (0 = all cores)");

    StatsArgs stats_args;
    auto * stats = app.add_subcommand("stats", "Per-dimension moments and outlier dimensions of a dump");
    stats->add_option("dumps", stats_args.dumps, "EMBD dump(s)")->required();
    stats->add_option("--diagram", stats_args.diagram, "Write an activation diagram SVG (and a CSV beside it)");
    stats->add_flag("--average", stats_args.average, "Average the per-run means of several dumps");
    stats->fallthrough();

    OnedArgs oned_args;
    auto * oned = app.add_subcommand("oned", "Single-dimension threshold classifier on the principal dimension");
    oned->add_option("train", oned_args.train, "Training dump")->required();
    oned->add_option("val", oned_args.val, "Validation dump")->required();
    oned->add_flag("--sweep", oned_args.sweep, "Also fit every dimension");
    oned->fallthrough();

    PersistArgs persist_args;
    auto * persist = app.add_subcommand("persist", "Outlier persistence across the runs of a corpus directory");
    persist->add_option("corpus", persist_args.root, "Directory scanned for EMBD files")->required();
    persist->add_option("--model", persist_args.model, "Only this model");
    persist->add_option("--top-k", persist_args.top_k, "Most frequent dimensions to report")->capture_default_str();
    persist->add_option("--split", persist_args.split, "Split to aggregate (train|validation)")->capture_default_str();
    persist->fallthrough();

    SynthArgs synth_args;
    auto * synth = app.add_subcommand("synth", "Generate train/validation dumps from a JSON spec");
    synth->add_option("spec", synth_args.spec, "SynthSpec JSON file")->required();
    synth->add_option("out_prefix", synth_args.out_prefix, "Writes <prefix>_train.embd and <prefix>_val.embd")
        ->required();
    synth->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError & e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? exit_ok : exit_input;
    }

    try {
        g.fit.grid.validate();
        if (g.fit.sample_size == 0) throw format_error("sample-size", "must be at least 1");
        if (*stats) return cmd_stats(stats_args, g, out, err);
        if (*oned) return cmd_oned(oned_args, g, out, err);
        if (*persist) return cmd_persist(persist_args, g, out, err);
        return cmd_synth(synth_args, g, out, err);
    } catch (const analysis_error & e) {
        err << "error: " << e.what() << '\n';
        return exit_analysis;
    } catch (const error & e) {
        err << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const std::filesystem::filesystem_error & e) {
        err << "error: " << e.what() << '\n';
        return exit_input;
    }
}

}  // namespace odim
