#include "odim/synthgen.hpp"

#include "odim/errors.hpp"

#include <cmath>
#include <random>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

namespace odim {

namespace {

using json = nlohmann::json;

EmbeddingSet draw(const SynthSpec & spec, Split split, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    std::mt19937_64 rng(seq);

    std::vector<const PlantedDim *> planted_at(spec.d, nullptr);
    for (const auto & p : spec.planted) planted_at[p.dim] = &p;

    std::bernoulli_distribution coin(spec.class_balance);
    std::normal_distribution<double> unit(0.0, 1.0);

    std::vector<float> data(spec.n * spec.d);
    std::vector<std::uint8_t> labels(spec.n);
    for (std::size_t r = 0; r < spec.n; ++r) {
        const bool positive = coin(rng);
        labels[r] = positive ? 1 : 0;
        float * row = data.data() + r * spec.d;
        for (std::size_t j = 0; j < spec.d; ++j) {
            const double z = unit(rng);
            if (const PlantedDim * p = planted_at[j]) {
                row[j] = static_cast<float>((positive ? p->class1_mean : p->class0_mean) + p->noise_std * z);
            } else {
                row[j] = static_cast<float>(spec.background_std * z);
            }
        }
    }
    RunMetadata meta = spec.meta;
    meta.split = split;
    return EmbeddingSet::create(std::move(meta), spec.n, spec.d, std::move(data), std::move(labels));
}

template <typename T>
T required(const json & j, const std::string & key, const std::string & path) {
    const auto it = j.find(key);
    if (it == j.end()) throw format_error(path + key, "is required");
    try {
        return it->get<T>();
    } catch (const json::exception &) {
        throw format_error(path + key, "has the wrong type");
    }
}

template <typename T>
T optional_field(const json & j, const std::string & key, const std::string & path, T fallback) {
    if (!j.contains(key)) return fallback;
    return required<T>(j, key, path);
}

std::size_t count_field(const json & j, const std::string & key, const std::string & path) {
    const auto it = j.find(key);
    if (it == j.end()) throw format_error(path + key, "is required");
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
        throw format_error(path + key, "must be a non-negative integer");
    }
    return it->get<std::size_t>();
}

}  // namespace

void SynthSpec::validate() const {
    if (n < 2) throw format_error("n", "must be at least 2");
    if (d < 1) throw format_error("d", "must be at least 1");
    if (!(background_std > 0.0) || !std::isfinite(background_std)) {
        throw format_error("background_std", "must be positive");
    }
    if (!(class_balance > 0.0 && class_balance < 1.0)) throw format_error("class_balance", "must lie in (0, 1)");
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < planted.size(); ++i) {
        const auto & p = planted[i];
        const auto field = [i](const char * name) { return fmt::format("planted[{}].{}", i, name); };
        if (p.dim >= d) throw format_error(field("dim"), fmt::format("{} is not below d = {}", p.dim, d));
        if (!seen.insert(p.dim).second) throw format_error(field("dim"), fmt::format("{} is planted twice", p.dim));
        if (!(p.noise_std > 0.0) || !std::isfinite(p.noise_std)) throw format_error(field("noise_std"), "must be positive");
        if (!std::isfinite(p.class0_mean)) throw format_error(field("class0_mean"), "must be finite");
        if (!std::isfinite(p.class1_mean)) throw format_error(field("class1_mean"), "must be finite");
    }
    if (meta.full_model_accuracy && !(*meta.full_model_accuracy >= 0.0 && *meta.full_model_accuracy <= 1.0)) {
        throw format_error("meta.full_model_accuracy", "must lie in [0, 1]");
    }
}

std::pair<EmbeddingSet, EmbeddingSet> generate(const SynthSpec & spec) {
    spec.validate();
    return {draw(spec, Split::train, 0), draw(spec, Split::validation, 1)};
}

SynthSpec parse_synth_spec(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error &) {
        throw format_error("spec", "is not valid JSON");
    }
    if (!j.is_object()) throw format_error("spec", "must be a JSON object");

    SynthSpec spec;
    spec.n = count_field(j, "n", "");
    spec.d = count_field(j, "d", "");
    spec.background_std = optional_field<double>(j, "background_std", "", 1.0);
    spec.class_balance = optional_field<double>(j, "class_balance", "", 0.5);
    spec.seed = j.contains("seed") ? count_field(j, "seed", "") : 0;
    spec.meta.seed = spec.seed;

    if (j.contains("planted")) {
        const auto & arr = j.at("planted");
        if (!arr.is_array()) throw format_error("planted", "must be an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto path = fmt::format("planted[{}].", i);
            PlantedDim p;
            p.dim = count_field(arr[i], "dim", path);
            p.class0_mean = required<double>(arr[i], "class0_mean", path);
            p.class1_mean = required<double>(arr[i], "class1_mean", path);
            p.noise_std = required<double>(arr[i], "noise_std", path);
            spec.planted.push_back(p);
        }
    }

    if (j.contains("meta")) {
        const auto & m = j.at("meta");
        if (!m.is_object()) throw format_error("meta", "must be an object");
        spec.meta.model_name = optional_field<std::string>(m, "model_name", "meta.", spec.meta.model_name);
        spec.meta.task_name = optional_field<std::string>(m, "task_name", "meta.", spec.meta.task_name);
        if (m.contains("seed")) spec.meta.seed = count_field(m, "seed", "meta.");
        if (m.contains("stage")) {
            try {
                spec.meta.stage = parse_stage(required<std::string>(m, "stage", "meta."));
            } catch (const std::invalid_argument &) {
                throw format_error("meta.stage", "must be 'pretrained' or 'finetuned'");
            }
        }
        if (m.contains("full_model_accuracy") && !m.at("full_model_accuracy").is_null()) {
            spec.meta.full_model_accuracy = required<double>(m, "full_model_accuracy", "meta.");
        }
    }
    spec.validate();
    return spec;
}

}  // namespace odim
