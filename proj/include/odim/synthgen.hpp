#pragma once

#include "odim/embstore.hpp"

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace odim {

struct PlantedDim {
    std::size_t dim = 0;
    double class0_mean = 0.0;
    double class1_mean = 0.0;
    double noise_std = 1.0;
};

// Class-conditional Gaussian generator. Non-planted dimensions are
// N(0, background_std^2); planted ones are N(class mean, noise_std^2).
// class_balance is P(label = 1).
struct SynthSpec {
    std::size_t n = 1000;
    std::size_t d = 64;
    std::vector<PlantedDim> planted;
    double background_std = 1.0;
    double class_balance = 0.5;
    std::uint64_t seed = 0;
    // Stamped on both outputs; split is set per output.
    RunMetadata meta{"synthetic", "synthetic", 0, Split::train, Stage::finetuned, std::nullopt};

    void validate() const;
};

// Train and validation sets drawn independently from the same
// distribution. Bit-identical for identical specs.
std::pair<EmbeddingSet, EmbeddingSet> generate(const SynthSpec & spec);

// JSON form: {"n", "d", "planted": [{"dim", "class0_mean", "class1_mean",
// "noise_std"}], "background_std", "class_balance", "seed", optional "meta":
// {"model_name", "task_name", "seed", "stage", "full_model_accuracy"}}.
SynthSpec parse_synth_spec(std::string_view json_text);

}  // namespace odim
