#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace odim {

enum class Split { train, validation };
enum class Stage { pretrained, finetuned };

std::string_view to_string(Split s);
std::string_view to_string(Stage s);
Split parse_split(std::string_view text);
Stage parse_stage(std::string_view text);

struct RunMetadata {
    std::string model_name;
    std::string task_name;
    std::uint64_t seed = 0;
    Split split = Split::validation;
    Stage stage = Stage::finetuned;
    // Accuracy of the full model plus classification head, as a fraction.
    std::optional<double> full_model_accuracy;

    bool operator==(const RunMetadata &) const = default;
};

// n x d float32 sentence embeddings with binary labels. Always valid:
// the only way to obtain one is through `create` (or the readers), which
// check every invariant eagerly.
class EmbeddingSet {
public:
    static EmbeddingSet create(RunMetadata meta, std::size_t rows, std::size_t dims,
                               std::vector<float> data, std::vector<std::uint8_t> labels);

    const RunMetadata & meta() const noexcept { return meta_; }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t dims() const noexcept { return dims_; }

    // Row-major, rows() * dims() values.
    std::span<const float> data() const noexcept { return data_; }
    std::span<const std::uint8_t> labels() const noexcept { return labels_; }

    std::span<const float> row(std::size_t i) const noexcept {
        return std::span<const float>(data_).subspan(i * dims_, dims_);
    }
    float value(std::size_t row, std::size_t dim) const noexcept { return data_[row * dims_ + dim]; }
    std::uint8_t label(std::size_t row) const noexcept { return labels_[row]; }

    // Copy of this set restricted to the given row indices, in that order.
    EmbeddingSet subset(std::span<const std::size_t> row_indices) const;

    bool operator==(const EmbeddingSet &) const = default;

private:
    EmbeddingSet() = default;

    RunMetadata meta_;
    std::size_t rows_ = 0;
    std::size_t dims_ = 0;
    std::vector<float> data_;
    std::vector<std::uint8_t> labels_;
};

inline constexpr std::uint32_t embd_version = 1;

// EMBD layout: "EMBD" | u32 LE version | u32 LE header_len | JSON header |
// n*d float32 LE row-major | n label bytes.
std::vector<std::uint8_t> encode_dump(const EmbeddingSet & set);
EmbeddingSet decode_dump(std::span<const std::uint8_t> bytes);

// Reads only the JSON header of a dump; used by corpus scans.
RunMetadata peek_metadata(const std::filesystem::path & source);
bool has_embd_magic(const std::filesystem::path & source);

void write_dump(const EmbeddingSet & set, const std::filesystem::path & destination);
EmbeddingSet read_dump(const std::filesystem::path & source);

// d value columns followed by one integer label column. An optional
// single leading line starting with '#' is skipped.
EmbeddingSet parse_csv(std::string_view text, RunMetadata meta);
EmbeddingSet read_csv(const std::filesystem::path & source, RunMetadata meta);

}  // namespace odim
