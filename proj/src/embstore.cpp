#include "odim/embstore.hpp"

#include "odim/errors.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include <fmt/format.h>
#include <json.hpp>

namespace odim {

namespace {

using json = nlohmann::json;

constexpr std::uint8_t magic_bytes[4] = {0x45, 0x4D, 0x42, 0x44};
constexpr std::size_t preamble_size = 12;

void put_u32(std::vector<std::uint8_t> & out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t * p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

json metadata_to_json(const RunMetadata & meta, std::size_t n, std::size_t d) {
    json h;
    h["model_name"] = meta.model_name;
    h["task_name"] = meta.task_name;
    h["seed"] = meta.seed;
    h["split"] = to_string(meta.split);
    h["stage"] = to_string(meta.stage);
    h["full_model_accuracy"] = meta.full_model_accuracy ? json(*meta.full_model_accuracy) : json(nullptr);
    h["n"] = n;
    h["d"] = d;
    return h;
}

template <typename T>
T header_field(const json & h, const char * key) {
    auto it = h.find(key);
    if (it == h.end()) throw format_error(key, "missing from header");
    try {
        return it->get<T>();
    } catch (const json::exception &) {
        throw format_error(key, "has the wrong type in header");
    }
}

std::uint64_t header_count(const json & h, const char * key) {
    auto it = h.find(key);
    if (it == h.end()) throw format_error(key, "missing from header");
    if (!it->is_number_unsigned()) throw format_error(key, "must be a non-negative integer");
    return it->get<std::uint64_t>();
}

RunMetadata metadata_from_json(const json & h) {
    if (!h.is_object()) throw format_error("header", "is not a JSON object");
    RunMetadata meta;
    meta.model_name = header_field<std::string>(h, "model_name");
    meta.task_name = header_field<std::string>(h, "task_name");
    meta.seed = header_count(h, "seed");
    try {
        meta.split = parse_split(header_field<std::string>(h, "split"));
        meta.stage = parse_stage(header_field<std::string>(h, "stage"));
    } catch (const std::invalid_argument & e) {
        throw format_error(e.what(), "unknown value");
    }
    auto acc = h.find("full_model_accuracy");
    if (acc != h.end() && !acc->is_null()) {
        if (!acc->is_number()) throw format_error("full_model_accuracy", "must be a number or null");
        meta.full_model_accuracy = acc->get<double>();
    }
    return meta;
}

struct Preamble {
    std::uint32_t header_len;
};

Preamble check_preamble(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || !std::equal(std::begin(magic_bytes), std::end(magic_bytes), bytes.begin())) {
        throw format_error("magic", "expected \"EMBD\"");
    }
    if (bytes.size() < preamble_size) throw format_error("version", "file truncated before header");
    const std::uint32_t version = get_u32(bytes.data() + 4);
    if (version != embd_version) {
        throw format_error("version", fmt::format("unsupported version {} (expected {})", version, embd_version));
    }
    const std::uint32_t header_len = get_u32(bytes.data() + 8);
    if (header_len > bytes.size() - preamble_size) {
        throw format_error("header_len", fmt::format("declares {} bytes but only {} remain", header_len,
                                                      bytes.size() - preamble_size));
    }
    return {header_len};
}

json parse_header(std::span<const std::uint8_t> bytes) {
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error &) {
        throw format_error("header", "is not valid JSON");
    }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path & source) {
    std::ifstream in(source, std::ios::binary);
    if (!in) throw io_error(fmt::format("cannot open '{}'", source.string()));
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw io_error(fmt::format("failed reading '{}'", source.string()));
    return bytes;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

std::string_view to_string(Split s) { return s == Split::train ? "train" : "validation"; }
std::string_view to_string(Stage s) { return s == Stage::pretrained ? "pretrained" : "finetuned"; }

Split parse_split(std::string_view text) {
    if (text == "train") return Split::train;
    if (text == "validation") return Split::validation;
    throw std::invalid_argument("split");
}

Stage parse_stage(std::string_view text) {
    if (text == "pretrained") return Stage::pretrained;
    if (text == "finetuned") return Stage::finetuned;
    throw std::invalid_argument("stage");
}

EmbeddingSet EmbeddingSet::create(RunMetadata meta, std::size_t rows, std::size_t dims, std::vector<float> data,
                                  std::vector<std::uint8_t> labels) {
    if (rows == 0) throw format_error("n", "must be at least 1");
    if (dims == 0) throw format_error("d", "must be at least 1");
    if (rows > std::numeric_limits<std::size_t>::max() / dims || data.size() != rows * dims) {
        throw format_error("data", fmt::format("holds {} values, expected n*d = {}*{}", data.size(), rows, dims));
    }
    if (labels.size() != rows) {
        throw format_error("labels", fmt::format("holds {} entries, expected n = {}", labels.size(), rows));
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            throw format_error(fmt::format("data[{}][{}]", i / dims, i % dims), "is NaN or infinite");
        }
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] > 1) throw format_error(fmt::format("labels[{}]", i), "must be 0 or 1");
    }
    if (meta.full_model_accuracy) {
        const double a = *meta.full_model_accuracy;
        if (!(a >= 0.0 && a <= 1.0)) throw format_error("full_model_accuracy", "must lie in [0, 1]");
    }

    EmbeddingSet set;
    set.meta_ = std::move(meta);
    set.rows_ = rows;
    set.dims_ = dims;
    set.data_ = std::move(data);
    set.labels_ = std::move(labels);
    return set;
}

EmbeddingSet EmbeddingSet::subset(std::span<const std::size_t> row_indices) const {
    std::vector<float> data;
    std::vector<std::uint8_t> labels;
    data.reserve(row_indices.size() * dims_);
    labels.reserve(row_indices.size());
    for (std::size_t r : row_indices) {
        const auto src = row(r);
        data.insert(data.end(), src.begin(), src.end());
        labels.push_back(labels_[r]);
    }
    return create(meta_, row_indices.size(), dims_, std::move(data), std::move(labels));
}

std::vector<std::uint8_t> encode_dump(const EmbeddingSet & set) {
    const std::string header = metadata_to_json(set.meta(), set.rows(), set.dims()).dump();

    std::vector<std::uint8_t> out(magic_bytes, magic_bytes + 4);
    out.reserve(preamble_size + header.size() + set.data().size() * 4 + set.rows());
    put_u32(out, embd_version);
    put_u32(out, static_cast<std::uint32_t>(header.size()));
    for (char c : header) out.push_back(static_cast<std::uint8_t>(c));
    for (float v : set.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    for (std::uint8_t l : set.labels()) out.push_back(l);
    return out;
}

EmbeddingSet decode_dump(std::span<const std::uint8_t> bytes) {
    const Preamble pre = check_preamble(bytes);
    const json h = parse_header(bytes.subspan(preamble_size, pre.header_len));
    RunMetadata meta = metadata_from_json(h);
    const std::uint64_t n = header_count(h, "n");
    const std::uint64_t d = header_count(h, "d");
    if (n == 0) throw format_error("n", "must be at least 1");
    if (d == 0) throw format_error("d", "must be at least 1");

    const auto payload = bytes.subspan(preamble_size + pre.header_len);
    if (n > payload.size() || d > payload.size() / 4 / n) {
        throw format_error("n", fmt::format("header declares n={} d={} but payload holds only {} bytes", n, d,
                                            payload.size()));
    }
    const std::size_t value_bytes = static_cast<std::size_t>(n * d * 4);
    const std::size_t expected = value_bytes + static_cast<std::size_t>(n);
    if (payload.size() != expected) {
        if (payload.size() < expected) {
            throw format_error("n", fmt::format("header declares n={} d={} ({} payload bytes) but payload holds {}",
                                                n, d, expected, payload.size()));
        }
        throw format_error("labels", fmt::format("expected {} label bytes, payload has {} trailing bytes", n,
                                                 payload.size() - value_bytes));
    }

    std::vector<float> data(static_cast<std::size_t>(n * d));
    const std::uint8_t * p = payload.data();
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(data.data(), p, value_bytes);
    } else {
        for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::bit_cast<float>(get_u32(p + 4 * i));
    }
    std::vector<std::uint8_t> labels(payload.begin() + value_bytes, payload.end());
    return EmbeddingSet::create(std::move(meta), n, d, std::move(data), std::move(labels));
}

RunMetadata peek_metadata(const std::filesystem::path & source) {
    std::ifstream in(source, std::ios::binary);
    if (!in) throw io_error(fmt::format("cannot open '{}'", source.string()));
    std::vector<std::uint8_t> head(preamble_size);
    in.read(reinterpret_cast<char *>(head.data()), preamble_size);
    head.resize(static_cast<std::size_t>(in.gcount()));
    if (head.size() < 4 || !std::equal(std::begin(magic_bytes), std::end(magic_bytes), head.begin())) {
        throw format_error("magic", "expected \"EMBD\"");
    }
    if (head.size() < preamble_size) throw format_error("version", "file truncated before header");
    const std::uint32_t header_len = get_u32(head.data() + 8);
    std::error_code ec;
    const auto file_size = std::filesystem::file_size(source, ec);
    if (ec || header_len > file_size - preamble_size) {
        throw format_error("header_len", fmt::format("declares {} bytes, more than the file holds", header_len));
    }
    head.resize(preamble_size + header_len);
    in.read(reinterpret_cast<char *>(head.data() + preamble_size), header_len);
    head.resize(preamble_size + static_cast<std::size_t>(in.gcount()));
    const Preamble pre = check_preamble(head);
    return metadata_from_json(parse_header(std::span<const std::uint8_t>(head).subspan(preamble_size, pre.header_len)));
}

bool has_embd_magic(const std::filesystem::path & source) {
    std::ifstream in(source, std::ios::binary);
    char head[4] = {};
    if (!in.read(head, 4)) return false;
    return std::memcmp(head, magic_bytes, 4) == 0;
}

void write_dump(const EmbeddingSet & set, const std::filesystem::path & destination) {
    const auto bytes = encode_dump(set);
    auto tmp = destination;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error(fmt::format("cannot create '{}'", tmp.string()));
        out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw io_error(fmt::format("failed writing '{}'", tmp.string()));
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, destination, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw io_error(fmt::format("cannot move dump into '{}'", destination.string()));
    }
}

EmbeddingSet read_dump(const std::filesystem::path & source) {
    const auto bytes = read_file(source);
    return decode_dump(bytes);
}

EmbeddingSet parse_csv(std::string_view text, RunMetadata meta) {
    std::vector<float> data;
    std::vector<std::uint8_t> labels;
    std::size_t dims = 0;
    std::size_t line_no = 0;
    bool seen_content = false;

    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (seen_content) throw format_error(fmt::format("row {}", line_no), "header line must come first");
            seen_content = true;
            continue;
        }
        seen_content = true;

        std::vector<std::string_view> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            cells.push_back(trim(line.substr(start, comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (cells.size() < 2) {
            throw format_error(fmt::format("row {}", line_no), "needs at least one value and a label");
        }
        if (dims == 0) {
            dims = cells.size() - 1;
        } else if (cells.size() - 1 != dims) {
            throw format_error(fmt::format("row {}", line_no),
                               fmt::format("has {} columns, expected {}", cells.size(), dims + 1));
        }
        for (std::size_t c = 0; c + 1 < cells.size(); ++c) {
            float v = 0.0f;
            const auto cell = cells[c];
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
                throw format_error(fmt::format("row {} column {}", line_no, c + 1),
                                   fmt::format("'{}' is not a number", cell));
            }
            data.push_back(v);
        }
        const auto cell = cells.back();
        long label = -1;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), label);
        if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
            throw format_error(fmt::format("row {} label", line_no), fmt::format("'{}' is not an integer", cell));
        }
        if (label != 0 && label != 1) {
            throw format_error(fmt::format("row {} label", line_no), fmt::format("{} is outside {{0,1}}", label));
        }
        labels.push_back(static_cast<std::uint8_t>(label));
    }
    if (labels.empty()) throw format_error("n", "CSV contains no data rows");
    const std::size_t rows = labels.size();
    return EmbeddingSet::create(std::move(meta), rows, dims, std::move(data), std::move(labels));
}

EmbeddingSet read_csv(const std::filesystem::path & source, RunMetadata meta) {
    const auto bytes = read_file(source);
    return parse_csv(std::string_view(reinterpret_cast<const char *>(bytes.data()), bytes.size()), std::move(meta));
}

}  // namespace odim
