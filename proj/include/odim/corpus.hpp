#pragma once

#include "odim/embstore.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace odim {

struct CorpusEntry {
    std::filesystem::path path;
    RunMetadata meta;
};

// EMBD files found under a directory, identified by content (magic bytes),
// not by extension. Entries are sorted by path and unique by
// (model, task, seed, split, stage).
struct CorpusIndex {
    std::filesystem::path root;
    std::vector<CorpusEntry> entries;

    std::vector<std::string> model_names() const;
};

CorpusIndex scan_corpus(const std::filesystem::path & root);

}  // namespace odim
