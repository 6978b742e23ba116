#include "odim/corpus.hpp"

#include "odim/errors.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include <fmt/format.h>

namespace odim {

std::vector<std::string> CorpusIndex::model_names() const {
    std::set<std::string> names;
    for (const auto & e : entries) names.insert(e.meta.model_name);
    return {names.begin(), names.end()};
}

CorpusIndex scan_corpus(const std::filesystem::path & root) {
    std::error_code ec;
    if (!std::filesystem::is_directory(root, ec)) {
        throw io_error(fmt::format("corpus root '{}' is not a readable directory", root.string()));
    }
    CorpusIndex index;
    index.root = root;
    for (auto it = std::filesystem::recursive_directory_iterator(root, ec);
         !ec && it != std::filesystem::recursive_directory_iterator(); it.increment(ec)) {
        if (!it->is_regular_file() || !has_embd_magic(it->path())) continue;
        index.entries.push_back({it->path(), peek_metadata(it->path())});
    }
    if (ec) throw io_error(fmt::format("failed scanning '{}': {}", root.string(), ec.message()));
    if (index.entries.empty()) {
        throw format_error("corpus", fmt::format("no EMBD files under '{}'", root.string()));
    }
    std::sort(index.entries.begin(), index.entries.end(),
              [](const CorpusEntry & a, const CorpusEntry & b) { return a.path < b.path; });

    using Key = std::tuple<std::string, std::string, std::uint64_t, Split, Stage>;
    std::map<Key, std::filesystem::path> seen;
    for (const auto & e : index.entries) {
        const Key key{e.meta.model_name, e.meta.task_name, e.meta.seed, e.meta.split, e.meta.stage};
        const auto [pos, inserted] = seen.emplace(key, e.path);
        if (!inserted) {
            throw format_error("corpus", fmt::format("'{}' and '{}' describe the same run", pos->second.string(),
                                                     e.path.string()));
        }
    }
    return index;
}

}  // namespace odim
