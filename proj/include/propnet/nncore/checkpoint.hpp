#ifndef PROPNET_NNCORE_CHECKPOINT_HPP
#define PROPNET_NNCORE_CHECKPOINT_HPP

#include <map>
#include <string>
#include <vector>

#include "propnet/nncore/array.hpp"

namespace propnet::nncore {

// Single-file checkpoint: magic + format version, a JSON manifest (free-form
// hyperparameters; a "format_version" field is added automatically), then
// named parameter entries with shape and little-endian float64 payload.
// Entries are written in insertion order and read back in file order.
struct Checkpoint {
    std::string manifest_json = "{}";
    std::vector<std::pair<std::string, NumArray>> entries;

    void add(const std::string& name, NumArray value) { entries.emplace_back(name, std::move(value)); }

    const NumArray& get(const std::string& name) const {
        for (const auto& [n, v] : entries)
            if (n == name) return v;
        throw_error(ErrorKind::Checkpoint, "checkpoint entry not found: " + name);
    }

    bool has(const std::string& name) const {
        for (const auto& [n, v] : entries)
            if (n == name) return true;
        return false;
    }
};

constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace propnet::nncore

#endif  // PROPNET_NNCORE_CHECKPOINT_HPP
