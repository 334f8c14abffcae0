#ifndef XMAS_CHECKPOINT_HPP
#define XMAS_CHECKPOINT_HPP

#include <map>
#include <string>
#include <vector>

namespace xmas {

// Container for model state: a format tag, a key-value metadata echo of the
// training config, and named parameter blocks stored as little-endian f32.
// Optimizer moments ride along as ordinary blocks so a resumed run continues
// bit-for-bit where the saved one stopped.
struct Checkpoint {
    std::string format;
    std::map<std::string, std::string> meta;
    std::vector<std::pair<std::string, std::vector<float>>> blocks;

    const std::vector<float>* find(const std::string& name) const {
        for (const auto& b : blocks)
            if (b.first == name) return &b.second;
        return nullptr;
    }
    std::string meta_or(const std::string& key, const std::string& fallback) const {
        auto it = meta.find(key);
        return it == meta.end() ? fallback : it->second;
    }
};

std::string serialize_checkpoint(const Checkpoint& ck);
Checkpoint parse_checkpoint(const std::string& bytes, const std::string& expect_format);

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path, const std::string& expect_format);

} // namespace xmas

#endif
