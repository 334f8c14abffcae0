#include "xmas/checkpoint.hpp"

#include <sstream>

#include "xmas/errors.hpp"
#include "xmas/io_util.hpp"

namespace xmas {

std::string serialize_checkpoint(const Checkpoint& ck) {
    std::string head;
    head += "format " + ck.format + "\n";
    for (const auto& [k, v] : ck.meta) head += k + " " + v + "\n";
    head += "block_count " + std::to_string(ck.blocks.size()) + "\n";

    std::string payload;
    for (const auto& [name, data] : ck.blocks) {
        append_u32le(payload, static_cast<uint32_t>(name.size()));
        payload += name;
        append_u32le(payload, static_cast<uint32_t>(data.size()));
        for (float f : data) append_f32le(payload, f);
    }

    std::string out = head;
    out.push_back('\0');
    out += payload;
    append_u32le(out, crc32(payload.data(), payload.size()));
    return out;
}

Checkpoint parse_checkpoint(const std::string& bytes, const std::string& expect_format) {
    const std::size_t nul = bytes.find('\0');
    if (nul == std::string::npos) throw MalformedHeaderError("checkpoint: missing header terminator");
    Checkpoint ck;
    std::size_t block_count = static_cast<std::size_t>(-1);
    std::istringstream head(bytes.substr(0, nul));
    std::string line;
    while (std::getline(head, line)) {
        if (line.empty()) continue;
        const std::size_t sp = line.find(' ');
        if (sp == std::string::npos) throw MalformedHeaderError("checkpoint: bad header line: " + line);
        const std::string key = line.substr(0, sp);
        const std::string val = line.substr(sp + 1);
        if (key == "format")
            ck.format = val;
        else if (key == "block_count")
            block_count = static_cast<std::size_t>(std::stoull(val));
        else
            ck.meta[key] = val;
    }
    if (ck.format.empty()) throw MalformedHeaderError("checkpoint: missing format tag");
    if (!expect_format.empty() && ck.format != expect_format)
        throw MalformedHeaderError("checkpoint: format '" + ck.format + "', expected '" +
                                   expect_format + "'");
    if (block_count == static_cast<std::size_t>(-1))
        throw MalformedHeaderError("checkpoint: missing block_count");

    if (bytes.size() < nul + 1 + 4) throw TruncatedFileError("checkpoint: truncated payload");
    const std::size_t payload_len = bytes.size() - nul - 1 - 4;
    const unsigned char* payload =
        reinterpret_cast<const unsigned char*>(bytes.data()) + nul + 1;
    const uint32_t stored = read_u32le(payload + payload_len);
    if (crc32(payload, payload_len) != stored)
        throw ChecksumError("checkpoint: payload checksum mismatch");

    std::size_t pos = 0;
    for (std::size_t b = 0; b < block_count; ++b) {
        if (pos + 4 > payload_len) throw TruncatedFileError("checkpoint: truncated block header");
        const uint32_t name_len = read_u32le(payload + pos);
        pos += 4;
        if (pos + name_len + 4 > payload_len)
            throw TruncatedFileError("checkpoint: truncated block name");
        std::string name(reinterpret_cast<const char*>(payload + pos), name_len);
        pos += name_len;
        const uint32_t count = read_u32le(payload + pos);
        pos += 4;
        if (pos + 4ull * count > payload_len)
            throw TruncatedFileError("checkpoint: truncated block data");
        std::vector<float> data(count);
        for (uint32_t i = 0; i < count; ++i) data[i] = read_f32le(payload + pos + 4ull * i);
        pos += 4ull * count;
        ck.blocks.emplace_back(std::move(name), std::move(data));
    }
    if (pos != payload_len) throw MalformedHeaderError("checkpoint: trailing bytes after blocks");
    return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    write_file_atomic(path, serialize_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::string& path, const std::string& expect_format) {
    return parse_checkpoint(read_file(path), expect_format);
}

} // namespace xmas
