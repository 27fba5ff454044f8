#include "propnet/nncore/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace propnet::nncore {

namespace {

constexpr char kMagic[4] = {'P', 'N', 'C', 'K'};

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_error(ErrorKind::Io, "cannot open checkpoint for writing: " + path);

    nlohmann::ordered_json manifest;
    try {
        manifest = nlohmann::ordered_json::parse(ckpt.manifest_json);
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorKind::Checkpoint, std::string("manifest is not valid JSON: ") + e.what());
    }
    manifest["format_version"] = kCheckpointVersion;
    const std::string manifest_str = manifest.dump();

    out.write(kMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u64(out, manifest_str.size());
    out.write(manifest_str.data(), static_cast<std::streamsize>(manifest_str.size()));
    put_u64(out, ckpt.entries.size());
    for (const auto& [name, value] : ckpt.entries) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(out, static_cast<std::uint32_t>(value.shape.size()));
        for (std::size_t d : value.shape) put_u64(out, d);
        for (double x : value.data) put_f64(out, x);
    }
    if (!out) throw_error(ErrorKind::Io, "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_error(ErrorKind::Io, "cannot open checkpoint: " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw_error(ErrorKind::Checkpoint, "not a checkpoint file: " + path);
    const std::uint32_t version = get_u32(in);
    if (version != kCheckpointVersion)
        throw_error(ErrorKind::Checkpoint,
                    "unsupported checkpoint version " + std::to_string(version) + " in " + path);

    Checkpoint ckpt;
    const std::uint64_t manifest_len = get_u64(in);
    std::string manifest(manifest_len, '\0');
    in.read(manifest.data(), static_cast<std::streamsize>(manifest_len));
    ckpt.manifest_json = manifest;

    const std::uint64_t count = get_u64(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = get_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const std::uint32_t ndim = get_u32(in);
        std::vector<std::size_t> shape(ndim);
        for (std::uint32_t d = 0; d < ndim; ++d) shape[d] = static_cast<std::size_t>(get_u64(in));
        NumArray arr = NumArray::zeros(shape);
        for (double& x : arr.data) x = get_f64(in);
        if (!in) throw_error(ErrorKind::Checkpoint, "truncated checkpoint: " + path);
        ckpt.add(name, std::move(arr));
    }
    return ckpt;
}

}  // namespace propnet::nncore
