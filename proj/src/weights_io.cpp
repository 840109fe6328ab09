#include "simtune/weights_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "simtune/errors.hpp"

namespace simtune {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'W', 'E', 'I', 'G', 'H', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

void put_f64(std::ostream& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw DataError("weights file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw DataError("weights file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    return std::bit_cast<double>(get_u64(in));
}

}  // namespace

void save_weights(const std::string& path, const NamedTensors& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write weights file '" + path + "'");
    out.write(kMagic, sizeof kMagic);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, tensor] : tensors) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
        for (int d : tensor.shape) put_u64(out, static_cast<std::uint64_t>(d));
        for (double v : tensor.data) put_f64(out, v);
    }
    if (!out) throw DataError("failed while writing weights file '" + path + "'");
}

NamedTensors load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open weights file '" + path + "'");
    char magic[sizeof kMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw DataError("'" + path + "' is not a weights file (bad magic)");
    const std::uint32_t version = get_u32(in);
    if (version != kVersion)
        throw DataError("unsupported weights format version " + std::to_string(version));
    const std::uint32_t count = get_u32(in);

    NamedTensors tensors;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = get_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw DataError("weights file truncated");
        const std::uint32_t rank = get_u32(in);
        std::vector<int> shape(rank);
        std::size_t numel = 1;
        for (auto& d : shape) {
            d = static_cast<int>(get_u64(in));
            if (d <= 0) throw DataError("weights file has non-positive dimension");
            numel *= static_cast<std::size_t>(d);
        }
        std::vector<double> data(numel);
        for (auto& v : data) v = get_f64(in);
        if (!tensors.emplace(std::move(name), Tensor(std::move(shape), std::move(data))).second)
            throw DataError("weights file has duplicate array names");
    }
    return tensors;
}

}  // namespace simtune
