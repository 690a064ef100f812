#include "sdwarp/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "sdwarp/common.hpp"

namespace sdwarp {

namespace {
constexpr char kMagic[8] = {'S', 'D', 'C', 'K', 'P', 'T', '1', '\n'};

void put_u32(std::ostream& os, uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v & 0xff), static_cast<uint8_t>((v >> 8) & 0xff),
                    static_cast<uint8_t>((v >> 16) & 0xff), static_cast<uint8_t>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
    uint8_t b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0] | (b[1] << 8) | (b[2] << 16) | (uint32_t(b[3]) << 24));
}
}  // namespace

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("write_checkpoint: cannot open " + path);
    os.write(kMagic, sizeof(kMagic));
    std::string manifest;
    for (const auto& [k, v] : ckpt.manifest) manifest += k + "=" + v + "\n";
    put_u32(os, static_cast<uint32_t>(manifest.size()));
    os.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
    put_u32(os, static_cast<uint32_t>(ckpt.entries.size()));
    for (const auto& [name, t] : ckpt.entries) {
        put_u32(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(os, static_cast<uint32_t>(t.rank()));
        for (int i = 0; i < t.rank(); ++i) put_u32(os, static_cast<uint32_t>(t.dim(i)));
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(sizeof(float) * static_cast<size_t>(t.numel())));
    }
    if (!os) throw FormatError("write_checkpoint: short write " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("read_checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError("read_checkpoint: bad magic in " + path);
    Checkpoint ckpt;
    const uint32_t mlen = get_u32(is);
    std::string manifest(mlen, '\0');
    is.read(manifest.data(), mlen);
    size_t pos = 0;
    while (pos < manifest.size()) {
        const size_t nl = manifest.find('\n', pos);
        if (nl == std::string::npos) break;
        const std::string line = manifest.substr(pos, nl - pos);
        pos = nl + 1;
        const size_t eq = line.find('=');
        if (eq != std::string::npos) ckpt.manifest[line.substr(0, eq)] = line.substr(eq + 1);
    }
    const uint32_t count = get_u32(is);
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t nlen = get_u32(is);
        std::string name(nlen, '\0');
        is.read(name.data(), nlen);
        const uint32_t rank = get_u32(is);
        std::vector<int64_t> shape(rank);
        for (uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int64_t>(get_u32(is));
        Tensor<float> t(shape);
        is.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(sizeof(float) * static_cast<size_t>(t.numel())));
        if (!is) throw FormatError("read_checkpoint: truncated entry " + name + " in " + path);
        ckpt.entries.emplace_back(std::move(name), std::move(t));
    }
    return ckpt;
}

}  // namespace sdwarp
