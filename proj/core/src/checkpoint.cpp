#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "geoseg/autodiff.hpp"

namespace geoseg {

namespace {

constexpr char kMagic[] = "GSCKPT1";
constexpr size_t kMagicLen = 7;

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

}  // namespace

void save_checkpoint(const ParamStore& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out.write(kMagic, kMagicLen);
    write_pod<uint32_t>(out, static_cast<uint32_t>(params.size()));
    for (const auto& [name, p] : params) {
        write_pod<uint32_t>(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<uint8_t>(out, 0);  // dtype: float32
        write_pod<uint8_t>(out, p.trainable ? 1 : 0);
        write_pod<uint8_t>(out, p.weight_decay_exempt ? 1 : 0);
        write_pod<uint32_t>(out, static_cast<uint32_t>(p.value.rank()));
        for (int d : p.value.shape) write_pod<uint32_t>(out, static_cast<uint32_t>(d));
        out.write(reinterpret_cast<const char*>(p.value.data.data()),
                  static_cast<std::streamsize>(p.value.data.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failed");
}

ParamStore load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[kMagicLen];
    in.read(magic, kMagicLen);
    if (!in || std::memcmp(magic, kMagic, kMagicLen) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    uint32_t count = read_pod<uint32_t>(in);
    ParamStore store;
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = read_pod<uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw std::runtime_error("checkpoint: truncated name");
        uint8_t dtype = read_pod<uint8_t>(in);
        if (dtype != 0) throw std::runtime_error("checkpoint: unsupported dtype");
        bool trainable = read_pod<uint8_t>(in) != 0;
        bool exempt = read_pod<uint8_t>(in) != 0;
        uint32_t rank = read_pod<uint32_t>(in);
        std::vector<int> shape(rank);
        for (uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int>(read_pod<uint32_t>(in));
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (!in) throw std::runtime_error("checkpoint: truncated tensor data");
        store.create(name, std::move(t), trainable, exempt);
    }
    return store;
}

}  // namespace geoseg
