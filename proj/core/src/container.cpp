#include "geoseg/container.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace geoseg {

namespace {

constexpr char kMagic[8] = {'G', 'S', 'P', 'A', 'T', 'C', 'H', '1'};

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw std::runtime_error("container: truncated file");
    return v;
}

}  // namespace

PatchDataset PatchContainer::dataset() const {
    PatchDataset d;
    d.patches.reserve(patches.size());
    for (const StoredPatch& p : patches) d.patches.push_back(p.meta);
    return d;
}

void PatchContainer::validate() const {
    if (patch_px <= 0) throw std::runtime_error("container: patch_px must be positive");
    if (has_priors && n_classes <= 0)
        throw std::runtime_error("container: priors present but n_classes not set");
    const size_t npix = static_cast<size_t>(patch_px) * patch_px;
    for (const StoredPatch& p : patches) {
        if (p.image.size() != npix) throw std::runtime_error("container: bad image size");
        if (has_labels != !p.labels.empty() || (has_labels && p.labels.size() != npix))
            throw std::runtime_error("container: bad label size");
        size_t want_prior = has_priors ? npix * n_classes : 0;
        if (p.prior.size() != want_prior) throw std::runtime_error("container: bad prior size");
    }
}

void save_container(const PatchContainer& c, const std::string& path) {
    c.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_container: cannot open " + path);
    out.write(kMagic, sizeof(kMagic));
    write_pod<uint32_t>(out, static_cast<uint32_t>(c.patches.size()));
    write_pod<uint32_t>(out, static_cast<uint32_t>(c.patch_px));
    write_pod<uint8_t>(out, c.has_labels ? 1 : 0);
    write_pod<uint8_t>(out, c.has_priors ? 1 : 0);
    write_pod<uint16_t>(out, static_cast<uint16_t>(c.has_priors ? c.n_classes : 0));
    for (const StoredPatch& p : c.patches) {
        write_pod<int32_t>(out, p.meta.vertex);
        write_pod<uint8_t>(out, p.meta.hemisphere == Hemisphere::LEFT ? 0 : 1);
        write_pod<int32_t>(out, p.meta.region);
        write_pod<int32_t>(out, static_cast<int32_t>(std::llround(p.meta.obliqueness_deg * 100)));
        write_pod<uint8_t>(out, static_cast<uint8_t>(p.meta.split));
        for (int k = 0; k < 3; ++k)
            write_pod<float>(out, static_cast<float>(p.meta.y_coord[k]));
        out.write(reinterpret_cast<const char*>(p.image.data()),
                  static_cast<std::streamsize>(p.image.size() * sizeof(float)));
        if (c.has_labels)
            out.write(reinterpret_cast<const char*>(p.labels.data()),
                      static_cast<std::streamsize>(p.labels.size()));
        if (c.has_priors)
            out.write(reinterpret_cast<const char*>(p.prior.data()),
                      static_cast<std::streamsize>(p.prior.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("save_container: write failed for " + path);
}

PatchContainer load_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_container: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load_container: bad magic in " + path);
    PatchContainer c;
    uint32_t count = read_pod<uint32_t>(in);
    c.patch_px = static_cast<int>(read_pod<uint32_t>(in));
    c.has_labels = read_pod<uint8_t>(in) != 0;
    c.has_priors = read_pod<uint8_t>(in) != 0;
    c.n_classes = read_pod<uint16_t>(in);
    const size_t npix = static_cast<size_t>(c.patch_px) * c.patch_px;
    c.patches.resize(count);
    for (StoredPatch& p : c.patches) {
        p.meta.vertex = read_pod<int32_t>(in);
        p.meta.hemisphere = read_pod<uint8_t>(in) ? Hemisphere::RIGHT : Hemisphere::LEFT;
        p.meta.region = read_pod<int32_t>(in);
        p.meta.obliqueness_deg = read_pod<int32_t>(in) / 100.0;
        p.meta.split = static_cast<Split>(read_pod<uint8_t>(in));
        for (int k = 0; k < 3; ++k) p.meta.y_coord[k] = read_pod<float>(in);
        p.image.resize(npix);
        in.read(reinterpret_cast<char*>(p.image.data()),
                static_cast<std::streamsize>(npix * sizeof(float)));
        if (c.has_labels) {
            p.labels.resize(npix);
            in.read(reinterpret_cast<char*>(p.labels.data()), static_cast<std::streamsize>(npix));
        }
        if (c.has_priors) {
            p.prior.resize(npix * c.n_classes);
            in.read(reinterpret_cast<char*>(p.prior.data()),
                    static_cast<std::streamsize>(p.prior.size() * sizeof(float)));
        }
        if (!in) throw std::runtime_error("load_container: truncated file " + path);
    }
    char extra;
    if (in.read(&extra, 1))
        throw std::runtime_error("load_container: trailing bytes in " + path);
    c.validate();
    return c;
}

}  // namespace geoseg
