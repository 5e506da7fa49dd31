#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geoseg/mesh.hpp"
#include "geoseg/world.hpp"

namespace geoseg {

enum class Split : uint8_t { TRAIN = 0, TEST = 1 };

struct PatchMeta {
    int vertex = -1;
    Hemisphere hemisphere = Hemisphere::LEFT;
    int region = -1;
    double obliqueness_deg = 90.0;
    Split split = Split::TRAIN;
    Vec3 y_coord{};  // mirrored inflated coordinate, mm
};

struct PatchDataset {
    std::vector<PatchMeta> patches;
    int size() const { return static_cast<int>(patches.size()); }
};

struct Pair {
    int a = 0;
    int b = 0;             // patch indices
    double y_dist = 0.0;   // mm, filled by annotate_distances
};

struct PairList {
    std::vector<Pair> pairs;
    bool annotated = false;

    std::vector<int> degrees(int n_patches) const;
    // Throws if any structural invariant is violated.
    void validate(const PatchDataset& dataset) const;
};

// Obliqueness acceptance window, degrees.
inline constexpr double kObliquenessMin = 45.0;
inline constexpr double kObliquenessMax = 135.0;

// Uniform draw (without replacement) of vertices passing the obliqueness
// filter; a held-out fraction is tagged TEST via strips along the
// u-parameter axis.
PatchDataset sample_patches(const World& world, const SurfaceMesh& mesh, int n,
                            double split_fraction, uint64_t seed);

// Configuration-model pairing: degrees follow P(d) ~ d^-gamma rescaled to
// sum exactly 2*n_pairs (largest-remainder), stubs matched uniformly within
// each hemisphere, self/duplicate pairs repaired by bounded stub swaps.
PairList build_pairs(const PatchDataset& dataset, int n_pairs, double gamma, uint64_t seed);

// Fills y_dist via geodesic distances between patch vertices; idempotent.
void annotate_distances(PairList& pairs, const PatchDataset& dataset, const SurfaceMesh& mesh);

void save_pairs(const PairList& pairs, const std::string& path);
PairList load_pairs(const std::string& path);

void save_dataset_manifest(const PatchDataset& dataset, const std::string& path);
PatchDataset load_dataset_manifest(const std::string& path);

}  // namespace geoseg
