#pragma once

#include <string>
#include <vector>

#include "geoseg/sampler.hpp"
#include "geoseg/tensor.hpp"

namespace geoseg {

// One patch record of the binary dataset container.
struct StoredPatch {
    PatchMeta meta;
    std::vector<float> image;     // patch_px * patch_px
    std::vector<uint8_t> labels;  // patch_px * patch_px, present iff has_labels
    std::vector<float> prior;     // n_classes * patch_px * patch_px, iff has_priors
};

// Binary patch dataset (magic GSPATCH1). Round-trips bit-identically.
struct PatchContainer {
    int patch_px = 0;
    bool has_labels = false;
    bool has_priors = false;
    int n_classes = 0;  // meaningful iff has_priors
    std::vector<StoredPatch> patches;

    PatchDataset dataset() const;  // metadata view
    void validate() const;
};

void save_container(const PatchContainer& c, const std::string& path);
PatchContainer load_container(const std::string& path);

}  // namespace geoseg
