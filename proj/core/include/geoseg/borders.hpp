#pragma once

#include <string>
#include <vector>

#include "geoseg/siamese.hpp"
#include "geoseg/world.hpp"

namespace geoseg {

// Ordered mid-cortex sampling path along the folded (u) direction of one
// hemisphere, at roughly uniform arc-length spacing.
struct RibbonTrace {
    Hemisphere hemisphere = Hemisphere::LEFT;
    std::vector<int> vertices;
    std::vector<double> positions_mm;  // arc length along the trace, strictly increasing
    double spacing_mm = 0.2;
};

// Squared distances between consecutive block-averaged feature vectors.
struct BorderProfile {
    int block = 9;
    std::vector<double> positions_mm;  // boundary between block i and i+1
    std::vector<double> values;        // ||mean_i - mean_{i+1}||^2
    std::vector<double> planted_borders_mm;   // ground-truth region crossings
    std::vector<double> detected_borders_mm;  // filled by detect_borders
};

RibbonTrace trace_ribbon(const World& world, Hemisphere hemisphere, double spacing_mm);

// Profile over precomputed per-trace-point embeddings (one per trace vertex).
BorderProfile profile_from_embeddings(const std::vector<Tensor>& embeddings,
                                      const World& world, const RibbonTrace& trace, int block);

// Embeds the rendered patch at every trace point with the Siamese branch,
// then reduces blocks of `block` consecutive feature vectors.
BorderProfile block_profile(SiameseModel& model, const World& world, const RibbonTrace& trace,
                            int block = 9);

// Local maxima above median + threshold_sigma * MAD of the profile values.
// Fills profile.detected_borders_mm and returns it.
std::vector<double> detect_borders(BorderProfile& profile, double threshold_sigma = 4.0);

// CSV rows: position_mm,value,is_detected,is_planted_border
void save_profile_csv(const BorderProfile& profile, const std::string& path);

}  // namespace geoseg
