#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geoseg/mesh.hpp"
#include "geoseg/tensor.hpp"

namespace geoseg {

struct RegionTexture {
    int stripe_count = 3;          // laminar stripes across the cortical depth
    double stripe_contrast = 0.8;  // in [0,1]
    double cell_noise_density = 0.05;
};

struct WorldSpec {
    uint64_t seed = 1;
    int grid_u = 128;              // vertices along the folded direction, per hemisphere
    int grid_v = 32;               // vertices along the extrusion direction
    double sheet_size_u = 25.4;    // mm, arc length of the generating curve
    double sheet_size_v = 6.2;     // mm
    double fold_amplitude = 0.9;   // mm
    double fold_frequency = 3.0;   // cycles per sheet
    int n_regions = 4;
    std::vector<RegionTexture> region_texture;  // size n_regions (filled by default_textures)
    int patch_px = 32;
    double resolution_um = 31.25;  // micrometers per pixel (patch spans ~1 mm)
    Vec3 section_normal = {1.0, 0.0, 0.0};
    double atlas_blur_mm = 0.25;
    double atlas_shift_mm = 0.5;

    double cortex_depth_mm = 0.45;
    double hemisphere_gap_mm = 2.0;

    static WorldSpec desk_default(uint64_t seed);
    void fill_default_textures();
    void validate() const;

    // regions + other-cortex + background
    int n_classes() const { return n_regions + 2; }
    double pixel_mm() const { return resolution_um / 1000.0; }
};

// Label taxonomy of rendered patches.
inline constexpr int kClassBackground = 0;
inline constexpr int kClassOtherCortex = 1;  // below the laminar band (white matter side)
inline int class_for_region(int region) { return region + 2; }

struct RenderedPatch {
    Tensor image;                  // [px, px], values in [0,1]
    Vec3 location{};               // mm
    int vertex = -1;
    int region = -1;
    Hemisphere hemisphere = Hemisphere::LEFT;
    double obliqueness_deg = 90.0;
    bool has_label = false;
    std::vector<uint8_t> label_image;  // px*px class ids, row-major
    bool has_prior = false;
    Tensor atlas_prior;            // [n_classes, px, px]
};

// The synthetic cortical world: an extruded, sinusoidally folded sheet per
// hemisphere (right = left mirrored across the left-right axis), carrying
// banded regions with laminar stripe textures. Immutable after build.
struct World {
    WorldSpec spec;
    SurfaceMesh mesh;

    // Generating curve sampled uniformly in arc length (unmirrored frame).
    struct CurveSample {
        double s;      // arc length
        double x, z;   // position in the fold plane
        double theta;  // tangent angle
    };
    std::vector<CurveSample> curve;
    double curve_step = 0.0;

    int region_of_s(double s) const;
    int vertex_id(Hemisphere h, int i, int j) const;
};

World build_world(const WorldSpec& spec);

// Dihedral angle (degrees, in [0,180]) between the cutting plane and the
// tangent plane at v; 90 means the cut is perpendicular to the surface.
double obliqueness(const SurfaceMesh& mesh, int v, const Vec3& section_normal);

RenderedPatch render_patch(const World& world, int v, bool labeled);

// Blurred, randomly shifted ground-truth label maps, renormalized per pixel.
Tensor atlas_prior(const World& world, int v);

void save_world_manifest(const WorldSpec& spec, const std::string& path);
WorldSpec load_world_manifest(const std::string& path);

}  // namespace geoseg
