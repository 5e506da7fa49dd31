#include "geoseg/borders.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace geoseg {

RibbonTrace trace_ribbon(const World& world, Hemisphere hemisphere, double spacing_mm) {
    const WorldSpec& spec = world.spec;
    const double du = spec.sheet_size_u / (spec.grid_u - 1);
    if (spacing_mm <= 0.0) throw std::invalid_argument("trace_ribbon: spacing must be positive");
    if (spacing_mm >= spec.sheet_size_u)
        throw std::invalid_argument("trace_ribbon: spacing exceeds the sheet extent");
    int step = std::max(1, static_cast<int>(std::llround(spacing_mm / du)));
    RibbonTrace trace;
    trace.hemisphere = hemisphere;
    trace.spacing_mm = step * du;
    const int j_mid = spec.grid_v / 2;
    for (int i = 0; i < spec.grid_u; i += step) {
        trace.vertices.push_back(world.vertex_id(hemisphere, i, j_mid));
        trace.positions_mm.push_back(i * du);  // the curve is arc-length parameterized
    }
    return trace;
}

BorderProfile profile_from_embeddings(const std::vector<Tensor>& embeddings,
                                      const World& world, const RibbonTrace& trace, int block) {
    if (block < 1) throw std::invalid_argument("block_profile: block must be >= 1");
    if (embeddings.size() != trace.vertices.size())
        throw std::invalid_argument("block_profile: one embedding per trace point required");
    const int n_points = static_cast<int>(trace.vertices.size());
    const int n_blocks = n_points / block;
    if (n_blocks < 2)
        throw std::invalid_argument("block_profile: trace shorter than two blocks");

    const size_t dim = embeddings[0].data.size();
    std::vector<std::vector<double>> means(n_blocks, std::vector<double>(dim, 0.0));
    for (int b = 0; b < n_blocks; ++b) {
        for (int k = 0; k < block; ++k) {
            const Tensor& e = embeddings[static_cast<size_t>(b) * block + k];
            if (e.data.size() != dim)
                throw std::invalid_argument("block_profile: inconsistent embedding size");
            for (size_t d = 0; d < dim; ++d) means[b][d] += e.data[d];
        }
        for (double& v : means[b]) v /= block;
    }

    BorderProfile profile;
    profile.block = block;
    for (int b = 0; b + 1 < n_blocks; ++b) {
        double sq = 0.0;
        for (size_t d = 0; d < dim; ++d) {
            double diff = means[b][d] - means[b + 1][d];
            sq += diff * diff;
        }
        profile.values.push_back(sq);
        // boundary between block b and b+1
        int last = (b + 1) * block - 1;
        profile.positions_mm.push_back(
            0.5 * (trace.positions_mm[last] + trace.positions_mm[last + 1]));
    }
    for (int k = 0; k + 1 < n_points; ++k) {
        if (world.mesh.region[trace.vertices[k]] != world.mesh.region[trace.vertices[k + 1]])
            profile.planted_borders_mm.push_back(
                0.5 * (trace.positions_mm[k] + trace.positions_mm[k + 1]));
    }
    return profile;
}

BorderProfile block_profile(SiameseModel& model, const World& world, const RibbonTrace& trace,
                            int block) {
    std::vector<Tensor> embeddings;
    embeddings.reserve(trace.vertices.size());
    for (int v : trace.vertices) {
        RenderedPatch patch = render_patch(world, v, false);
        Tensor image({1, world.spec.patch_px, world.spec.patch_px});
        image.data = patch.image.data;
        embeddings.push_back(embed(model, image));
    }
    return profile_from_embeddings(embeddings, world, trace, block);
}

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<double> detect_borders(BorderProfile& profile, double threshold_sigma) {
    profile.detected_borders_mm.clear();
    if (profile.values.empty()) throw std::invalid_argument("detect_borders: empty profile");
    double med = median_of(profile.values);
    std::vector<double> dev;
    dev.reserve(profile.values.size());
    for (double v : profile.values) dev.push_back(std::abs(v - med));
    double mad = median_of(dev);
    double threshold = med + threshold_sigma * mad;
    const int n = static_cast<int>(profile.values.size());
    for (int i = 0; i < n; ++i) {
        if (profile.values[i] <= threshold) continue;
        bool left_ok = (i == 0) || profile.values[i] >= profile.values[i - 1];
        bool right_ok = (i == n - 1) || profile.values[i] >= profile.values[i + 1];
        if (left_ok && right_ok) profile.detected_borders_mm.push_back(profile.positions_mm[i]);
    }
    return profile.detected_borders_mm;
}

void save_profile_csv(const BorderProfile& profile, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_profile_csv: cannot open " + path);
    // a position counts as a planted border when a ground-truth crossing
    // falls within half a block of it
    double tol = profile.positions_mm.size() > 1
                     ? 0.5 * (profile.positions_mm[1] - profile.positions_mm[0])
                     : 0.5;
    out << std::setprecision(17);
    out << "position_mm,value,is_detected,is_planted_border\n";
    for (size_t i = 0; i < profile.values.size(); ++i) {
        double pos = profile.positions_mm[i];
        bool detected = std::find(profile.detected_borders_mm.begin(),
                                  profile.detected_borders_mm.end(),
                                  pos) != profile.detected_borders_mm.end();
        bool planted = false;
        for (double p : profile.planted_borders_mm)
            if (std::abs(p - pos) <= tol) planted = true;
        out << pos << "," << profile.values[i] << "," << (detected ? 1 : 0) << ","
            << (planted ? 1 : 0) << "\n";
    }
}

}  // namespace geoseg
