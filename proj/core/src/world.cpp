#include "geoseg/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include "geoseg/rng.hpp"

namespace geoseg {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr int kCurveTableSize = 4096;

constexpr double kBackgroundIntensity = 0.92;
constexpr double kWhiteMatterIntensity = 0.55;
constexpr double kCortexBaseIntensity = 0.65;
constexpr double kStripeAmplitude = 0.25;
constexpr double kCellDotDepth = 0.35;
constexpr double kPixelJitter = 0.04;
constexpr double kWhiteMatterNoiseDensity = 0.03;
}  // namespace

WorldSpec WorldSpec::desk_default(uint64_t seed) {
    WorldSpec s;
    s.seed = seed;
    s.fill_default_textures();
    return s;
}

void WorldSpec::fill_default_textures() {
    static const RegionTexture table[] = {
        {2, 0.90, 0.02}, {4, 0.60, 0.10}, {3, 0.90, 0.20}, {5, 0.50, 0.04},
        {2, 0.55, 0.15}, {4, 0.85, 0.01}, {3, 0.45, 0.12}, {5, 0.80, 0.07},
    };
    region_texture.resize(n_regions);
    for (int r = 0; r < n_regions; ++r) region_texture[r] = table[r % 8];
}

void WorldSpec::validate() const {
    if (n_regions < 2) throw std::invalid_argument("WorldSpec: n_regions must be >= 2");
    if (patch_px < 16) throw std::invalid_argument("WorldSpec: patch_px must be >= 16");
    if (fold_amplitude < 0) throw std::invalid_argument("WorldSpec: fold_amplitude must be >= 0");
    if (grid_u < 2 || grid_v < 2) throw std::invalid_argument("WorldSpec: grid must be >= 2x2");
    if (sheet_size_u <= 0 || sheet_size_v <= 0)
        throw std::invalid_argument("WorldSpec: sheet_size must be positive");
    if (region_texture.size() != static_cast<size_t>(n_regions))
        throw std::invalid_argument("WorldSpec: region_texture size must equal n_regions");
    for (const auto& t : region_texture)
        if (t.stripe_contrast < 0 || t.stripe_contrast > 1)
            throw std::invalid_argument("WorldSpec: stripe_contrast must be in [0,1]");
    double nn = norm(section_normal);
    if (std::abs(nn - 1.0) > 1e-6)
        throw std::invalid_argument("WorldSpec: section_normal must be unit length");
}

int World::region_of_s(double s) const {
    int band = static_cast<int>(std::floor(s / spec.sheet_size_u * spec.n_regions));
    return std::clamp(band, 0, spec.n_regions - 1);
}

int World::vertex_id(Hemisphere h, int i, int j) const {
    int per_hemi = spec.grid_u * spec.grid_v;
    return (h == Hemisphere::LEFT ? 0 : per_hemi) + i * spec.grid_v + j;
}

namespace {

// Generating curve defined by its turning angle theta(s) = theta_max *
// sin(2*pi*f*s/S); arc-length parameterization is exact by construction.
std::vector<World::CurveSample> integrate_curve(double theta_max, double S, double f, int n) {
    std::vector<World::CurveSample> c(n);
    double step = S / (n - 1);
    double x = 0.0, z = 0.0;
    for (int k = 0; k < n; ++k) {
        double s = k * step;
        c[k] = {s, x, z, theta_max * std::sin(2.0 * kPi * f * s / S)};
        double sm = s + 0.5 * step;
        double th = theta_max * std::sin(2.0 * kPi * f * sm / S);
        x += step * std::cos(th);
        z += step * std::sin(th);
    }
    return c;
}

double curve_z_extent(const std::vector<World::CurveSample>& c) {
    double m = 0.0;
    for (const auto& p : c) m = std::max(m, std::abs(p.z));
    return m;
}

}  // namespace

World build_world(const WorldSpec& spec) {
    spec.validate();
    World w;
    w.spec = spec;

    // Solve the turning-angle amplitude so that max |z| equals fold_amplitude.
    double theta_max = 0.0;
    if (spec.fold_amplitude > 0.0) {
        double lo = 0.0, hi = 1.35;  // < pi/2: keep the sheet a graph over x
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            auto c = integrate_curve(mid, spec.sheet_size_u, spec.fold_frequency, 512);
            (curve_z_extent(c) < spec.fold_amplitude ? lo : hi) = mid;
        }
        theta_max = 0.5 * (lo + hi);
    }
    w.curve = integrate_curve(theta_max, spec.sheet_size_u, spec.fold_frequency, kCurveTableSize);
    w.curve_step = spec.sheet_size_u / (kCurveTableSize - 1);

    // Mesh: one grid per hemisphere; right = left reflected across x = 0.
    SurfaceMesh& m = w.mesh;
    const int gu = spec.grid_u, gv = spec.grid_v;
    const double su = spec.sheet_size_u, sv = spec.sheet_size_v;
    m.vertices.resize(static_cast<size_t>(2) * gu * gv);
    m.inflated.resize(m.vertices.size());
    m.hemisphere.resize(m.vertices.size());
    m.region.resize(m.vertices.size());
    for (Hemisphere h : {Hemisphere::LEFT, Hemisphere::RIGHT}) {
        double sign = (h == Hemisphere::LEFT) ? -1.0 : 1.0;
        for (int i = 0; i < gu; ++i) {
            double s = su * i / (gu - 1);
            // sample the curve at s (linear interpolation on the fine table)
            double fk = s / w.curve_step;
            int k = std::min(static_cast<int>(fk), kCurveTableSize - 2);
            double t = fk - k;
            double cx = (1 - t) * w.curve[k].x + t * w.curve[k + 1].x;
            double cz = (1 - t) * w.curve[k].z + t * w.curve[k + 1].z;
            for (int j = 0; j < gv; ++j) {
                double wj = sv * j / (gv - 1);
                int v = w.vertex_id(h, i, j);
                m.vertices[v] = {sign * (cx + spec.hemisphere_gap_mm), wj, cz};
                m.inflated[v] = {sign * s, wj, 0.0};
                m.hemisphere[v] = h;
                m.region[v] = w.region_of_s(s);
            }
        }
        for (int i = 0; i + 1 < gu; ++i)
            for (int j = 0; j + 1 < gv; ++j) {
                int v00 = w.vertex_id(h, i, j), v01 = w.vertex_id(h, i, j + 1);
                int v10 = w.vertex_id(h, i + 1, j), v11 = w.vertex_id(h, i + 1, j + 1);
                m.triangles.push_back({v00, v10, v11});
                m.triangles.push_back({v00, v11, v01});
            }
    }
    m.build_adjacency();
    m.validate();
    return w;
}

double obliqueness(const SurfaceMesh& mesh, int v, const Vec3& section_normal) {
    Vec3 n = vertex_normal(mesh, v);
    double d = std::clamp(dot(n, section_normal), -1.0, 1.0);
    return std::acos(d) * 180.0 / kPi;
}

namespace {

struct SurfaceQuery {
    bool on_sheet = false;  // false: off the extrusion range or beyond the curve ends
    double s = 0.0;         // arc length of the nearest curve point
    double depth = 0.0;     // signed; >= 0 inside the tissue, < 0 above the surface
};

// Nearest point on the generating curve for a 2D point in the unmirrored fold
// plane, searched within a window around the arc-length hint.
SurfaceQuery query_curve(const World& w, double px, double pz, double s_hint) {
    const auto& c = w.curve;
    const int n = static_cast<int>(c.size());
    const double window_mm = 3.0;
    int k0 = std::max(0, static_cast<int>((s_hint - window_mm) / w.curve_step));
    int k1 = std::min(n - 1, static_cast<int>((s_hint + window_mm) / w.curve_step) + 1);
    int best = k0;
    double best_d = 1e300;
    for (int k = k0; k <= k1; k += 8) {
        double dx = c[k].x - px, dz = c[k].z - pz;
        double d = dx * dx + dz * dz;
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    int r0 = std::max(k0, best - 8), r1 = std::min(k1, best + 8);
    for (int k = r0; k <= r1; ++k) {
        double dx = c[k].x - px, dz = c[k].z - pz;
        double d = dx * dx + dz * dz;
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    // project onto the two incident segments, keep the closer foot
    double bs = c[best].s, bx = c[best].x, bz = c[best].z, btheta = c[best].theta;
    double bdist2 = best_d;
    bool overshoot = false;
    for (int seg = -1; seg <= 0; ++seg) {
        int a = best + seg, b = best + seg + 1;
        if (a < 0 || b >= n) continue;
        double ex = c[b].x - c[a].x, ez = c[b].z - c[a].z;
        double ee = ex * ex + ez * ez;
        if (ee <= 0) continue;
        double t = ((px - c[a].x) * ex + (pz - c[a].z) * ez) / ee;
        double tc = std::clamp(t, 0.0, 1.0);
        double fx = c[a].x + tc * ex, fz = c[a].z + tc * ez;
        double dx = fx - px, dz = fz - pz;
        double d2 = dx * dx + dz * dz;
        if (d2 <= bdist2) {
            bdist2 = d2;
            bx = fx;
            bz = fz;
            bs = c[a].s + tc * (c[b].s - c[a].s);
            btheta = c[a].theta + tc * (c[b].theta - c[a].theta);
            overshoot = (a == 0 && t < -1e-9) || (b == n - 1 && t > 1.0 + 1e-9);
        }
    }
    SurfaceQuery q;
    if (overshoot) return q;  // beyond the curve ends: background
    q.on_sheet = true;
    q.s = bs;
    // outward normal of the curve is (-sin theta, cos theta); tissue lies on
    // the inward side, so depth = (foot - p) . normal is positive inside.
    q.depth = (bx - px) * (-std::sin(btheta)) + (bz - pz) * std::cos(btheta);
    return q;
}

// Orthonormal in-plane basis of the cutting plane.
void plane_basis(const Vec3& n, Vec3& e1, Vec3& e2) {
    Vec3 ref = (std::abs(n[2]) < 0.9) ? Vec3{0.0, 0.0, 1.0} : Vec3{0.0, 1.0, 0.0};
    e1 = normalized(cross(n, ref));
    e2 = cross(n, e1);
}

std::vector<uint8_t> label_pixels(const World& w, int v, const Vec3& loc, const Vec3& e1,
                                  const Vec3& e2);

}  // namespace

RenderedPatch render_patch(const World& world, int v, bool labeled) {
    const WorldSpec& spec = world.spec;
    if (v < 0 || v >= world.mesh.n_vertices())
        throw std::out_of_range("render_patch: vertex id out of range");
    const int px = spec.patch_px;
    const double res = spec.pixel_mm();
    const Vec3 loc = world.mesh.vertices[v];
    const double sign = (world.mesh.hemisphere[v] == Hemisphere::RIGHT) ? 1.0 : -1.0;
    const double s_hint = std::abs(world.mesh.inflated[v][0]);

    Vec3 e1, e2;
    plane_basis(spec.section_normal, e1, e2);

    RenderedPatch patch;
    patch.image = Tensor({px, px});
    patch.location = loc;
    patch.vertex = v;
    patch.region = world.mesh.region[v];
    patch.hemisphere = world.mesh.hemisphere[v];
    patch.obliqueness_deg = obliqueness(world.mesh, v, spec.section_normal);

    const int c = px / 2;
    const uint64_t base = hash_combine(spec.seed, static_cast<uint64_t>(v));
    const double D = spec.cortex_depth_mm;

    for (int py = 0; py < px; ++py) {
        for (int pxx = 0; pxx < px; ++pxx) {
            Vec3 p = loc + (static_cast<double>(pxx - c) * res) * e1 +
                     (static_cast<double>(c - py) * res) * e2;
            double intensity;
            uint64_t h = hash_combine(base, static_cast<uint64_t>(py) * px + pxx);
            double u1 = hash_unit(h);
            double u2 = hash_unit(hash_mix(h));
            if (p[1] < 0.0 || p[1] > spec.sheet_size_v) {
                intensity = kBackgroundIntensity;
            } else {
                double cx = sign * p[0] - spec.hemisphere_gap_mm;
                SurfaceQuery q = query_curve(world, cx, p[2], s_hint);
                if (!q.on_sheet || q.depth < -1e-9) {
                    intensity = kBackgroundIntensity;
                } else if (q.depth <= D) {
                    const RegionTexture& rt = spec.region_texture[world.region_of_s(q.s)];
                    intensity = kCortexBaseIntensity +
                                kStripeAmplitude * rt.stripe_contrast *
                                    std::sin(2.0 * kPi * rt.stripe_count * q.depth / D);
                    if (u1 < rt.cell_noise_density) intensity -= kCellDotDepth;
                } else {
                    intensity = kWhiteMatterIntensity;
                    if (u1 < kWhiteMatterNoiseDensity) intensity -= kCellDotDepth;
                }
            }
            intensity += kPixelJitter * (u2 - 0.5);
            patch.image.data[static_cast<size_t>(py) * px + pxx] =
                static_cast<float>(std::clamp(intensity, 0.0, 1.0));
        }
    }

    if (labeled) {
        patch.has_label = true;
        patch.label_image = label_pixels(world, v, loc, e1, e2);
    }
    return patch;
}

namespace {

std::vector<uint8_t> label_pixels(const World& w, int v, const Vec3& loc, const Vec3& e1,
                                  const Vec3& e2) {
    const WorldSpec& spec = w.spec;
    const int px = spec.patch_px;
    const double res = spec.pixel_mm();
    const double sign = (w.mesh.hemisphere[v] == Hemisphere::RIGHT) ? 1.0 : -1.0;
    const double s_hint = std::abs(w.mesh.inflated[v][0]);
    const int c = px / 2;
    std::vector<uint8_t> labels(static_cast<size_t>(px) * px, kClassBackground);
    for (int py = 0; py < px; ++py) {
        for (int pxx = 0; pxx < px; ++pxx) {
            Vec3 p = loc + (static_cast<double>(pxx - c) * res) * e1 +
                     (static_cast<double>(c - py) * res) * e2;
            if (p[1] < 0.0 || p[1] > spec.sheet_size_v) continue;
            double cx = sign * p[0] - spec.hemisphere_gap_mm;
            SurfaceQuery q = query_curve(w, cx, p[2], s_hint);
            if (!q.on_sheet || q.depth < -1e-9) continue;
            labels[static_cast<size_t>(py) * px + pxx] =
                (q.depth <= spec.cortex_depth_mm)
                    ? static_cast<uint8_t>(class_for_region(w.region_of_s(q.s)))
                    : static_cast<uint8_t>(kClassOtherCortex);
        }
    }
    return labels;
}

}  // namespace

Tensor atlas_prior(const World& world, int v) {
    const WorldSpec& spec = world.spec;
    const int px = spec.patch_px;
    const int nc = spec.n_classes();
    RenderedPatch labeled = render_patch(world, v, true);
    const auto& truth = labeled.label_image;

    // seeded random misregistration, magnitude <= atlas_shift_mm
    uint64_t h = hash_combine(hash_combine(spec.seed, 0x61746c6173ULL /* "atlas" */),
                              static_cast<uint64_t>(v));
    double angle = 2.0 * kPi * hash_unit(h);
    double mag_mm = spec.atlas_shift_mm * hash_unit(hash_mix(h));
    double res = spec.pixel_mm();
    double dy = mag_mm * std::sin(angle) / res;
    double dx = mag_mm * std::cos(angle) / res;

    std::vector<uint8_t> shifted(static_cast<size_t>(px) * px, kClassBackground);
    for (int y = 0; y < px; ++y)
        for (int x = 0; x < px; ++x) {
            int sy = static_cast<int>(std::lround(y - dy));
            int sx = static_cast<int>(std::lround(x - dx));
            if (sy >= 0 && sy < px && sx >= 0 && sx < px)
                shifted[static_cast<size_t>(y) * px + x] = truth[static_cast<size_t>(sy) * px + sx];
        }

    Tensor prior({nc, px, px});
    for (int y = 0; y < px; ++y)
        for (int x = 0; x < px; ++x)
            prior.at3(shifted[static_cast<size_t>(y) * px + x], y, x) = 1.0f;

    double sigma = spec.atlas_blur_mm / res;
    if (sigma > 1e-9) {
        int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
        std::vector<double> kernel(2 * radius + 1);
        double ksum = 0.0;
        for (int i = -radius; i <= radius; ++i)
            ksum += kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        for (double& k : kernel) k /= ksum;
        Tensor tmp({nc, px, px});
        for (int cl = 0; cl < nc; ++cl) {  // horizontal then vertical, zero padded
            for (int y = 0; y < px; ++y)
                for (int x = 0; x < px; ++x) {
                    double acc = 0.0;
                    for (int i = -radius; i <= radius; ++i) {
                        int xx = x + i;
                        if (xx >= 0 && xx < px) acc += kernel[i + radius] * prior.at3(cl, y, xx);
                    }
                    tmp.at3(cl, y, x) = static_cast<float>(acc);
                }
            for (int y = 0; y < px; ++y)
                for (int x = 0; x < px; ++x) {
                    double acc = 0.0;
                    for (int i = -radius; i <= radius; ++i) {
                        int yy = y + i;
                        if (yy >= 0 && yy < px) acc += kernel[i + radius] * tmp.at3(cl, yy, x);
                    }
                    prior.at3(cl, y, x) = static_cast<float>(acc);
                }
        }
    }

    // per-pixel renormalization (zero padding leaks mass at the borders)
    for (int y = 0; y < px; ++y)
        for (int x = 0; x < px; ++x) {
            double sum = 0.0;
            for (int cl = 0; cl < nc; ++cl) sum += prior.at3(cl, y, x);
            if (sum <= 0.0) {
                prior.at3(kClassBackground, y, x) = 1.0f;
                continue;
            }
            for (int cl = 0; cl < nc; ++cl)
                prior.at3(cl, y, x) = static_cast<float>(prior.at3(cl, y, x) / sum);
        }
    return prior;
}

void save_world_manifest(const WorldSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_world_manifest: cannot open " + path);
    out << std::setprecision(17);
    out << "worldv1\n";
    out << "seed = " << spec.seed << "\n";
    out << "grid_u = " << spec.grid_u << "\n";
    out << "grid_v = " << spec.grid_v << "\n";
    out << "sheet_size_u = " << spec.sheet_size_u << "\n";
    out << "sheet_size_v = " << spec.sheet_size_v << "\n";
    out << "fold_amplitude = " << spec.fold_amplitude << "\n";
    out << "fold_frequency = " << spec.fold_frequency << "\n";
    out << "n_regions = " << spec.n_regions << "\n";
    for (int r = 0; r < spec.n_regions; ++r) {
        const auto& t = spec.region_texture[r];
        out << "region" << r << " = " << t.stripe_count << " " << t.stripe_contrast << " "
            << t.cell_noise_density << "\n";
    }
    out << "patch_px = " << spec.patch_px << "\n";
    out << "resolution_um = " << spec.resolution_um << "\n";
    out << "section_normal = " << spec.section_normal[0] << " " << spec.section_normal[1] << " "
        << spec.section_normal[2] << "\n";
    out << "atlas_blur_mm = " << spec.atlas_blur_mm << "\n";
    out << "atlas_shift_mm = " << spec.atlas_shift_mm << "\n";
    out << "cortex_depth_mm = " << spec.cortex_depth_mm << "\n";
    out << "hemisphere_gap_mm = " << spec.hemisphere_gap_mm << "\n";
}

WorldSpec load_world_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_world_manifest: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "worldv1")
        throw std::runtime_error("load_world_manifest: bad header");
    WorldSpec spec;
    std::map<std::string, std::string> kv;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("load_world_manifest: bad line: " + line);
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t");
            size_t b = s.find_last_not_of(" \t");
            return (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    auto get = [&](const std::string& k) {
        auto it = kv.find(k);
        if (it == kv.end()) throw std::runtime_error("load_world_manifest: missing key " + k);
        return it->second;
    };
    spec.seed = std::stoull(get("seed"));
    spec.grid_u = std::stoi(get("grid_u"));
    spec.grid_v = std::stoi(get("grid_v"));
    spec.sheet_size_u = std::stod(get("sheet_size_u"));
    spec.sheet_size_v = std::stod(get("sheet_size_v"));
    spec.fold_amplitude = std::stod(get("fold_amplitude"));
    spec.fold_frequency = std::stod(get("fold_frequency"));
    spec.n_regions = std::stoi(get("n_regions"));
    spec.region_texture.resize(spec.n_regions);
    for (int r = 0; r < spec.n_regions; ++r) {
        std::istringstream is(get("region" + std::to_string(r)));
        auto& t = spec.region_texture[r];
        if (!(is >> t.stripe_count >> t.stripe_contrast >> t.cell_noise_density))
            throw std::runtime_error("load_world_manifest: bad region line");
    }
    spec.patch_px = std::stoi(get("patch_px"));
    spec.resolution_um = std::stod(get("resolution_um"));
    {
        std::istringstream is(get("section_normal"));
        if (!(is >> spec.section_normal[0] >> spec.section_normal[1] >> spec.section_normal[2]))
            throw std::runtime_error("load_world_manifest: bad section_normal");
    }
    spec.atlas_blur_mm = std::stod(get("atlas_blur_mm"));
    spec.atlas_shift_mm = std::stod(get("atlas_shift_mm"));
    spec.cortex_depth_mm = std::stod(get("cortex_depth_mm"));
    spec.hemisphere_gap_mm = std::stod(get("hemisphere_gap_mm"));
    spec.validate();
    return spec;
}

}  // namespace geoseg
