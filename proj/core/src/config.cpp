#include "geoseg/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace geoseg {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v) {
    size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("bad number: " + v);
    return x;
}

long long parse_int(const std::string& v) {
    size_t used = 0;
    long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument("bad integer: " + v);
    return x;
}

}  // namespace

void RunConfig::validate() const {
    world.validate();
    if (sampler.n_patches < 2) throw std::invalid_argument("config: sampler.n_patches too small");
    if (sampler.n_pairs < 1) throw std::invalid_argument("config: sampler.n_pairs too small");
    if (sampler.split_fraction <= 0.0 || sampler.split_fraction >= 1.0)
        throw std::invalid_argument("config: sampler.split_fraction must be in (0,1)");
    if (sampler.gamma <= 1.0) throw std::invalid_argument("config: sampler.gamma must be > 1");
    if (siamese.epochs < 0 || siamese.batch_size < 1)
        throw std::invalid_argument("config: bad siamese training sizes");
    if (segnet.phase1_iters < 0 || segnet.phase2_iters < 0 || segnet.batch_size < 1)
        throw std::invalid_argument("config: bad segnet training sizes");
    if (seg_data.n_train < 1 || seg_data.n_test < 1)
        throw std::invalid_argument("config: bad labeled set sizes");
    if (borders.block < 1 || borders.spacing_mm <= 0.0)
        throw std::invalid_argument("config: bad borders settings");
}

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    using Setter = std::function<void(const std::string&)>;
    const std::map<std::string, Setter> keys = {
        {"seed", [&](const std::string& v) { c.seed = static_cast<uint64_t>(parse_int(v)); }},
        {"world.grid_u", [&](const std::string& v) { c.world.grid_u = (int)parse_int(v); }},
        {"world.grid_v", [&](const std::string& v) { c.world.grid_v = (int)parse_int(v); }},
        {"world.sheet_size_u", [&](const std::string& v) { c.world.sheet_size_u = parse_double(v); }},
        {"world.sheet_size_v", [&](const std::string& v) { c.world.sheet_size_v = parse_double(v); }},
        {"world.fold_amplitude", [&](const std::string& v) { c.world.fold_amplitude = parse_double(v); }},
        {"world.fold_frequency", [&](const std::string& v) { c.world.fold_frequency = parse_double(v); }},
        {"world.n_regions", [&](const std::string& v) { c.world.n_regions = (int)parse_int(v); }},
        {"world.patch_px", [&](const std::string& v) { c.world.patch_px = (int)parse_int(v); }},
        {"world.resolution_um", [&](const std::string& v) { c.world.resolution_um = parse_double(v); }},
        {"world.atlas_blur_mm", [&](const std::string& v) { c.world.atlas_blur_mm = parse_double(v); }},
        {"world.atlas_shift_mm", [&](const std::string& v) { c.world.atlas_shift_mm = parse_double(v); }},
        {"world.cortex_depth_mm", [&](const std::string& v) { c.world.cortex_depth_mm = parse_double(v); }},
        {"world.hemisphere_gap_mm", [&](const std::string& v) { c.world.hemisphere_gap_mm = parse_double(v); }},
        {"sampler.n_patches", [&](const std::string& v) { c.sampler.n_patches = (int)parse_int(v); }},
        {"sampler.n_pairs", [&](const std::string& v) { c.sampler.n_pairs = (int)parse_int(v); }},
        {"sampler.split_fraction", [&](const std::string& v) { c.sampler.split_fraction = parse_double(v); }},
        {"sampler.gamma", [&](const std::string& v) { c.sampler.gamma = parse_double(v); }},
        {"siamese.alpha", [&](const std::string& v) { c.siamese.alpha = parse_double(v); }},
        {"siamese.weight_decay", [&](const std::string& v) { c.siamese.weight_decay = parse_double(v); }},
        {"siamese.epochs", [&](const std::string& v) { c.siamese.epochs = (int)parse_int(v); }},
        {"siamese.batch_size", [&](const std::string& v) { c.siamese.batch_size = (int)parse_int(v); }},
        {"siamese.lr", [&](const std::string& v) { c.siamese.schedule.initial_lr = parse_double(v); }},
        {"siamese.lr_decay_factor", [&](const std::string& v) { c.siamese.schedule.decay_factor = parse_double(v); }},
        {"siamese.lr_decay_every", [&](const std::string& v) { c.siamese.schedule.decay_every = (int)parse_int(v); }},
        {"segnet.phase1_iters", [&](const std::string& v) { c.segnet.phase1_iters = (int)parse_int(v); }},
        {"segnet.phase2_iters", [&](const std::string& v) { c.segnet.phase2_iters = (int)parse_int(v); }},
        {"segnet.batch_size", [&](const std::string& v) { c.segnet.batch_size = (int)parse_int(v); }},
        {"segnet.phase1_lr", [&](const std::string& v) { c.segnet.phase1_lr = parse_double(v); }},
        {"segnet.phase2_lr", [&](const std::string& v) { c.segnet.phase2_schedule.initial_lr = parse_double(v); }},
        {"segnet.atlas_lr_multiplier", [&](const std::string& v) { c.segnet.atlas_lr_multiplier = parse_double(v); }},
        {"segnet.n_train", [&](const std::string& v) { c.seg_data.n_train = (int)parse_int(v); }},
        {"segnet.n_test", [&](const std::string& v) { c.seg_data.n_test = (int)parse_int(v); }},
        {"borders.spacing_mm", [&](const std::string& v) { c.borders.spacing_mm = parse_double(v); }},
        {"borders.block", [&](const std::string& v) { c.borders.block = (int)parse_int(v); }},
        {"borders.threshold_sigma", [&](const std::string& v) { c.borders.threshold_sigma = parse_double(v); }},
    };

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value: " + line);
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        auto it = keys.find(key);
        if (it == keys.end())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": unknown key: " + key);
        try {
            it->second(value);
        } catch (const std::exception& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + " (" + key +
                                        "): " + e.what());
        }
    }
    c.world.seed = c.seed;
    c.siamese.seed = c.seed;
    c.segnet.seed = c.seed;
    c.world.fill_default_textures();
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream out;
    out.precision(17);
    out << "seed = " << c.seed << "\n\n";
    out << "world.grid_u = " << c.world.grid_u << "\n";
    out << "world.grid_v = " << c.world.grid_v << "\n";
    out << "world.sheet_size_u = " << c.world.sheet_size_u << "\n";
    out << "world.sheet_size_v = " << c.world.sheet_size_v << "\n";
    out << "world.fold_amplitude = " << c.world.fold_amplitude << "\n";
    out << "world.fold_frequency = " << c.world.fold_frequency << "\n";
    out << "world.n_regions = " << c.world.n_regions << "\n";
    out << "world.patch_px = " << c.world.patch_px << "\n";
    out << "world.resolution_um = " << c.world.resolution_um << "\n";
    out << "world.atlas_blur_mm = " << c.world.atlas_blur_mm << "\n";
    out << "world.atlas_shift_mm = " << c.world.atlas_shift_mm << "\n";
    out << "world.cortex_depth_mm = " << c.world.cortex_depth_mm << "\n";
    out << "world.hemisphere_gap_mm = " << c.world.hemisphere_gap_mm << "\n\n";
    out << "sampler.n_patches = " << c.sampler.n_patches << "\n";
    out << "sampler.n_pairs = " << c.sampler.n_pairs << "\n";
    out << "sampler.split_fraction = " << c.sampler.split_fraction << "\n";
    out << "sampler.gamma = " << c.sampler.gamma << "\n\n";
    out << "siamese.alpha = " << c.siamese.alpha << "\n";
    out << "siamese.weight_decay = " << c.siamese.weight_decay << "\n";
    out << "siamese.epochs = " << c.siamese.epochs << "\n";
    out << "siamese.batch_size = " << c.siamese.batch_size << "\n";
    out << "siamese.lr = " << c.siamese.schedule.initial_lr << "\n";
    out << "siamese.lr_decay_factor = " << c.siamese.schedule.decay_factor << "\n";
    out << "siamese.lr_decay_every = " << c.siamese.schedule.decay_every << "\n\n";
    out << "segnet.phase1_iters = " << c.segnet.phase1_iters << "\n";
    out << "segnet.phase2_iters = " << c.segnet.phase2_iters << "\n";
    out << "segnet.batch_size = " << c.segnet.batch_size << "\n";
    out << "segnet.phase1_lr = " << c.segnet.phase1_lr << "\n";
    out << "segnet.phase2_lr = " << c.segnet.phase2_schedule.initial_lr << "\n";
    out << "segnet.atlas_lr_multiplier = " << c.segnet.atlas_lr_multiplier << "\n";
    out << "segnet.n_train = " << c.seg_data.n_train << "\n";
    out << "segnet.n_test = " << c.seg_data.n_test << "\n\n";
    out << "borders.spacing_mm = " << c.borders.spacing_mm << "\n";
    out << "borders.block = " << c.borders.block << "\n";
    out << "borders.threshold_sigma = " << c.borders.threshold_sigma << "\n";
    return out.str();
}

void save_config(const RunConfig& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_config: cannot open " + path);
    out << serialize_config(c);
}

}  // namespace geoseg
