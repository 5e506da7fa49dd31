#pragma once

#include <cstdint>
#include <string>

#include "geoseg/segnet.hpp"
#include "geoseg/siamese.hpp"
#include "geoseg/world.hpp"

namespace geoseg {

struct SamplerConfig {
    int n_patches = 2000;
    int n_pairs = 2000;
    double split_fraction = 0.25;
    double gamma = 2.5;  // power-law exponent of the pair-degree distribution
};

struct BordersConfig {
    double spacing_mm = 0.2;
    int block = 9;
    double threshold_sigma = 4.0;
};

struct SegDataConfig {
    int n_train = 240;  // labeled patches for fine-tuning
    int n_test = 60;
};

// Full pipeline configuration. The global seed feeds every stage; world.seed
// is derived from it.
struct RunConfig {
    uint64_t seed = 1;
    WorldSpec world = WorldSpec::desk_default(1);
    SamplerConfig sampler;
    SiameseConfig siamese;
    FinetuneConfig segnet;
    SegDataConfig seg_data;
    BordersConfig borders;

    void validate() const;
};

// "section.key = value" text format, one entry per line, '#' comments.
// Unknown keys are rejected with the offending line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& c);  // canonical echo, parseable
void save_config(const RunConfig& c, const std::string& path);

}  // namespace geoseg
