#include "geoseg/pipeline.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "geoseg/borders.hpp"
#include "geoseg/container.hpp"
#include "geoseg/rng.hpp"
#include "geoseg/sampler.hpp"
#include "geoseg/segnet.hpp"
#include "geoseg/siamese.hpp"
#include "geoseg/world.hpp"

namespace fs = std::filesystem;

namespace geoseg {

std::string stage_name(Stage s) {
    switch (s) {
        case Stage::WORLD: return "gen-world";
        case Stage::SAMPLE: return "sample";
        case Stage::PAIRS: return "pairs";
        case Stage::PRETRAIN: return "pretrain";
        case Stage::FINETUNE: return "finetune";
        case Stage::EVAL: return "eval";
        case Stage::BORDERS: return "borders";
        case Stage::REPORT: return "report";
    }
    throw std::logic_error("stage_name: bad stage");
}

Stage stage_from_name(const std::string& s) {
    for (Stage st : {Stage::WORLD, Stage::SAMPLE, Stage::PAIRS, Stage::PRETRAIN, Stage::FINETUNE,
                     Stage::EVAL, Stage::BORDERS, Stage::REPORT})
        if (stage_name(st) == s || (st == Stage::WORLD && s == "world")) return st;
    throw std::invalid_argument("unknown stage: " + s);
}

uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("hash_file: cannot open " + path);
    uint64_t h = 14695981039346656037ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    return h;
}

namespace {

uint64_t hash_string(const std::string& s) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Orchestration state: artifact paths, stamp bookkeeping, lazy world cache.
struct PipelineRun {
    const RunConfig& config;
    fs::path out;
    std::ostream* log;
    std::string config_text;
    std::optional<World> world_cache;

    PipelineRun(const RunConfig& c, const std::string& out_dir, std::ostream* l)
        : config(c), out(out_dir), log(l), config_text(serialize_config(c)) {}

    fs::path path(const std::string& name) const { return out / name; }

    void note(const std::string& msg) const {
        if (log) *log << msg << "\n";
    }

    // A stage is up to date when its stamp matches the hash of the config
    // plus its input artifacts, and all its outputs exist.
    bool fresh(const std::string& stage, const std::vector<std::string>& inputs,
               const std::vector<std::string>& outputs) const {
        for (const std::string& o : outputs)
            if (!fs::exists(path(o))) return false;
        fs::path stamp = out / "stamps" / stage;
        std::ifstream in(stamp);
        if (!in) return false;
        std::string recorded;
        std::getline(in, recorded);
        return recorded == input_hash(inputs);
    }

    std::string input_hash(const std::vector<std::string>& inputs) const {
        uint64_t h = hash_string(config_text);
        for (const std::string& i : inputs) h = h * 1099511628211ULL + hash_file(path(i));
        std::ostringstream os;
        os << std::hex << h;
        return os.str();
    }

    void stamp(const std::string& stage, const std::vector<std::string>& inputs) const {
        fs::create_directories(out / "stamps");
        std::ofstream st(out / "stamps" / stage);
        st << input_hash(inputs) << "\n";
    }

    const World& world() {
        if (!world_cache) world_cache = build_world(load_world_manifest(path("world.txt")));
        return *world_cache;
    }

    Tensor patch_input(const StoredPatch& p) const {
        Tensor t({1, config.world.patch_px, config.world.patch_px});
        t.data = p.image;
        return t;
    }
};

void stage_world(PipelineRun& r) {
    World w = build_world(r.config.world);
    save_mesh(w.mesh, r.path("world.mesh").string());
    save_world_manifest(w.spec, r.path("world.txt").string());
    r.world_cache = std::move(w);
}

void stage_sample(PipelineRun& r) {
    const World& w = r.world();
    PatchDataset dataset = sample_patches(w, w.mesh, r.config.sampler.n_patches,
                                          r.config.sampler.split_fraction, r.config.seed);
    save_dataset_manifest(dataset, r.path("dataset.txt").string());
    PatchContainer c;
    c.patch_px = r.config.world.patch_px;
    for (const PatchMeta& m : dataset.patches) {
        StoredPatch p;
        p.meta = m;
        p.image = render_patch(w, m.vertex, false).image.data;
        c.patches.push_back(std::move(p));
    }
    save_container(c, r.path("patches.bin").string());
}

void stage_pairs(PipelineRun& r) {
    const World& w = r.world();
    PatchDataset dataset = load_dataset_manifest(r.path("dataset.txt").string());
    PairList pairs = build_pairs(dataset, r.config.sampler.n_pairs, r.config.sampler.gamma,
                                 hash_combine(r.config.seed, 0x7061697273ULL /* "pairs" */));
    annotate_distances(pairs, dataset, w.mesh);
    save_pairs(pairs, r.path("pairs.txt").string());
}

void stage_pretrain(PipelineRun& r) {
    PatchDataset dataset = load_dataset_manifest(r.path("dataset.txt").string());
    PairList pairs = load_pairs(r.path("pairs.txt").string());
    PatchContainer c = load_container(r.path("patches.bin").string());
    std::vector<Tensor> images;
    images.reserve(c.patches.size());
    for (const StoredPatch& p : c.patches) images.push_back(r.patch_input(p));

    std::ofstream summary(r.path("pretrain_errdist.csv"));
    summary << std::setprecision(17) << "experiment,err_dist\n";
    for (LossMode mode : {LossMode::DIST_ONLY, LossMode::COORD_ONLY, LossMode::COMBINED}) {
        std::string name = loss_mode_name(mode);
        r.note("  pretrain " + name);
        SiameseConfig cfg = r.config.siamese;
        cfg.loss_mode = mode;
        TrainHistory history;
        SiameseModel model = train_siamese(images, dataset, pairs, cfg, "", &history);
        save_checkpoint(model.params, r.path("siamese_" + name + ".ckpt").string());
        history.save_csv(r.path("history_" + name + ".csv").string());
        double err = eval_err_dist(model, images, dataset, filter_pairs(dataset, pairs, Split::TEST));
        summary << "pretrain_" << name << "," << err << "\n";
    }
}

std::vector<LabeledPatch> labeled_patches(const PipelineRun& r, const PatchContainer& c,
                                          Split split) {
    std::vector<LabeledPatch> out;
    for (const StoredPatch& p : c.patches) {
        if (p.meta.split != split) continue;
        LabeledPatch ex;
        ex.image = r.patch_input(p);
        ex.labels.assign(p.labels.begin(), p.labels.end());
        ex.prior = Tensor({c.n_classes, c.patch_px, c.patch_px});
        ex.prior.data = p.prior;
        out.push_back(std::move(ex));
    }
    return out;
}

void stage_finetune(PipelineRun& r) {
    const World& w = r.world();
    const int n_total = r.config.seg_data.n_train + r.config.seg_data.n_test;
    double test_fraction = static_cast<double>(r.config.seg_data.n_test) / n_total;
    PatchDataset labeled = sample_patches(w, w.mesh, n_total, test_fraction,
                                          hash_combine(r.config.seed, 0x736567ULL /* "seg" */));
    PatchContainer c;
    c.patch_px = r.config.world.patch_px;
    c.has_labels = true;
    c.has_priors = true;
    c.n_classes = r.config.world.n_classes();
    for (const PatchMeta& m : labeled.patches) {
        StoredPatch p;
        p.meta = m;
        RenderedPatch rp = render_patch(w, m.vertex, true);
        p.image = rp.image.data;
        p.labels = rp.label_image;
        p.prior = atlas_prior(w, m.vertex).data;
        c.patches.push_back(std::move(p));
    }
    save_container(c, r.path("labeled.bin").string());

    std::vector<LabeledPatch> train_set = labeled_patches(r, c, Split::TRAIN);
    for (InitMode mode : {InitMode::RANDOM, InitMode::FROM_SIAMESE}) {
        std::string name = init_mode_name(mode);
        r.note("  finetune " + name);
        FinetuneConfig cfg = r.config.segnet;
        cfg.init_mode = mode;
        SegNet model =
            mode == InitMode::RANDOM
                ? init_segnet(c.n_classes, cfg.seed)
                : init_from_siamese(load_checkpoint(r.path("siamese_combined.ckpt").string()),
                                    c.n_classes, cfg.seed);
        SegTrainHistory history;
        train_seg(model, train_set, cfg, &history);
        save_checkpoint(model.params, r.path("segnet_" + name + ".ckpt").string());
        history.save_csv(r.path("seg_history_" + name + ".csv").string());
    }
}

void stage_eval(PipelineRun& r) {
    PatchContainer c = load_container(r.path("labeled.bin").string());
    std::vector<LabeledPatch> test_set = labeled_patches(r, c, Split::TEST);
    std::ofstream summary(r.path("eval_summary.csv"));
    summary << std::setprecision(17) << "experiment,macro_dice,err_seg\n";
    for (InitMode mode : {InitMode::RANDOM, InitMode::FROM_SIAMESE}) {
        std::string name = init_mode_name(mode);
        SegNet model = init_segnet(c.n_classes, r.config.seed);
        model.params = load_checkpoint(r.path("segnet_" + name + ".ckpt").string());
        MetricsReport report = evaluate_seg(model, test_set, c.patch_px);
        report.save_csv(r.path("metrics_" + name + ".csv").string(),
                        r.path("confusion_" + name + ".csv").string(), "finetune_" + name);
        summary << "finetune_" << name << "," << report.macro_dice << "," << report.err_seg
                << "\n";
    }
}

void stage_borders(PipelineRun& r) {
    const World& w = r.world();
    SiameseModel model;
    model.params = load_checkpoint(r.path("siamese_combined.ckpt").string());
    RibbonTrace trace = trace_ribbon(w, Hemisphere::LEFT, r.config.borders.spacing_mm);
    BorderProfile profile = block_profile(model, w, trace, r.config.borders.block);
    detect_borders(profile, r.config.borders.threshold_sigma);
    save_profile_csv(profile, r.path("borders.csv").string());
}

void stage_report(PipelineRun& r) {
    for (const char* needed : {"pretrain_errdist.csv", "eval_summary.csv"})
        if (!fs::exists(r.path(needed)))
            throw std::runtime_error(std::string("missing artifact: ") + needed);
    // experiment -> (err_dist, macro_dice, err_seg), empty where not applicable
    std::vector<std::array<std::string, 4>> rows;
    auto read_csv = [](const fs::path& p) {
        std::ifstream in(p);
        std::string line;
        std::getline(in, line);  // header
        std::vector<std::vector<std::string>> out;
        while (std::getline(in, line)) {
            std::vector<std::string> fields;
            std::istringstream ls(line);
            std::string f;
            while (std::getline(ls, f, ',')) fields.push_back(f);
            if (!fields.empty()) out.push_back(fields);
        }
        return out;
    };
    for (const auto& f : read_csv(r.path("pretrain_errdist.csv")))
        rows.push_back({f[0], f[1], "", ""});
    for (const auto& f : read_csv(r.path("eval_summary.csv")))
        rows.push_back({f[0], "", f[1], f[2]});
    std::ofstream out(r.path("report.csv"));
    out << "experiment,err_dist,macro_dice,err_seg\n";
    for (const auto& row : rows)
        out << row[0] << "," << row[1] << "," << row[2] << "," << row[3] << "\n";
}

}  // namespace

void run_pipeline(const RunConfig& config, const std::string& out_dir, Stage stop_after,
                  std::ostream* log) {
    config.validate();
    fs::create_directories(out_dir);
    PipelineRun r(config, out_dir, log);
    save_config(config, r.path("config.txt").string());
    {
        std::ofstream v(r.path("VERSION"));
        v << kToolVersion << "\n";
    }

    struct StageDef {
        Stage stage;
        std::vector<std::string> inputs;   // upstream artifacts feeding the stamp
        std::vector<std::string> outputs;  // required products
        void (*run)(PipelineRun&);
    };
    const std::vector<StageDef> stages = {
        {Stage::WORLD, {}, {"world.mesh", "world.txt"}, stage_world},
        {Stage::SAMPLE, {"world.txt"}, {"dataset.txt", "patches.bin"}, stage_sample},
        {Stage::PAIRS, {"dataset.txt"}, {"pairs.txt"}, stage_pairs},
        {Stage::PRETRAIN,
         {"dataset.txt", "patches.bin", "pairs.txt"},
         {"siamese_dist.ckpt", "siamese_coord.ckpt", "siamese_combined.ckpt",
          "pretrain_errdist.csv"},
         stage_pretrain},
        {Stage::FINETUNE,
         {"world.txt", "siamese_combined.ckpt"},
         {"labeled.bin", "segnet_random.ckpt", "segnet_from_siamese.ckpt"},
         stage_finetune},
        {Stage::EVAL,
         {"labeled.bin", "segnet_random.ckpt", "segnet_from_siamese.ckpt"},
         {"eval_summary.csv"},
         stage_eval},
        {Stage::BORDERS, {"world.txt", "siamese_combined.ckpt"}, {"borders.csv"}, stage_borders},
        {Stage::REPORT,
         {"pretrain_errdist.csv", "eval_summary.csv"},
         {"report.csv"},
         stage_report},
    };

    for (const StageDef& def : stages) {
        std::string name = stage_name(def.stage);
        if (r.fresh(name, def.inputs, def.outputs)) {
            r.note("[" + name + "] up to date, skipping");
        } else {
            r.note("[" + name + "] running");
            try {
                def.run(r);
            } catch (const std::exception& e) {
                throw std::runtime_error("stage " + name + ": " + e.what());
            }
            r.stamp(name, def.inputs);
        }
        if (def.stage == stop_after) break;
    }
}

}  // namespace geoseg
