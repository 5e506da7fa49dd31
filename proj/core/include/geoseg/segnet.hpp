#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geoseg/autodiff.hpp"
#include "geoseg/siamese.hpp"
#include "geoseg/tensor.hpp"

namespace geoseg {

enum class InitMode { RANDOM, FROM_SIAMESE };

std::string init_mode_name(InitMode m);
InitMode init_mode_from_name(const std::string& s);

// Two-branch patch segmentation network: texture branch (the Siamese conv
// stack, without the embedding layer), a small conv branch over atlas prior
// maps, and an upsampling decoder with skip connections.
struct SegNet {
    BranchArch arch;           // texture branch shapes (must match BranchNet)
    std::vector<int> atlas_channels = {4, 8, 8, 16};
    int n_classes = 6;
    ParamStore params;
};

struct FinetuneConfig {
    int phase1_iters = 800;   // without atlas data (zeroed prior input)
    int phase2_iters = 1000;  // with atlas data
    int batch_size = 8;
    double phase1_lr = 0.02;
    LrSchedule phase2_schedule{0.01, 2.0, 0, {300, 500, 600}};  // relative to phase-2 start
    double atlas_lr_multiplier = 10.0;
    InitMode init_mode = InitMode::FROM_SIAMESE;
    uint64_t seed = 1;
};

struct MetricsReport {
    std::vector<double> per_class_dice;  // -1 where the class is absent from both
    double macro_dice = 0.0;
    double err_seg = 0.0;                // per-100-pixels penalty rate
    double err_dist = -1.0;              // mm, when applicable
    std::vector<long long> confusion;    // n_classes x n_classes, row = truth
    int n_classes = 0;

    void save_csv(const std::string& metrics_path, const std::string& confusion_path,
                  const std::string& experiment) const;
};

SegNet init_segnet(int n_classes, uint64_t seed);

// Texture branch from a pretrained Siamese checkpoint; atlas branch and
// decoder keep their fresh initialization. Throws (naming the parameter) on
// any conv-stack shape mismatch.
SegNet init_from_siamese(const ParamStore& checkpoint, int n_classes, uint64_t seed);

// Per-pixel class logits, [n_classes, px, px].
Tensor seg_logits(SegNet& model, const Tensor& image, const Tensor& prior);

// Argmax labels, ties broken by lowest class id.
std::vector<uint8_t> predict(SegNet& model, const Tensor& image, const Tensor& prior);

// One SGD step with a per-branch learning rate: atlas-branch parameters use
// base_lr * atlas_multiplier, everything else base_lr.
void seg_sgd_step(SegNet& model, double base_lr, double atlas_multiplier);

struct LabeledPatch {
    Tensor image;                    // [1, px, px]
    std::vector<int> labels;         // px*px class ids
    Tensor prior;                    // [n_classes, px, px]
};

struct SegHistoryRow {
    int iter = 0;
    int phase = 1;
    double loss = 0.0;
};

struct SegTrainHistory {
    std::vector<SegHistoryRow> rows;
    void save_csv(const std::string& path) const;
};

// Two-phase fine-tuning: phase 1 feeds a zeroed atlas input, phase 2 the
// real priors. Deterministic given config.seed.
void train_seg(SegNet& model, const std::vector<LabeledPatch>& train_set,
               const FinetuneConfig& config, SegTrainHistory* history);

// --- metrics -------------------------------------------------------------

struct DiceResult {
    std::vector<double> per_class;  // -1 where absent from both pred and truth
    double macro = 0.0;
};

DiceResult dice(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& truth,
                int n_classes);

// Yasnoff-style pixel distance error: mean over all pixels of the Euclidean
// distance from each misclassified pixel to the nearest truth pixel of its
// predicted class (image diagonal if that class is absent), times 100.
double err_seg(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& truth, int height,
               int width);

// confusion[truth * n_classes + pred] = pixel count
std::vector<long long> confusion(const std::vector<uint8_t>& pred,
                                 const std::vector<uint8_t>& truth, int n_classes);

// Exact squared Euclidean distance transform (Felzenszwalb-Huttenlocher) of
// a boolean mask; returns per-pixel squared distance to the nearest set
// pixel (infinity when the mask is empty).
std::vector<double> distance_transform_sq(const std::vector<char>& mask, int height, int width);

// Aggregate evaluation over a labeled set.
MetricsReport evaluate_seg(SegNet& model, const std::vector<LabeledPatch>& test_set, int patch_px);

}  // namespace geoseg
