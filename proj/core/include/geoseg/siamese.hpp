#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geoseg/autodiff.hpp"
#include "geoseg/sampler.hpp"
#include "geoseg/tensor.hpp"

namespace geoseg {

enum class LossMode { DIST_ONLY, COORD_ONLY, COMBINED };

std::string loss_mode_name(LossMode m);
LossMode loss_mode_from_name(const std::string& s);

// Conv stack shared by the Siamese branch and the segmentation texture
// branch: stride-2 3x3 convolutions with ReLU.
struct BranchArch {
    std::vector<int> channels = {8, 16, 32, 32};
    int kernel = 3;
    int stride = 2;
    int embed_dim = 32;
};

struct SiameseConfig {
    double alpha = 10.0;          // coordinate loss weight
    double weight_decay = 0.001;  // lambda
    int epochs = 5;
    int batch_size = 16;
    LrSchedule schedule{0.01, 2.0, 3, {}};
    LossMode loss_mode = LossMode::COMBINED;
    uint64_t seed = 1;
};

// Weight-sharing branch network plus the coordinate head; one ParamStore
// backs both Siamese branches.
struct SiameseModel {
    BranchArch arch;
    ParamStore params;

    double dist_scale() const;  // recorded target rescaling constant
    void set_dist_scale(double s);
};

SiameseModel init_siamese(const BranchArch& arch, uint64_t seed);

// Bound parameter node ids of one branch inside a Graph; bind once per graph
// so both Siamese inputs share the same parameter nodes.
struct BranchNodes {
    std::vector<Graph::NodeId> conv_w, conv_b;
    Graph::NodeId embed_w, embed_b;
    Graph::NodeId coord_w, coord_b;
};
BranchNodes bind_branch(Graph& g, SiameseModel& model);

// Embedding forward pass: conv stack, global average pool, dense embed_dim.
Graph::NodeId embed_node(Graph& g, const SiameseModel& model, const BranchNodes& nodes,
                         Graph::NodeId image);
Tensor embed(SiameseModel& model, const Tensor& image);

// Predicted coordinate d(f(x)) for an embedding.
Vec3 predict_coordinate(SiameseModel& model, const Tensor& embedding);

// | ||f1 - f2||^2 - y_dist |
double loss_dist(const Tensor& f1, const Tensor& f2, double y_dist);
// sum_i |coord_pred_i - y_coord_i|
double loss_coord(SiameseModel& model, const Tensor& embedding, const Vec3& y_coord);

struct PairExample {
    Tensor image_a, image_b;
    double y_dist = 0.0;   // already rescaled
    Vec3 y_coord_a{}, y_coord_b{};  // already rescaled
};

// Mean over the batch of l_dist + alpha*(l_coord(x1)+l_coord(x2)) plus the
// weight-decay penalty over non-exempt parameters. Returns the value; when
// `graph_out` is given the data term is left on the tape for backward.
double total_loss(SiameseModel& model, const std::vector<PairExample>& batch,
                  const SiameseConfig& config, Graph* graph_out = nullptr,
                  Graph::NodeId* loss_node_out = nullptr);

double weight_decay_penalty(const SiameseModel& model);

struct HistoryRow {
    int epoch = 0;
    double train_loss = 0.0;
    double err_dist = 0.0;  // mm, held-out
};

struct TrainHistory {
    std::vector<HistoryRow> rows;
    void save_csv(const std::string& path) const;
};

// Self-supervised training. `images[i]` is the rendered patch of
// dataset.patches[i]. Train pairs are those whose endpoints are both TRAIN;
// err_dist is evaluated on pairs whose endpoints are both TEST.
SiameseModel train_siamese(const std::vector<Tensor>& images, const PatchDataset& dataset,
                           const PairList& pairs, const SiameseConfig& config,
                           const std::string& checkpoint_dir, TrainHistory* history);

// Mean | predicted - groundtruth | distance in mm over the given pairs.
double eval_err_dist(SiameseModel& model, const std::vector<Tensor>& images,
                     const PatchDataset& dataset, const std::vector<Pair>& pairs);

std::vector<Pair> filter_pairs(const PatchDataset& dataset, const PairList& pairs, Split split);

}  // namespace geoseg
