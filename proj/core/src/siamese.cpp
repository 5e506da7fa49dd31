#include "geoseg/siamese.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "geoseg/rng.hpp"

namespace geoseg {

std::string loss_mode_name(LossMode m) {
    switch (m) {
        case LossMode::DIST_ONLY: return "dist";
        case LossMode::COORD_ONLY: return "coord";
        case LossMode::COMBINED: return "combined";
    }
    throw std::logic_error("loss_mode_name: bad mode");
}

LossMode loss_mode_from_name(const std::string& s) {
    if (s == "dist") return LossMode::DIST_ONLY;
    if (s == "coord") return LossMode::COORD_ONLY;
    if (s == "combined") return LossMode::COMBINED;
    throw std::invalid_argument("unknown loss mode: " + s);
}

double SiameseModel::dist_scale() const { return params.at("meta/dist_scale").value.data[0]; }

void SiameseModel::set_dist_scale(double s) {
    params.at("meta/dist_scale").value.data[0] = static_cast<float>(s);
}

namespace {

Tensor uniform_fan_in(Rng& rng, std::vector<int> shape, int fan_in) {
    Tensor t(std::move(shape));
    double a = std::sqrt(1.0 / fan_in);
    for (float& v : t.data) v = static_cast<float>(rng.uniform(-a, a));
    return t;
}

}  // namespace

SiameseModel init_siamese(const BranchArch& arch, uint64_t seed) {
    SiameseModel m;
    m.arch = arch;
    Rng rng(hash_combine(seed, 0x696e6974ULL /* "init" */));
    int in_ch = 1;
    for (size_t i = 0; i < arch.channels.size(); ++i) {
        int oc = arch.channels[i];
        int fan_in = in_ch * arch.kernel * arch.kernel;
        m.params.create("branch/conv" + std::to_string(i) + "/w",
                        uniform_fan_in(rng, {oc, in_ch, arch.kernel, arch.kernel}, fan_in));
        m.params.create("branch/conv" + std::to_string(i) + "/b", Tensor({oc}));
        in_ch = oc;
    }
    // the final dense layers are exempt from weight decay
    m.params.create("branch/embed/w", uniform_fan_in(rng, {arch.embed_dim, in_ch}, in_ch), true,
                    true);
    m.params.create("branch/embed/b", Tensor({arch.embed_dim}), true, true);
    m.params.create("coord/w", uniform_fan_in(rng, {3, arch.embed_dim}, arch.embed_dim), true,
                    true);
    m.params.create("coord/b", Tensor({3}), true, true);
    Tensor scale({1});
    scale.data[0] = 1.0f;
    m.params.create("meta/dist_scale", std::move(scale), false, true);
    return m;
}

BranchNodes bind_branch(Graph& g, SiameseModel& model) {
    BranchNodes n;
    for (size_t i = 0; i < model.arch.channels.size(); ++i) {
        n.conv_w.push_back(g.param(model.params, "branch/conv" + std::to_string(i) + "/w"));
        n.conv_b.push_back(g.param(model.params, "branch/conv" + std::to_string(i) + "/b"));
    }
    n.embed_w = g.param(model.params, "branch/embed/w");
    n.embed_b = g.param(model.params, "branch/embed/b");
    n.coord_w = g.param(model.params, "coord/w");
    n.coord_b = g.param(model.params, "coord/b");
    return n;
}

Graph::NodeId embed_node(Graph& g, const SiameseModel& model, const BranchNodes& nodes,
                         Graph::NodeId image) {
    Graph::NodeId x = image;
    for (size_t i = 0; i < nodes.conv_w.size(); ++i) {
        x = g.conv2d(x, nodes.conv_w[i], nodes.conv_b[i], model.arch.stride);
        x = g.relu(x);
    }
    x = g.global_avg_pool(x);
    return g.dense(x, nodes.embed_w, nodes.embed_b);
}

Tensor embed(SiameseModel& model, const Tensor& image) {
    Graph g;
    BranchNodes nodes = bind_branch(g, model);
    Graph::NodeId out = embed_node(g, model, nodes, g.input(image));
    return g.value(out);
}

Vec3 predict_coordinate(SiameseModel& model, const Tensor& embedding) {
    Graph g;
    Graph::NodeId w = g.param(model.params, "coord/w");
    Graph::NodeId b = g.param(model.params, "coord/b");
    Graph::NodeId out = g.dense(g.input(embedding), w, b);
    const Tensor& v = g.value(out);
    return {v.data[0], v.data[1], v.data[2]};
}

double loss_dist(const Tensor& f1, const Tensor& f2, double y_dist) {
    if (!f1.same_shape(f2)) throw std::invalid_argument("loss_dist: shape mismatch");
    double d2 = 0.0;
    for (size_t i = 0; i < f1.data.size(); ++i) {
        double d = static_cast<double>(f1.data[i]) - f2.data[i];
        d2 += d * d;
    }
    return std::abs(d2 - y_dist);
}

double loss_coord(SiameseModel& model, const Tensor& embedding, const Vec3& y_coord) {
    Vec3 pred = predict_coordinate(model, embedding);
    return std::abs(pred[0] - y_coord[0]) + std::abs(pred[1] - y_coord[1]) +
           std::abs(pred[2] - y_coord[2]);
}

double weight_decay_penalty(const SiameseModel& model) {
    double acc = 0.0;
    for (const auto& [name, p] : model.params) {
        if (!p.trainable || p.weight_decay_exempt) continue;
        for (float v : p.value.data) acc += static_cast<double>(v) * v;
    }
    return acc;
}

namespace {

Graph::NodeId pair_loss_node(Graph& g, SiameseModel& model, const BranchNodes& nodes,
                             const PairExample& ex, const SiameseConfig& cfg) {
    Graph::NodeId f1 = embed_node(g, model, nodes, g.input(ex.image_a));
    Graph::NodeId f2 = embed_node(g, model, nodes, g.input(ex.image_b));
    Graph::NodeId term = -1;
    if (cfg.loss_mode != LossMode::COORD_ONLY) {
        term = g.l1(g.sub_const(g.sum_sq(g.sub(f1, f2)), ex.y_dist));
    }
    if (cfg.loss_mode != LossMode::DIST_ONLY && cfg.alpha > 0.0) {
        Tensor ya({3}), yb({3});
        for (int i = 0; i < 3; ++i) {
            ya.data[i] = static_cast<float>(ex.y_coord_a[i]);
            yb.data[i] = static_cast<float>(ex.y_coord_b[i]);
        }
        Graph::NodeId c1 = g.l1(g.sub(g.dense(f1, nodes.coord_w, nodes.coord_b), g.input(ya)));
        Graph::NodeId c2 = g.l1(g.sub(g.dense(f2, nodes.coord_w, nodes.coord_b), g.input(yb)));
        Graph::NodeId coord = g.scale(g.add(c1, c2), cfg.alpha);
        term = (term < 0) ? coord : g.add(term, coord);
    }
    if (term < 0) term = g.scale(g.sum_sq(g.sub(f1, f1)), 0.0);  // alpha==0 in COORD_ONLY
    return term;
}

}  // namespace

double total_loss(SiameseModel& model, const std::vector<PairExample>& batch,
                  const SiameseConfig& config, Graph* graph_out, Graph::NodeId* loss_node_out) {
    if (batch.empty()) throw std::invalid_argument("total_loss: empty batch");
    Graph local;
    Graph& g = graph_out ? *graph_out : local;
    BranchNodes nodes = bind_branch(g, model);
    Graph::NodeId sum = -1;
    for (const PairExample& ex : batch) {
        Graph::NodeId t = pair_loss_node(g, model, nodes, ex, config);
        sum = (sum < 0) ? t : g.add(sum, t);
    }
    Graph::NodeId mean = g.scale(sum, 1.0 / batch.size());
    if (loss_node_out) *loss_node_out = mean;
    return g.scalar(mean) + config.weight_decay * weight_decay_penalty(model);
}

std::vector<Pair> filter_pairs(const PatchDataset& dataset, const PairList& pairs, Split split) {
    std::vector<Pair> out;
    for (const Pair& p : pairs.pairs)
        if (dataset.patches[p.a].split == split && dataset.patches[p.b].split == split)
            out.push_back(p);
    return out;
}

double eval_err_dist(SiameseModel& model, const std::vector<Tensor>& images,
                     const PatchDataset& dataset, const std::vector<Pair>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("eval_err_dist: empty pair set");
    const double scale = model.dist_scale();
    // embed each referenced patch once
    std::vector<char> needed(images.size(), 0);
    for (const Pair& p : pairs) needed[p.a] = needed[p.b] = 1;
    std::vector<Tensor> emb(images.size());
    for (size_t i = 0; i < images.size(); ++i)
        if (needed[i]) emb[i] = embed(model, images[i]);
    double acc = 0.0;
    for (const Pair& p : pairs) {
        double d2 = 0.0;
        const Tensor& f1 = emb[p.a];
        const Tensor& f2 = emb[p.b];
        for (size_t i = 0; i < f1.data.size(); ++i) {
            double d = static_cast<double>(f1.data[i]) - f2.data[i];
            d2 += d * d;
        }
        // predicted distance back in mm
        acc += std::abs(d2 / scale - p.y_dist);
    }
    (void)dataset;
    return acc / pairs.size();
}

void TrainHistory::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("TrainHistory: cannot open " + path);
    out << "epoch,train_loss,err_dist\n";
    out << std::setprecision(17);
    for (const HistoryRow& r : rows)
        out << r.epoch << "," << r.train_loss << "," << r.err_dist << "\n";
}

SiameseModel train_siamese(const std::vector<Tensor>& images, const PatchDataset& dataset,
                           const PairList& pairs, const SiameseConfig& config,
                           const std::string& checkpoint_dir, TrainHistory* history) {
    if (images.size() != dataset.patches.size())
        throw std::invalid_argument("train_siamese: images/dataset size mismatch");
    if (!pairs.annotated) throw std::invalid_argument("train_siamese: pairs not annotated");

    SiameseModel model = init_siamese(BranchArch{}, config.seed);

    std::vector<Pair> train_pairs = filter_pairs(dataset, pairs, Split::TRAIN);
    std::vector<Pair> test_pairs = filter_pairs(dataset, pairs, Split::TEST);
    if (train_pairs.empty()) throw std::runtime_error("train_siamese: no training pairs");

    // rescale targets so the median training distance is ~1
    std::vector<double> dists;
    dists.reserve(train_pairs.size());
    for (const Pair& p : train_pairs) dists.push_back(p.y_dist);
    std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
    double median = dists[dists.size() / 2];
    double scale = median > 1e-12 ? 1.0 / median : 1.0;
    model.set_dist_scale(scale);

    Rng rng(hash_combine(config.seed, 0x747261696eULL /* "train" */));
    std::vector<size_t> order(train_pairs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        int n_batches = 0;
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<PairExample> batch;
            batch.reserve(end - start);
            for (size_t k = start; k < end; ++k) {
                const Pair& p = train_pairs[order[k]];
                PairExample ex;
                ex.image_a = images[p.a];
                ex.image_b = images[p.b];
                ex.y_dist = p.y_dist * scale;
                for (int i = 0; i < 3; ++i) {
                    ex.y_coord_a[i] = dataset.patches[p.a].y_coord[i] * scale;
                    ex.y_coord_b[i] = dataset.patches[p.b].y_coord[i] * scale;
                }
                batch.push_back(std::move(ex));
            }
            Graph g;
            Graph::NodeId loss_node = -1;
            double value;
            try {
                value = total_loss(model, batch, config, &g, &loss_node);
            } catch (const std::exception& e) {
                throw std::runtime_error("train_siamese: aborted at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(n_batches) + ": " + e.what());
            }
            if (!std::isfinite(value))
                throw std::runtime_error("train_siamese: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(n_batches));
            model.params.zero_grads();
            g.backward(loss_node);
            // parameters absent from this graph (e.g. the coordinate head in
            // DIST_ONLY mode) legitimately have zero gradient
            for (auto& [name, p] : model.params)
                if (p.trainable && !p.has_grad) p.has_grad = true;
            sgd_step(model.params, config.schedule, epoch, config.weight_decay);
            epoch_loss += value;
            ++n_batches;
        }
        HistoryRow row;
        row.epoch = epoch;
        row.train_loss = epoch_loss / std::max(1, n_batches);
        row.err_dist = test_pairs.empty()
                           ? 0.0
                           : eval_err_dist(model, images, dataset, test_pairs);
        if (history) history->rows.push_back(row);
        if (!checkpoint_dir.empty())
            save_checkpoint(model.params,
                            checkpoint_dir + "/checkpoint_ep" + std::to_string(epoch) + ".ckpt");
    }
    return model;
}

}  // namespace geoseg
