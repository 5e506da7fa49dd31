#include "geoseg/segnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "geoseg/rng.hpp"

namespace geoseg {

std::string init_mode_name(InitMode m) {
    return m == InitMode::RANDOM ? "random" : "from_siamese";
}

InitMode init_mode_from_name(const std::string& s) {
    if (s == "random") return InitMode::RANDOM;
    if (s == "from_siamese") return InitMode::FROM_SIAMESE;
    throw std::invalid_argument("unknown init mode: " + s);
}

namespace {

Tensor uniform_fan_in(Rng& rng, std::vector<int> shape, int fan_in) {
    Tensor t(std::move(shape));
    double a = std::sqrt(1.0 / fan_in);
    for (float& v : t.data) v = static_cast<float>(rng.uniform(-a, a));
    return t;
}

void create_conv(ParamStore& store, Rng& rng, const std::string& name, int oc, int ic, int k) {
    store.create(name + "/w", uniform_fan_in(rng, {oc, ic, k, k}, ic * k * k));
    store.create(name + "/b", Tensor({oc}));
}

}  // namespace

SegNet init_segnet(int n_classes, uint64_t seed) {
    SegNet m;
    m.n_classes = n_classes;
    Rng rng(hash_combine(seed, 0x736567696e6974ULL /* "seginit" */));
    const int k = m.arch.kernel;
    int in_ch = 1;
    for (size_t i = 0; i < m.arch.channels.size(); ++i) {
        create_conv(m.params, rng, "tex/conv" + std::to_string(i), m.arch.channels[i], in_ch, k);
        in_ch = m.arch.channels[i];
    }
    int atlas_in = n_classes;
    for (size_t i = 0; i < m.atlas_channels.size(); ++i) {
        create_conv(m.params, rng, "atlas/conv" + std::to_string(i), m.atlas_channels[i], atlas_in,
                    k);
        atlas_in = m.atlas_channels[i];
    }
    const auto& ch = m.arch.channels;  // {8,16,32,32}
    create_conv(m.params, rng, "dec/join", 32, ch[3] + m.atlas_channels.back(), k);
    create_conv(m.params, rng, "dec/up1", 32, 32 + ch[2], k);
    create_conv(m.params, rng, "dec/up2", 32, 32 + ch[1], k);
    create_conv(m.params, rng, "dec/out", n_classes, 32, 1);
    return m;
}

SegNet init_from_siamese(const ParamStore& checkpoint, int n_classes, uint64_t seed) {
    SegNet m = init_segnet(n_classes, seed);
    for (size_t i = 0; i < m.arch.channels.size(); ++i) {
        for (const char* suffix : {"/w", "/b"}) {
            std::string src = "branch/conv" + std::to_string(i) + suffix;
            std::string dst = "tex/conv" + std::to_string(i) + suffix;
            if (!checkpoint.contains(src))
                throw std::runtime_error("init_from_siamese: checkpoint missing " + src);
            const Tensor& w = checkpoint.at(src).value;
            Tensor& t = m.params.at(dst).value;
            if (w.shape != t.shape)
                throw std::runtime_error("init_from_siamese: shape mismatch for " + src + ": " +
                                         w.shape_str() + " vs " + t.shape_str());
            t = w;
        }
    }
    return m;
}

namespace {

struct SegNodes {
    std::vector<Graph::NodeId> tex_w, tex_b, atlas_w, atlas_b;
    Graph::NodeId join_w, join_b, up1_w, up1_b, up2_w, up2_b, out_w, out_b;
};

SegNodes bind_segnet(Graph& g, SegNet& m) {
    SegNodes n;
    for (size_t i = 0; i < m.arch.channels.size(); ++i) {
        n.tex_w.push_back(g.param(m.params, "tex/conv" + std::to_string(i) + "/w"));
        n.tex_b.push_back(g.param(m.params, "tex/conv" + std::to_string(i) + "/b"));
    }
    for (size_t i = 0; i < m.atlas_channels.size(); ++i) {
        n.atlas_w.push_back(g.param(m.params, "atlas/conv" + std::to_string(i) + "/w"));
        n.atlas_b.push_back(g.param(m.params, "atlas/conv" + std::to_string(i) + "/b"));
    }
    n.join_w = g.param(m.params, "dec/join/w");
    n.join_b = g.param(m.params, "dec/join/b");
    n.up1_w = g.param(m.params, "dec/up1/w");
    n.up1_b = g.param(m.params, "dec/up1/b");
    n.up2_w = g.param(m.params, "dec/up2/w");
    n.up2_b = g.param(m.params, "dec/up2/b");
    n.out_w = g.param(m.params, "dec/out/w");
    n.out_b = g.param(m.params, "dec/out/b");
    return n;
}

Graph::NodeId seg_forward(Graph& g, SegNet& m, const SegNodes& n, Graph::NodeId image,
                          Graph::NodeId prior) {
    const int stride = m.arch.stride;
    // texture branch, keeping per-stage activations for skips
    std::vector<Graph::NodeId> tex;
    Graph::NodeId x = image;
    for (size_t i = 0; i < n.tex_w.size(); ++i) {
        x = g.relu(g.conv2d(x, n.tex_w[i], n.tex_b[i], stride));
        tex.push_back(x);
    }
    Graph::NodeId a = prior;
    for (size_t i = 0; i < n.atlas_w.size(); ++i)
        a = g.relu(g.conv2d(a, n.atlas_w[i], n.atlas_b[i], stride));
    // decoder: join at the bottleneck, two up stages with skips, then the
    // classifier and plain x4 nearest upsampling back to patch resolution
    Graph::NodeId d = g.relu(g.conv2d(g.concat_channels(tex[3], a), n.join_w, n.join_b, 1));
    d = g.relu(g.conv2d(g.concat_channels(g.upsample2(d), tex[2]), n.up1_w, n.up1_b, 1));
    d = g.relu(g.conv2d(g.concat_channels(g.upsample2(d), tex[1]), n.up2_w, n.up2_b, 1));
    Graph::NodeId logits = g.conv2d(d, n.out_w, n.out_b, 1);
    return g.upsample2(g.upsample2(logits));
}

}  // namespace

Tensor seg_logits(SegNet& model, const Tensor& image, const Tensor& prior) {
    Graph g;
    SegNodes nodes = bind_segnet(g, model);
    Graph::NodeId out = seg_forward(g, model, nodes, g.input(image), g.input(prior));
    return g.value(out);
}

std::vector<uint8_t> predict(SegNet& model, const Tensor& image, const Tensor& prior) {
    Tensor logits = seg_logits(model, image, prior);
    const int nc = logits.dim(0);
    const int npix = logits.dim(1) * logits.dim(2);
    std::vector<uint8_t> out(npix);
    for (int p = 0; p < npix; ++p) {
        int best = 0;
        float best_v = logits.data[p];
        for (int c = 1; c < nc; ++c) {
            float v = logits.data[static_cast<size_t>(c) * npix + p];
            if (v > best_v) {  // strict: ties keep the lowest class id
                best_v = v;
                best = c;
            }
        }
        out[p] = static_cast<uint8_t>(best);
    }
    return out;
}

void seg_sgd_step(SegNet& model, double base_lr, double atlas_multiplier) {
    for (auto& [name, p] : model.params) {
        if (!p.trainable) continue;
        if (!p.has_grad)
            throw std::runtime_error("seg_sgd_step: missing gradient for " + name);
        double lr = base_lr * (name.rfind("atlas/", 0) == 0 ? atlas_multiplier : 1.0);
        for (size_t i = 0; i < p.value.data.size(); ++i)
            p.value.data[i] =
                static_cast<float>(p.value.data[i] - lr * static_cast<double>(p.grad.data[i]));
        if (!p.value.all_finite())
            throw std::runtime_error("seg_sgd_step: non-finite parameter after update: " + name);
    }
}

void SegTrainHistory::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("SegTrainHistory: cannot open " + path);
    out << "iter,phase,loss\n";
    out << std::setprecision(17);
    for (const SegHistoryRow& r : rows) out << r.iter << "," << r.phase << "," << r.loss << "\n";
}

void train_seg(SegNet& model, const std::vector<LabeledPatch>& train_set,
               const FinetuneConfig& config, SegTrainHistory* history) {
    if (config.phase1_iters > 0 || config.phase2_iters > 0) {
        if (train_set.empty()) throw std::invalid_argument("train_seg: empty training set");
    }
    Rng rng(hash_combine(config.seed, 0x666e74756e65ULL /* "fntune" */));
    const int total = config.phase1_iters + config.phase2_iters;
    Tensor zero_prior;
    if (!train_set.empty()) zero_prior = Tensor(train_set[0].prior.shape);

    for (int iter = 0; iter < total; ++iter) {
        const bool phase2 = iter >= config.phase1_iters;
        Graph g;
        SegNodes nodes = bind_segnet(g, model);
        Graph::NodeId sum = -1;
        for (int b = 0; b < config.batch_size; ++b) {
            const LabeledPatch& ex =
                train_set[static_cast<size_t>(rng.uniform_index(train_set.size()))];
            Graph::NodeId logits =
                seg_forward(g, model, nodes, g.input(ex.image),
                            g.input(phase2 ? ex.prior : zero_prior));
            Graph::NodeId l = g.softmax_ce_loss(logits, ex.labels);
            sum = (sum < 0) ? l : g.add(sum, l);
        }
        Graph::NodeId loss = g.scale(sum, 1.0 / config.batch_size);
        double value = g.scalar(loss);
        if (!std::isfinite(value))
            throw std::runtime_error("train_seg: non-finite loss at iter " + std::to_string(iter));
        model.params.zero_grads();
        g.backward(loss);
        double lr = phase2 ? config.phase2_schedule.lr(iter - config.phase1_iters)
                           : config.phase1_lr;
        seg_sgd_step(model, lr, phase2 ? config.atlas_lr_multiplier : 1.0);
        if (history && (iter % 25 == 0 || iter + 1 == total))
            history->rows.push_back({iter, phase2 ? 2 : 1, value});
    }
}

}  // namespace geoseg
