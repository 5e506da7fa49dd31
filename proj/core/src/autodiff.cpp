#include "geoseg/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace geoseg {

Param& ParamStore::create(const std::string& name, Tensor init, bool trainable, bool exempt) {
    if (params_.count(name)) throw std::invalid_argument("ParamStore: duplicate name " + name);
    Param p;
    p.value = std::move(init);
    p.grad = Tensor(p.value.shape);
    p.trainable = trainable;
    p.weight_decay_exempt = exempt;
    return params_.emplace(name, std::move(p)).first->second;
}

Param& ParamStore::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("ParamStore: unknown parameter " + name);
    return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("ParamStore: unknown parameter " + name);
    return it->second;
}

void ParamStore::zero_grads() {
    for (auto& [name, p] : params_) {
        std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0f);
        p.has_grad = false;
    }
}

double LrSchedule::lr(int step) const {
    if (initial_lr <= 0) throw std::invalid_argument("LrSchedule: initial_lr must be > 0");
    int decays;
    if (!milestones.empty()) {
        decays = static_cast<int>(
            std::count_if(milestones.begin(), milestones.end(), [&](int m) { return step >= m; }));
    } else {
        if (decay_every <= 0) throw std::invalid_argument("LrSchedule: decay_every must be > 0");
        decays = step / decay_every;
    }
    return initial_lr / std::pow(decay_factor, decays);
}

Graph::NodeId Graph::emplace(Tensor value, std::function<void()> backward_fn, Param* bound) {
    if (!value.all_finite()) throw std::runtime_error("Graph: non-finite forward output");
    Node n;
    n.value = std::move(value);
    n.grad = Tensor(n.value.shape);
    n.backward_fn = std::move(backward_fn);
    n.bound = bound;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

void Graph::check_id(NodeId id) const {
    if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
        throw std::out_of_range("Graph: bad node id");
}

Graph::NodeId Graph::input(Tensor t) { return emplace(std::move(t), nullptr); }

Graph::NodeId Graph::param(ParamStore& store, const std::string& name) {
    Param& p = store.at(name);
    return emplace(p.value, nullptr, &p);
}

double Graph::scalar(NodeId id) const {
    check_id(id);
    if (nodes_[id].value.numel() != 1) throw std::runtime_error("Graph: node is not a scalar");
    return nodes_[id].value.data[0];
}

Graph::NodeId Graph::conv2d(NodeId in, NodeId weight, NodeId bias, int stride) {
    check_id(in);
    check_id(weight);
    check_id(bias);
    const Tensor& x = nodes_[in].value;
    const Tensor& w = nodes_[weight].value;
    const Tensor& b = nodes_[bias].value;
    if (x.rank() != 3 || w.rank() != 4 || b.rank() != 1)
        throw std::runtime_error("conv2d: expected input [C,H,W], weight [OC,IC,KH,KW], bias [OC]");
    const int ic = x.dim(0), h = x.dim(1), wd = x.dim(2);
    const int oc = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    if (w.dim(1) != ic) throw std::runtime_error("conv2d: channel mismatch");
    if (b.dim(0) != oc) throw std::runtime_error("conv2d: bias size mismatch");
    if (stride < 1) throw std::runtime_error("conv2d: stride must be >= 1");
    const int oh = (h + stride - 1) / stride;
    const int ow = (wd + stride - 1) / stride;
    const int pad_h = std::max((oh - 1) * stride + kh - h, 0) / 2;
    const int pad_w = std::max((ow - 1) * stride + kw - wd, 0) / 2;

    std::vector<double> acc(static_cast<size_t>(oc) * oh * ow);
    for (int o = 0; o < oc; ++o) {
        double* out_plane = acc.data() + static_cast<size_t>(o) * oh * ow;
        for (int i = 0; i < oh * ow; ++i) out_plane[i] = b.data[o];
        for (int c = 0; c < ic; ++c) {
            const float* in_plane = x.data.data() + static_cast<size_t>(c) * h * wd;
            const float* wk = w.data.data() + (static_cast<size_t>(o) * ic + c) * kh * kw;
            for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx) {
                    const double wv = wk[ky * kw + kx];
                    if (wv == 0.0) continue;
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride - pad_h + ky;
                        if (iy < 0 || iy >= h) continue;
                        const float* in_row = in_plane + static_cast<size_t>(iy) * wd;
                        double* out_row = out_plane + static_cast<size_t>(oy) * ow;
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * stride - pad_w + kx;
                            if (ix < 0 || ix >= wd) continue;
                            out_row[ox] += wv * in_row[ix];
                        }
                    }
                }
        }
    }
    Tensor out({oc, oh, ow});
    for (size_t i = 0; i < acc.size(); ++i) out.data[i] = static_cast<float>(acc[i]);

    Graph* g = this;
    auto backward = [g, in, weight, bias, stride, ic, h, wd, oc, kh, kw, oh, ow, pad_h, pad_w]() {
        const Tensor& go = g->nodes_[g->current_].grad;
        const Tensor& x = g->nodes_[in].value;
        const Tensor& w = g->nodes_[weight].value;
        Tensor& gx = g->nodes_[in].grad;
        Tensor& gw = g->nodes_[weight].grad;
        Tensor& gb = g->nodes_[bias].grad;
        std::vector<double> dgx(gx.data.size()), dgw(gw.data.size()), dgb(gb.data.size());
        for (int o = 0; o < oc; ++o) {
            const float* go_plane = go.data.data() + static_cast<size_t>(o) * oh * ow;
            double gbo = 0.0;
            for (int i = 0; i < oh * ow; ++i) gbo += go_plane[i];
            dgb[o] = gbo;
            for (int c = 0; c < ic; ++c) {
                const float* in_plane = x.data.data() + static_cast<size_t>(c) * h * wd;
                double* dgx_plane = dgx.data() + static_cast<size_t>(c) * h * wd;
                const float* wk = w.data.data() + (static_cast<size_t>(o) * ic + c) * kh * kw;
                double* dwk = dgw.data() + (static_cast<size_t>(o) * ic + c) * kh * kw;
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx) {
                        const double wv = wk[ky * kw + kx];
                        double wacc = 0.0;
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride - pad_h + ky;
                            if (iy < 0 || iy >= h) continue;
                            const float* in_row = in_plane + static_cast<size_t>(iy) * wd;
                            double* dgx_row = dgx_plane + static_cast<size_t>(iy) * wd;
                            const float* go_row = go_plane + static_cast<size_t>(oy) * ow;
                            for (int ox = 0; ox < ow; ++ox) {
                                const int ix = ox * stride - pad_w + kx;
                                if (ix < 0 || ix >= wd) continue;
                                const double gov = go_row[ox];
                                wacc += gov * in_row[ix];
                                dgx_row[ix] += gov * wv;
                            }
                        }
                        dwk[ky * kw + kx] += wacc;
                    }
            }
        }
        for (size_t i = 0; i < dgx.size(); ++i) gx.data[i] += static_cast<float>(dgx[i]);
        for (size_t i = 0; i < dgw.size(); ++i) gw.data[i] += static_cast<float>(dgw[i]);
        for (size_t i = 0; i < dgb.size(); ++i) gb.data[i] += static_cast<float>(dgb[i]);
    };
    return emplace(std::move(out), std::move(backward));
}

Graph::NodeId Graph::relu(NodeId x) {
    check_id(x);
    const Tensor& in = nodes_[x].value;
    Tensor out(in.shape);
    for (size_t i = 0; i < in.data.size(); ++i) out.data[i] = in.data[i] > 0.0f ? in.data[i] : 0.0f;
    Graph* g = this;
    auto backward = [g, x]() {
        const Tensor& go = g->nodes_[g->current_].grad;
        const Tensor& in = g->nodes_[x].value;
        Tensor& gx = g->nodes_[x].grad;
        for (size_t i = 0; i < gx.data.size(); ++i)
            if (in.data[i] > 0.0f) gx.data[i] += go.data[i];
    };
    return emplace(std::move(out), std::move(backward));
}

Graph::NodeId Graph::maxpool2(NodeId x) {
    check_id(x);
    const Tensor& in = nodes_[x].value;
    if (in.rank() != 3) throw std::runtime_error("maxpool2: expected [C,H,W]");
    const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
    if (h % 2 != 0 || w % 2 != 0) throw std::runtime_error("maxpool2: H and W must be even");
    const int oh = h / 2, ow = w / 2;
    Tensor out({c, oh, ow});
    auto argmax = std::make_shared<std::vector<int>>(static_cast<size_t>(c) * oh * ow);
    for (int ch = 0; ch < c; ++ch)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                float best = -std::numeric_limits<float>::infinity();
                int best_idx = 0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        int iy = 2 * oy + dy, ix = 2 * ox + dx;
                        float v = in.at3(ch, iy, ix);
                        if (v > best) {
                            best = v;
                            best_idx = (ch * h + iy) * w + ix;
                        }
                    }
                out.at3(ch, oy, ox) = best;
                (*argmax)[(static_cast<size_t>(ch) * oh + oy) * ow + ox] = best_idx;
            }
    Graph* g = this;
    auto backward = [g, x, argmax]() {
        const Tensor& go = g->nodes_[g->current_].grad;
        Tensor& gx = g->nodes_[x].grad;
        for (size_t i = 0; i < argmax->size(); ++i) gx.data[(*argmax)[i]] += go.data[i];
    };
    return emplace(std::move(out), std::move(backward));
}

Graph::NodeId Graph::dense(NodeId x, NodeId weight, NodeId bias) {
    check_id(x);
    check_id(weight);
    check_id(bias);
    const Tensor& in = nodes_[x].value;
    const Tensor& w = nodes_[weight].value;
    const Tensor& b = nodes_[bias].value;
    if (in.rank() != 1 || w.rank() != 2 || b.rank() != 1)
        throw std::runtime_error("dense: expected input [N], weight [M,N], bias [M]");
    const int n = in.dim(0), m = w.dim(0);
    if (w.dim(1) != n || b.dim(0) != m) throw std::runtime_error("dense: shape mismatch");
    Tensor out({m});
    for (int i = 0; i < m; ++i) {
        double acc = b.data[i];
        const float* wr = w.data.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) acc += static_cast<double>(wr[j]) * in.data[j];
        out.data[i] = static_cast<float>(acc);
    }
    Graph* g = this;
    auto backward = [g, x, weight, bias, n, m]() {
        const Tensor& go = g->nodes_[g->current_].grad;
        const Tensor& in = g->nodes_[x].value;
        const Tensor& w = g->nodes_[weight].value;
        Tensor& gx = g->nodes_[x].grad;
        Tensor& gw = g->nodes_[weight].grad;
        Tensor& gb = g->nodes_[bias].grad;
        for (int i = 0; i < m; ++i) {
            const double gov = go.data[i];
            gb.data[i] += static_cast<float>(gov);
            const float* wr = w.data.data() + static_cast<size_t>(i) * n;
            float* gwr = gw.data.data() + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) {
                gwr[j] += static_cast<float>(gov * in.data[j]);
                gx.data[j] += static_cast<float>(gov * wr[j]);
            }
        }
    };
    return emplace(std::move(out), std::move(backward));
}

Graph::NodeId Graph::global_avg_pool(NodeId x) {
    check_id(x);
    const Tensor& in = nodes_[x].value;
    if (in.rank() != 3) throw std::runtime_error("global_avg_pool: expected [C,H,W]");
    const int c = in.dim(0), hw = in.dim(1) * in.dim(2);
    Tensor out({c});
    for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        const float* plane = in.data.data() + static_cast<size_t>(ch) * hw;
        for (int i = 0; i < hw; ++i) acc += plane[i];
        out.data[ch] = static_cast<float>(acc / hw);
    }
    Graph* g = this;
    auto backward = [g, x, c, hw]() {
        const Tensor& go = g->nodes_[g->current_].grad;
        Tensor& gx = g->nodes_[x].grad;
        for (int ch = 0; ch < c; ++ch) {
            const float gv = static_cast<float>(go.data[ch] / hw);
            float* plane = gx.data.data() + static_cast<size_t>(ch) * hw;
            for (int i = 0; i < hw; ++i) plane[i] += gv;
        }
    };
    return emplace(std::move(out), std::move(backward));
}

Graph::NodeId Graph::upsample2(NodeId x) {
    check_id(x);
    const Tensor& in = nodes_[x].value;
    if (in.rank() != 3) throw std::runtime_error("upsample2: expected [C,H,W]");
    const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
    Tensor out({c, 2 * h, 2 * w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < 2 * h; ++y)
            for (int xx = 0; xx < 2 * w; ++xx)
                out.at3(ch, y, xx) = in.at3(ch, y / 2, xx / 2);
    Graph* g = this;
    auto backward = [g, x, c, h, w]() {
        const Tensor& go = g->nodes_[g->current_].grad;
        Tensor& gx = g->nodes_[x].grad;
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < 2 * h; ++y)
                for (int xx = 0; xx < 2 * w; ++xx)
                    gx.at3(ch, y / 2, xx / 2) += go.at3(ch, y, xx);
    };
    return emplace(std::move(out), std::move(backward));
}

Graph::NodeId Graph::concat_channels(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    if (ta.rank() != 3 || tb.rank() != 3 || ta.dim(1) != tb.dim(1) || ta.dim(2) != tb.dim(2))
        throw std::runtime_error("concat_channels: spatial shape mismatch");
    Tensor out({ta.dim(0) + tb.dim(0), ta.dim(1), ta.dim(2)});
    std::copy(ta.data.begin(), ta.data.end(), out.data.begin());
    std::copy(tb.data.begin(), tb.data.end(), out.data.begin() + ta.data.size());
    Graph* g = this;
    const size_t na = ta.data.size();
    auto backward = [g, a, b, na]() {
        const Tensor& go = g->nodes_[g->current_].grad;
        Tensor& ga = g->nodes_[a].grad;
        Tensor& gb = g->nodes_[b].grad;
        for (size_t i = 0; i < na; ++i) ga.data[i] += go.data[i];
        for (size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += go.data[na + i];
    };
    return emplace(std::move(out), std::move(backward));
}

Graph::NodeId Graph::softmax_ce_loss(NodeId logits, std::vector<int> labels) {
    check_id(logits);
    const Tensor& in = nodes_[logits].value;
    int nc, npix;
    if (in.rank() == 3) {
        nc = in.dim(0);
        npix = in.dim(1) * in.dim(2);
    } else if (in.rank() == 1) {
        nc = in.dim(0);
        npix = 1;
    } else {
        throw std::runtime_error("softmax_ce_loss: expected [C,H,W] or [C]");
    }
    if (static_cast<int>(labels.size()) != npix)
        throw std::runtime_error("softmax_ce_loss: label count mismatch");
    for (int l : labels)
        if (l < 0 || l >= nc) throw std::runtime_error("softmax_ce_loss: label out of range");

    auto probs = std::make_shared<std::vector<float>>(in.data.size());
    double loss = 0.0;
    for (int p = 0; p < npix; ++p) {
        double mx = -1e300;
        for (int c = 0; c < nc; ++c) mx = std::max(mx, static_cast<double>(in.data[static_cast<size_t>(c) * npix + p]));
        double z = 0.0;
        for (int c = 0; c < nc; ++c)
            z += std::exp(static_cast<double>(in.data[static_cast<size_t>(c) * npix + p]) - mx);
        for (int c = 0; c < nc; ++c) {
            double pr = std::exp(static_cast<double>(in.data[static_cast<size_t>(c) * npix + p]) - mx) / z;
            (*probs)[static_cast<size_t>(c) * npix + p] = static_cast<float>(pr);
        }
        loss -= std::log(std::max(
            static_cast<double>((*probs)[static_cast<size_t>(labels[p]) * npix + p]), 1e-30));
    }
    Tensor out({1});
    out.data[0] = static_cast<float>(loss / npix);
    Graph* g = this;
    auto lbl = std::make_shared<std::vector<int>>(std::move(labels));
    auto backward = [g, logits, probs, lbl, nc, npix]() {
        const float go = g->nodes_[g->current_].grad.data[0];
        Tensor& gx = g->nodes_[logits].grad;
        for (int p = 0; p < npix; ++p)
            for (int c = 0; c < nc; ++c) {
                float v = (*probs)[static_cast<size_t>(c) * npix + p];
                if (c == (*lbl)[p]) v -= 1.0f;
                gx.data[static_cast<size_t>(c) * npix + p] += go * v / npix;
            }
    };
    return emplace(std::move(out), std::move(backward));
}

Graph::NodeId Graph::add(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    if (!ta.same_shape(tb)) throw std::runtime_error("add: shape mismatch");
    Tensor out(ta.shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = ta.data[i] + tb.data[i];
    Graph* g = this;
    auto backward = [g, a, b]() {
        const Tensor& go = g->nodes_[g->current_].grad;
        Tensor& ga = g->nodes_[a].grad;
        Tensor& gb = g->nodes_[b].grad;
        for (size_t i = 0; i < go.data.size(); ++i) {
            ga.data[i] += go.data[i];
            gb.data[i] += go.data[i];
        }
    };
    return emplace(std::move(out), std::move(backward));
}

Graph::NodeId Graph::sub(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    if (!ta.same_shape(tb)) throw std::runtime_error("sub: shape mismatch");
    Tensor out(ta.shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = ta.data[i] - tb.data[i];
    Graph* g = this;
    auto backward = [g, a, b]() {
        const Tensor& go = g->nodes_[g->current_].grad;
        Tensor& ga = g->nodes_[a].grad;
        Tensor& gb = g->nodes_[b].grad;
        for (size_t i = 0; i < go.data.size(); ++i) {
            ga.data[i] += go.data[i];
            gb.data[i] -= go.data[i];
        }
    };
    return emplace(std::move(out), std::move(backward));
}

Graph::NodeId Graph::scale(NodeId a, double s) {
    check_id(a);
    const Tensor& ta = nodes_[a].value;
    Tensor out(ta.shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = static_cast<float>(ta.data[i] * s);
    Graph* g = this;
    auto backward = [g, a, s]() {
        const Tensor& go = g->nodes_[g->current_].grad;
        Tensor& ga = g->nodes_[a].grad;
        for (size_t i = 0; i < go.data.size(); ++i) ga.data[i] += static_cast<float>(go.data[i] * s);
    };
    return emplace(std::move(out), std::move(backward));
}

Graph::NodeId Graph::sub_const(NodeId a, double c) {
    check_id(a);
    const Tensor& ta = nodes_[a].value;
    Tensor out(ta.shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = static_cast<float>(ta.data[i] - c);
    Graph* g = this;
    auto backward = [g, a]() {
        const Tensor& go = g->nodes_[g->current_].grad;
        Tensor& ga = g->nodes_[a].grad;
        for (size_t i = 0; i < go.data.size(); ++i) ga.data[i] += go.data[i];
    };
    return emplace(std::move(out), std::move(backward));
}

Graph::NodeId Graph::sum_sq(NodeId a) {
    check_id(a);
    const Tensor& ta = nodes_[a].value;
    double acc = 0.0;
    for (float v : ta.data) acc += static_cast<double>(v) * v;
    Tensor out({1});
    out.data[0] = static_cast<float>(acc);
    Graph* g = this;
    auto backward = [g, a]() {
        const float go = g->nodes_[g->current_].grad.data[0];
        const Tensor& ta = g->nodes_[a].value;
        Tensor& ga = g->nodes_[a].grad;
        for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += 2.0f * go * ta.data[i];
    };
    return emplace(std::move(out), std::move(backward));
}

Graph::NodeId Graph::l1(NodeId a) {
    check_id(a);
    const Tensor& ta = nodes_[a].value;
    double acc = 0.0;
    for (float v : ta.data) acc += std::abs(static_cast<double>(v));
    Tensor out({1});
    out.data[0] = static_cast<float>(acc);
    Graph* g = this;
    auto backward = [g, a]() {
        const float go = g->nodes_[g->current_].grad.data[0];
        const Tensor& ta = g->nodes_[a].value;
        Tensor& ga = g->nodes_[a].grad;
        for (size_t i = 0; i < ga.data.size(); ++i) {
            if (ta.data[i] > 0.0f)
                ga.data[i] += go;
            else if (ta.data[i] < 0.0f)
                ga.data[i] -= go;
        }
    };
    return emplace(std::move(out), std::move(backward));
}

void Graph::backward(NodeId loss) {
    check_id(loss);
    if (backward_done_) throw std::runtime_error("Graph: backward called twice");
    if (nodes_[loss].value.numel() != 1)
        throw std::runtime_error("Graph: backward requires a scalar loss");
    backward_done_ = true;
    nodes_[loss].grad.data[0] = 1.0f;
    for (NodeId id = loss; id >= 0; --id) {
        if (nodes_[id].backward_fn) {
            current_ = id;
            nodes_[id].backward_fn();
        }
    }
    // flush leaf gradients into bound parameters
    for (auto& n : nodes_) {
        if (!n.bound) continue;
        Param& p = *n.bound;
        if (!p.trainable) continue;
        for (size_t i = 0; i < p.grad.data.size(); ++i) p.grad.data[i] += n.grad.data[i];
        p.has_grad = true;
    }
}

void sgd_step(ParamStore& params, const LrSchedule& schedule, int step, double weight_decay) {
    const double lr = schedule.lr(step);
    for (auto& [name, p] : params) {
        if (!p.trainable) continue;
        if (!p.has_grad)
            throw std::runtime_error("sgd_step: missing gradient for trainable parameter " + name);
        const double wd = p.weight_decay_exempt ? 0.0 : 2.0 * weight_decay;
        for (size_t i = 0; i < p.value.data.size(); ++i)
            p.value.data[i] = static_cast<float>(
                p.value.data[i] - lr * (static_cast<double>(p.grad.data[i]) + wd * p.value.data[i]));
        if (!p.value.all_finite())
            throw std::runtime_error("sgd_step: non-finite parameter after update: " + name);
    }
}

Tensor softmax_channels(const Tensor& logits) {
    int nc, npix;
    if (logits.rank() == 3) {
        nc = logits.dim(0);
        npix = logits.dim(1) * logits.dim(2);
    } else if (logits.rank() == 1) {
        nc = logits.dim(0);
        npix = 1;
    } else {
        throw std::runtime_error("softmax_channels: expected [C,H,W] or [C]");
    }
    Tensor out(logits.shape);
    for (int p = 0; p < npix; ++p) {
        double mx = -1e300;
        for (int c = 0; c < nc; ++c)
            mx = std::max(mx, static_cast<double>(logits.data[static_cast<size_t>(c) * npix + p]));
        double z = 0.0;
        for (int c = 0; c < nc; ++c)
            z += std::exp(static_cast<double>(logits.data[static_cast<size_t>(c) * npix + p]) - mx);
        for (int c = 0; c < nc; ++c)
            out.data[static_cast<size_t>(c) * npix + p] = static_cast<float>(
                std::exp(static_cast<double>(logits.data[static_cast<size_t>(c) * npix + p]) - mx) / z);
    }
    return out;
}

}  // namespace geoseg
