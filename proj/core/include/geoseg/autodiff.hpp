#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "geoseg/tensor.hpp"

namespace geoseg {

struct Param {
    Tensor value;
    Tensor grad;
    bool trainable = true;
    bool weight_decay_exempt = false;
    bool has_grad = false;
};

// Named parameter container shared by network definitions and the optimizer.
class ParamStore {
  public:
    Param& create(const std::string& name, Tensor init, bool trainable = true,
                  bool exempt = false);
    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;
    bool contains(const std::string& name) const { return params_.count(name) > 0; }
    void zero_grads();

    // deterministic (name-ordered) iteration
    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }
    size_t size() const { return params_.size(); }

  private:
    std::map<std::string, Param> params_;
};

struct LrSchedule {
    double initial_lr = 0.01;
    double decay_factor = 2.0;
    int decay_every = 3;
    std::vector<int> milestones;  // when non-empty, overrides decay_every

    double lr(int step) const;
};

// Reverse-mode tape over dense tensors. One tape per forward pass; backward
// may be called exactly once. Confined to a single thread.
class Graph {
  public:
    using NodeId = int;

    NodeId input(Tensor t);
    NodeId param(ParamStore& store, const std::string& name);

    // layers; SAME zero padding for conv2d, nearest-neighbor for upsample2
    NodeId conv2d(NodeId in, NodeId weight, NodeId bias, int stride);
    NodeId relu(NodeId x);
    NodeId maxpool2(NodeId x);
    NodeId dense(NodeId x, NodeId weight, NodeId bias);
    NodeId global_avg_pool(NodeId x);
    NodeId upsample2(NodeId x);
    NodeId concat_channels(NodeId a, NodeId b);
    // logits [C,H,W] with labels of length H*W, or [C] with one label;
    // mean cross entropy over pixels
    NodeId softmax_ce_loss(NodeId logits, std::vector<int> labels);

    // elementwise / reduction helpers
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId scale(NodeId a, double s);
    NodeId sub_const(NodeId a, double c);
    NodeId sum_sq(NodeId a);  // scalar
    NodeId l1(NodeId a);      // scalar, sum of absolute values

    void backward(NodeId loss);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    const Tensor& grad(NodeId id) const { return nodes_[id].grad; }
    double scalar(NodeId id) const;

  private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void()> backward_fn;  // reads own grad, accumulates into parents
        Param* bound = nullptr;
    };
    std::vector<Node> nodes_;
    NodeId current_ = -1;  // node whose backward_fn is running
    bool backward_done_ = false;

    NodeId emplace(Tensor value, std::function<void()> backward_fn, Param* bound = nullptr);
    void check_id(NodeId id) const;
};

// p <- p - lr(step) * (grad + 2*weight_decay*p) for non-exempt trainable
// parameters; exempt ones skip the decay term. Throws if a trainable
// parameter has no gradient.
void sgd_step(ParamStore& params, const LrSchedule& schedule, int step, double weight_decay);

// Pure softmax over the channel axis of [C,H,W] (or over a [C] vector).
Tensor softmax_channels(const Tensor& logits);

void save_checkpoint(const ParamStore& params, const std::string& path);
ParamStore load_checkpoint(const std::string& path);

}  // namespace geoseg
