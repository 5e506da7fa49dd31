#pragma once

// Central-difference gradient checking against the reverse-mode tape.

#include <algorithm>
#include <cmath>
#include <functional>

#include <geoseg/autodiff.hpp>

namespace testutil {

using BuildFn = std::function<geoseg::Graph::NodeId(geoseg::Graph&, geoseg::ParamStore&)>;

// `build` must construct a scalar loss, reading every checked tensor through
// g.param(store, name). Returns the worst relative mismatch between the tape
// gradient and a central finite difference over all trainable elements.
inline double max_grad_mismatch(geoseg::ParamStore& store, const BuildFn& build,
                                double eps = 1e-2) {
    using geoseg::Graph;
    auto eval = [&]() {
        Graph g;
        return g.scalar(build(g, store));
    };
    store.zero_grads();
    {
        Graph g;
        g.backward(build(g, store));
    }
    double worst = 0.0;
    for (auto& [name, p] : store) {
        if (!p.trainable) continue;
        for (size_t i = 0; i < p.value.data.size(); ++i) {
            float orig = p.value.data[i];
            p.value.data[i] = static_cast<float>(orig + eps);
            double lp = eval();
            p.value.data[i] = static_cast<float>(orig - eps);
            double lm = eval();
            p.value.data[i] = orig;
            double fd = (lp - lm) / (2.0 * eps);
            double an = p.grad.data[i];
            double denom = std::max({std::abs(fd), std::abs(an), 1e-2});
            worst = std::max(worst, std::abs(fd - an) / denom);
        }
    }
    return worst;
}

}  // namespace testutil
