#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace geoseg {

// Dense float32 tensor, row-major.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(numel_of(shape)), 0.0f);
    }
    Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != static_cast<size_t>(numel_of(shape)))
            throw std::invalid_argument("Tensor: data length does not match shape");
    }

    static int64_t numel_of(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
            n *= d;
        }
        return n;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int dim(int i) const { return shape.at(static_cast<size_t>(i)); }
    int rank() const { return static_cast<int>(shape.size()); }

    float& operator[](size_t i) { return data[i]; }
    float operator[](size_t i) const { return data[i]; }

    // [C,H,W] indexing
    float& at3(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    float at3(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const;
    std::string shape_str() const;
};

}  // namespace geoseg
