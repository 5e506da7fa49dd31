#include "geoseg/tensor.hpp"

#include <cmath>
#include <sstream>

namespace geoseg {

bool Tensor::all_finite() const {
    for (float v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

}  // namespace geoseg
