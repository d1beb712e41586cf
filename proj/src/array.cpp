#include "flowrl/array.hpp"

#include "flowrl/errors.hpp"

namespace flowrl::ad {

Array::Array(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    require(count(shape_) == data_.size(), "array: shape ", shape_str(shape_),
            " expects ", count(shape_), " values, got ", data_.size());
}

Array Array::from_vector(std::vector<double> v) {
    std::size_t n = v.size();
    return Array({n}, std::move(v));
}

std::size_t Array::count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
}

bool Array::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double Array::scalar_value() const {
    require(data_.size() == 1, "array: expected scalar, got shape ", shape_str(shape_));
    return data_[0];
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    out += "]";
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double squared_norm(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
}

}  // namespace flowrl::ad
