#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace flowrl::ad {

/// Dense row-major array of 64-bit floats. Rank 0 is represented as shape {1}.
class Array {
public:
    Array() = default;

    explicit Array(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(count(shape_), 0.0) {}

    Array(std::vector<std::size_t> shape, std::vector<double> data);

    static Array scalar(double v) { return Array({1}, {v}); }
    static Array from_vector(std::vector<double> v);
    static Array zeros_like(const Array& other) { return Array(other.shape_); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t rank() const { return shape_.size(); }
    std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
    std::size_t cols() const { return shape_.size() > 1 ? shape_[1] : 1; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // rank-2 access, row-major
    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    bool same_shape(const Array& other) const { return shape_ == other.shape_; }
    bool is_scalar() const { return data_.size() == 1; }
    bool all_finite() const;

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    double scalar_value() const;

private:
    static std::size_t count(const std::vector<std::size_t>& shape);

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::string shape_str(const std::vector<std::size_t>& shape);
inline std::string shape_str(const Array& a) { return shape_str(a.shape()); }

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

}  // namespace flowrl::ad
