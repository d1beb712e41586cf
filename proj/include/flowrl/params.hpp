#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "flowrl/array.hpp"

namespace flowrl::ad {

/// Named trainable arrays with gradient accumulators of identical shape.
/// Parameter order is insertion order and is deterministic.
class ParamSet {
public:
    std::size_t add(std::string name, Array initial);

    bool has(std::string_view name) const { return index_.count(std::string(name)) > 0; }
    std::size_t index_of(std::string_view name) const;
    std::size_t count() const { return values_.size(); }

    const std::string& name(std::size_t i) const { return names_[i]; }
    Array& value(std::size_t i) { return values_[i]; }
    const Array& value(std::size_t i) const { return values_[i]; }
    Array& grad(std::size_t i) { return grads_[i]; }
    const Array& grad(std::size_t i) const { return grads_[i]; }

    Array& value(std::string_view name) { return values_[index_of(name)]; }
    const Array& value(std::string_view name) const { return values_[index_of(name)]; }
    Array& grad(std::string_view name) { return grads_[index_of(name)]; }

    void zero_grad();

    /// Deep copy; gradients come back zeroed.
    ParamSet clone() const;

    /// Total number of scalar parameters.
    std::size_t scalar_count() const;

private:
    std::vector<std::string> names_;
    std::vector<Array> values_;
    std::vector<Array> grads_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace flowrl::ad
