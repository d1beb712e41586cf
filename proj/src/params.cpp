#include "flowrl/params.hpp"

#include "flowrl/errors.hpp"

namespace flowrl::ad {

std::size_t ParamSet::add(std::string name, Array initial) {
    require(!has(name), "params: duplicate parameter '", name, "'");
    std::size_t idx = values_.size();
    grads_.push_back(Array(initial.shape()));
    values_.push_back(std::move(initial));
    index_.emplace(name, idx);
    names_.push_back(std::move(name));
    return idx;
}

std::size_t ParamSet::index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    require(it != index_.end(), "params: unknown parameter '", name, "'");
    return it->second;
}

void ParamSet::zero_grad() {
    for (auto& g : grads_) g.fill(0.0);
}

ParamSet ParamSet::clone() const {
    ParamSet out;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        out.add(names_[i], values_[i]);
    }
    return out;
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
}

}  // namespace flowrl::ad
