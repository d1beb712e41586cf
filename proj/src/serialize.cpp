#include "flowrl/serialize.hpp"

#include "flowrl/errors.hpp"

namespace flowrl::ad {

nlohmann::ordered_json paramset_to_json(const ParamSet& params) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < params.count(); ++i) {
        const Array& v = params.value(i);
        nlohmann::ordered_json entry;
        entry["shape"] = v.shape();
        entry["data"] = v.raw();
        j[params.name(i)] = std::move(entry);
    }
    return j;
}

ParamSet paramset_from_json(const nlohmann::json& j) {
    ParamSet params;
    for (auto it = j.begin(); it != j.end(); ++it) {
        auto shape = it.value().at("shape").get<std::vector<std::size_t>>();
        auto data = it.value().at("data").get<std::vector<double>>();
        Array arr(std::move(shape), std::move(data));
        require(arr.all_finite(), "params: non-finite values in '", it.key(), "'");
        params.add(it.key(), std::move(arr));
    }
    return params;
}

void copy_param_values(const ParamSet& src, ParamSet& dst) {
    require(src.count() == dst.count(), "params: cannot restore ", src.count(),
            " parameters into a set of ", dst.count());
    for (std::size_t i = 0; i < dst.count(); ++i) {
        std::size_t si = src.index_of(dst.name(i));
        require(src.value(si).same_shape(dst.value(i)), "params: shape mismatch restoring '",
                dst.name(i), "'");
        dst.value(i) = src.value(si);
    }
}

}  // namespace flowrl::ad
