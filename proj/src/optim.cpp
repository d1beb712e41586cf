#include "flowrl/optim.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "flowrl/errors.hpp"

namespace flowrl::ad {

std::string opt_mode_name(OptMode mode) {
    return mode == OptMode::kSgd ? "sgd" : "adam";
}

OptMode opt_mode_from_name(const std::string& name) {
    if (name == "sgd") return OptMode::kSgd;
    if (name == "adam") return OptMode::kAdam;
    fail("optimizer: unknown mode '", name, "'");
}

void Optimizer::ensure_state(const ParamSet& params) {
    if (m_.size() == params.count()) return;
    require(m_.empty(), "optimizer: parameter count changed under existing state");
    m_.reserve(params.count());
    v_.reserve(params.count());
    for (std::size_t i = 0; i < params.count(); ++i) {
        m_.push_back(Array(params.value(i).shape()));
        v_.push_back(Array(params.value(i).shape()));
    }
}

void Optimizer::step(ParamSet& params) {
    for (std::size_t i = 0; i < params.count(); ++i) {
        require(params.grad(i).all_finite(), "optimizer: non-finite gradient in parameter '",
                params.name(i), "'");
    }

    if (cfg_.mode == OptMode::kSgd) {
        ++step_;
        for (std::size_t i = 0; i < params.count(); ++i) {
            Array& p = params.value(i);
            const Array& g = params.grad(i);
            for (std::size_t j = 0; j < p.size(); ++j) p[j] -= cfg_.lr * g[j];
        }
        return;
    }

    ensure_state(params);
    ++step_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.count(); ++i) {
        Array& p = params.value(i);
        const Array& g = params.grad(i);
        Array& m = m_[i];
        Array& v = v_[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
            double mhat = m[j] / bc1;
            double vhat = v[j] / bc2;
            p[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

nlohmann::json Optimizer::state_to_json() const {
    nlohmann::json j;
    j["mode"] = opt_mode_name(cfg_.mode);
    j["lr"] = cfg_.lr;
    j["beta1"] = cfg_.beta1;
    j["beta2"] = cfg_.beta2;
    j["eps"] = cfg_.eps;
    j["step"] = step_;
    nlohmann::json moments = nlohmann::json::array();
    for (std::size_t i = 0; i < m_.size(); ++i) {
        moments.push_back({{"m", m_[i].raw()}, {"v", v_[i].raw()}});
    }
    j["moments"] = moments;
    return j;
}

void Optimizer::state_from_json(const nlohmann::json& j, const ParamSet& params) {
    cfg_.mode = opt_mode_from_name(j.at("mode").get<std::string>());
    cfg_.lr = j.at("lr").get<double>();
    cfg_.beta1 = j.at("beta1").get<double>();
    cfg_.beta2 = j.at("beta2").get<double>();
    cfg_.eps = j.at("eps").get<double>();
    step_ = j.at("step").get<std::size_t>();
    const auto& moments = j.at("moments");
    m_.clear();
    v_.clear();
    if (moments.empty()) return;
    require(moments.size() == params.count(), "optimizer: state has ", moments.size(),
            " moment entries for ", params.count(), " parameters");
    for (std::size_t i = 0; i < params.count(); ++i) {
        auto mv = moments[i].at("m").get<std::vector<double>>();
        auto vv = moments[i].at("v").get<std::vector<double>>();
        require(mv.size() == params.value(i).size(), "optimizer: moment size mismatch for '",
                params.name(i), "'");
        m_.push_back(Array(params.value(i).shape(), std::move(mv)));
        v_.push_back(Array(params.value(i).shape(), std::move(vv)));
    }
}

}  // namespace flowrl::ad
