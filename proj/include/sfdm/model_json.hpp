#pragma once

#include <array>
#include <string>
#include <string_view>

#include "json.hpp"
#include "sfdm/model.hpp"

namespace sfdm {

namespace detail {
struct ParamField {
    std::string_view key;
    double ModelParams::*member;
};

inline constexpr std::array<ParamField, 9> kModelParamFields{{
    {"lambda1", &ModelParams::lambda1},
    {"delta_lambda", &ModelParams::delta_lambda},
    {"w_plus", &ModelParams::w_plus},
    {"w_inhib", &ModelParams::w_inhib},
    {"beta", &ModelParams::beta},
    {"nu_c", &ModelParams::nu_c},
    {"b", &ModelParams::b},
    {"alpha", &ModelParams::alpha},
    {"nu_max", &ModelParams::nu_max},
}};
}  // namespace detail

inline bool is_model_param_key(std::string_view key) {
    for (const auto& f : detail::kModelParamFields)
        if (f.key == key) return true;
    return false;
}

inline nlohmann::json to_json(const ModelParams& p) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& f : detail::kModelParamFields) j[std::string(f.key)] = p.*(f.member);
    return j;
}

/// Reads a ModelParams document. Missing keys keep their defaults, unknown
/// keys and non-numeric values are rejected, and the result is validated.
inline ModelParams model_params_from_json(const nlohmann::json& j, ModelParams base = {}) {
    if (!j.is_object()) throw config_error("model parameters must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!is_model_param_key(key)) throw config_error("unknown model parameter '" + key + "'");
        if (!value.is_number()) throw config_error("model parameter '" + key + "' must be a number");
    }
    for (const auto& f : detail::kModelParamFields) {
        const auto it = j.find(std::string(f.key));
        if (it != j.end()) base.*(f.member) = it->get<double>();
    }
    base.validate();
    return base;
}

}  // namespace sfdm
