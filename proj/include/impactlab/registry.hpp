// SPDX-License-Identifier: MIT
//
// Named model components so experiments are reproducible from config alone.
#pragma once

#include "impactlab/market_model.hpp"

#include "json.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace impactlab::registry {

struct ParamSpec {
    std::string name;
    std::optional<double> default_value;  // required when empty
    std::string description;
};

template <typename T>
struct Entry {
    std::string name;
    std::string description;
    std::vector<ParamSpec> params;
    std::function<T(const std::vector<double>&)> make;
};

[[nodiscard]] const std::vector<Entry<ImpactFunction>>& impact_functions();
[[nodiscard]] const std::vector<Entry<Coefficient>>& coefficient_families();
[[nodiscard]] const std::vector<Entry<Claim>>& claims();

/// Resolves {"name": ..., "params": {...}}; unknown names or keys throw InvalidArgument.
[[nodiscard]] ImpactFunction make_impact(const nlohmann::json& spec);
[[nodiscard]] Coefficient make_coefficient(const nlohmann::json& spec);
[[nodiscard]] Claim make_claim(const nlohmann::json& spec);

/// Human-readable listing of every registered component and its parameters.
[[nodiscard]] std::string listing();

}  // namespace impactlab::registry
