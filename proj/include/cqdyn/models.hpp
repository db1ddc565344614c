// models.hpp — named built-in scenarios for the CLI and the test suites.

#pragma once

#include "cqdyn/coupling.hpp"
#include "cqdyn/evolution.hpp"
#include "cqdyn/toy_model.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cqdyn::models {

struct BuiltModel {
    std::string name;
    std::shared_ptr<const phase::PhaseSpaceGrid> grid;
    std::shared_ptr<gen::GridGenerator> generator;
    state::HybridStateGrid initial;
    std::vector<evo::ObservableSum> observables;
    std::optional<toy::ToyModelParams> toy_params;
};

std::vector<std::string> builtin_names();

toy::ToyModelParams toy_params_from_json(const nlohmann::json& params);

// model_cfg: {"name": <builtin>, "params": {...}}; throws std::invalid_argument
// on unknown names or malformed parameters.
BuiltModel build_model(const nlohmann::json& model_cfg, unsigned seed = 0);

// Seeded random valid coupling spec on a 1-D phase space (for conservation
// property checks). All of lambda(z), W(z|z'), lambda + W are PSD by
// construction.
BuiltModel make_random_valid_model(int cells, unsigned seed, double rate_scale = 0.5);

}  // namespace cqdyn::models
