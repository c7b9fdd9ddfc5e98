#pragma once

#include "json.hpp"

#include "inbet/model.hpp"
#include "inbet/train.hpp"

namespace inbet {

// Unknown keys are rejected so that typos in config files surface as errors.
nlohmann::json to_json(const ModelConfig& config);
void update_from_json(ModelConfig& config, const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& config);
void update_from_json(TrainConfig& config, const nlohmann::json& j);

}  // namespace inbet
