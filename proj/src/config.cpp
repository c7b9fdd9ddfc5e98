#include "inbet/config.hpp"

namespace inbet {

namespace {

template <class T>
void take(const nlohmann::json& j, const char* key, T& out, const std::string& scope) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(scope + "." + key + ": wrong type");
  }
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                    const std::string& scope) {
  if (!j.is_object()) throw Error(scope + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw Error(scope + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace

nlohmann::json to_json(const ModelConfig& c) {
  return {{"feature_dim", c.feature_dim},
          {"layers", c.layers},
          {"spectral_dim", c.spectral_dim},
          {"sinkhorn_iters", c.sinkhorn_iters},
          {"match_threshold", c.match_threshold},
          {"visibility_threshold", c.visibility_threshold},
          {"use_image", c.use_image},
          {"use_position", c.use_position},
          {"use_topology", c.use_topology}};
}

void update_from_json(ModelConfig& c, const nlohmann::json& j) {
  reject_unknown(j,
                 {"feature_dim", "layers", "spectral_dim", "sinkhorn_iters", "match_threshold",
                  "visibility_threshold", "use_image", "use_position", "use_topology"},
                 "model");
  take(j, "feature_dim", c.feature_dim, "model");
  take(j, "layers", c.layers, "model");
  take(j, "spectral_dim", c.spectral_dim, "model");
  take(j, "sinkhorn_iters", c.sinkhorn_iters, "model");
  take(j, "match_threshold", c.match_threshold, "model");
  take(j, "visibility_threshold", c.visibility_threshold, "model");
  take(j, "use_image", c.use_image, "model");
  take(j, "use_position", c.use_position, "model");
  take(j, "use_topology", c.use_topology, "model");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"epochs_total", c.epochs_total},
          {"epochs_phase1", c.epochs_phase1},
          {"accumulation_steps", c.accumulation_steps},
          {"bias_weight", c.bias_weight},
          {"gap_min", c.gap_min},
          {"gap_max", c.gap_max},
          {"seed", c.seed},
          {"max_samples_per_epoch", c.max_samples_per_epoch},
          {"max_steps", c.max_steps}};
}

void update_from_json(TrainConfig& c, const nlohmann::json& j) {
  reject_unknown(j,
                 {"learning_rate", "epochs_total", "epochs_phase1", "accumulation_steps",
                  "bias_weight", "gap_min", "gap_max", "seed", "max_samples_per_epoch",
                  "max_steps"},
                 "train");
  take(j, "learning_rate", c.learning_rate, "train");
  take(j, "epochs_total", c.epochs_total, "train");
  take(j, "epochs_phase1", c.epochs_phase1, "train");
  take(j, "accumulation_steps", c.accumulation_steps, "train");
  take(j, "bias_weight", c.bias_weight, "train");
  take(j, "gap_min", c.gap_min, "train");
  take(j, "gap_max", c.gap_max, "train");
  take(j, "seed", c.seed, "train");
  take(j, "max_samples_per_epoch", c.max_samples_per_epoch, "train");
  take(j, "max_steps", c.max_steps, "train");
}

}  // namespace inbet
