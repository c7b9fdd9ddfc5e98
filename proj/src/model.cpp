#include "inbet/model.hpp"

#include <cmath>
#include <random>

namespace inbet {

void ModelConfig::validate() const {
  if (feature_dim < 4 || feature_dim % 4 != 0)
    throw Error("model.feature_dim: must be a positive multiple of 4, got " +
                std::to_string(feature_dim));
  if (layers < 0) throw Error("model.layers: must be >= 0");
  if (spectral_dim < 1) throw Error("model.spectral_dim: must be >= 1");
  if (sinkhorn_iters < 1) throw Error("model.sinkhorn_iters: must be >= 1");
  if (!(match_threshold >= 0.0 && match_threshold < 1.0))
    throw Error("model.match_threshold: must be in [0, 1)");
  if (!(visibility_threshold > 0.0 && visibility_threshold < 1.0))
    throw Error("model.visibility_threshold: must be in (0, 1)");
}

namespace {

Affine shaped(std::size_t in, std::size_t out) { return {Mat(in, out), Mat(1, out)}; }

Weights shaped_weights(const ModelConfig& cfg) {
  const std::size_t c = cfg.feature_dim;
  Weights w;
  w.conv1 = shaped(9, c / 4);
  w.conv2 = shaped(9 * (c / 4), c / 2);
  w.conv3 = shaped(9 * (c / 2), c);
  w.pos1 = shaped(2, c);
  w.pos2 = shaped(c, c);
  w.topo1 = shaped(cfg.spectral_dim, c);
  w.topo2 = shaped(c, c);
  w.self_attn.resize(cfg.layers);
  w.cross_attn.resize(cfg.layers);
  for (int l = 0; l < cfg.layers; ++l)
    for (int r = 0; r < 3; ++r) {
      w.self_attn[l][r] = shaped(c, c);
      w.cross_attn[l][r] = shaped(c, c);
    }
  w.dustbin = Mat(1, 1, 1.0);
  w.vis1 = shaped(c, c);
  w.vis2 = shaped(c, c / 2);
  w.vis3 = shaped(c / 2, 1);
  return w;
}

}  // namespace

ModelParams zero_model(const ModelConfig& config) {
  config.validate();
  ModelParams p{config, shaped_weights(config)};
  p.weights.dustbin[0] = 0.0;
  return p;
}

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p{config, shaped_weights(config)};
  std::mt19937_64 rng(seed);
  // Biases share their weight's fan-in; visit order puts weight before bias.
  double bound = 1.0;
  p.weights.visit([&](const std::string& name, Mat& t) {
    if (name == "ot.dustbin") return;
    if (name.ends_with(".weight")) bound = std::sqrt(1.0 / static_cast<double>(t.rows()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.storage()) v = static_cast<double>(static_cast<float>(dist(rng)));
  });
  return p;
}

WeightVars bind(ad::Tape& tape, const Weights& weights, bool trainable) {
  WeightVars vars;
  vars.self_attn.resize(weights.self_attn.size());
  vars.cross_attn.resize(weights.cross_attn.size());
  std::vector<ad::Var> bound;
  weights.visit([&](const std::string&, const Mat& t) {
    bound.push_back(trainable ? tape.parameter(t) : tape.constant(t));
  });
  std::size_t next = 0;
  vars.visit([&](const std::string&, ad::Var& v) { v = bound[next++]; });
  return vars;
}

std::size_t parameter_count(const Weights& weights) {
  std::size_t n = 0;
  weights.visit([&](const std::string&, const Mat& t) { n += t.size(); });
  return n;
}

Mat apply_affine(const Mat& x, const Affine& a) {
  Mat y = matmul(x, a.weight);
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) += a.bias[c];
  return y;
}

ad::Var apply_affine(ad::Tape& tape, ad::Var x, const AffineT<ad::Var>& a) {
  return tape.add_row(tape.matmul(x, a.weight), a.bias);
}

}  // namespace inbet
