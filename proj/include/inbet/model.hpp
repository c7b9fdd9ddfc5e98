#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "inbet/autodiff.hpp"
#include "inbet/tensor.hpp"

namespace inbet {

struct ModelConfig {
  int feature_dim = 128;  // C
  int layers = 4;         // attention layer pairs N
  int spectral_dim = 64;
  int sinkhorn_iters = 100;
  double match_threshold = 0.2;  // theta
  double visibility_threshold = 0.5;
  // Ablation switches: a disabled component contributes a zero embedding.
  bool use_image = true;
  bool use_position = true;
  bool use_topology = true;

  // Throws inbet::Error on an invalid combination.
  void validate() const;
};

// y = x * weight + bias, weight is (in x out), bias is (1 x out).
template <class T>
struct AffineT {
  T weight;
  T bias;
};

// Query, key and value maps of one attention layer.
template <class T>
using QkvT = std::array<AffineT<T>, 3>;

// All learnable tensors of the pipeline. Instantiated with Mat for storage and
// with ad::Var when bound to a tape; visit() fixes one canonical order.
template <class T>
struct WeightsT {
  // Image encoder: three 3x3 convolutions stored as (9*in x out), row = tap*in + channel.
  AffineT<T> conv1, conv2, conv3;
  AffineT<T> pos1, pos2;    // 2 -> C -> C
  AffineT<T> topo1, topo2;  // S -> C -> C
  std::vector<QkvT<T>> self_attn;
  std::vector<QkvT<T>> cross_attn;
  T dustbin;                // 1 x 1 transport dustbin score
  AffineT<T> vis1, vis2, vis3;  // C -> C -> C/2 -> 1

  template <class U, class F>
  static void visit_pair(AffineT<U>& a, const std::string& name, F& f) {
    f(name + ".weight", a.weight);
    f(name + ".bias", a.bias);
  }

  template <class F>
  void visit(F&& f) {
    visit_pair(conv1, "embed.conv1", f);
    visit_pair(conv2, "embed.conv2", f);
    visit_pair(conv3, "embed.conv3", f);
    visit_pair(pos1, "embed.pos1", f);
    visit_pair(pos2, "embed.pos2", f);
    visit_pair(topo1, "embed.topo1", f);
    visit_pair(topo2, "embed.topo2", f);
    static constexpr const char* kRoles[3] = {"q", "k", "v"};
    for (std::size_t l = 0; l < self_attn.size(); ++l)
      for (int r = 0; r < 3; ++r)
        visit_pair(self_attn[l][r], "attn." + std::to_string(l) + ".self." + kRoles[r], f);
    for (std::size_t l = 0; l < cross_attn.size(); ++l)
      for (int r = 0; r < 3; ++r)
        visit_pair(cross_attn[l][r], "attn." + std::to_string(l) + ".cross." + kRoles[r], f);
    f(std::string("ot.dustbin"), dustbin);
    visit_pair(vis1, "vis.fc1", f);
    visit_pair(vis2, "vis.fc2", f);
    visit_pair(vis3, "vis.fc3", f);
  }

  template <class F>
  void visit(F&& f) const {
    const_cast<WeightsT*>(this)->visit(
        [&f](const std::string& name, T& t) { f(name, static_cast<const T&>(t)); });
  }
};

using Weights = WeightsT<Mat>;
using WeightVars = WeightsT<ad::Var>;
using Affine = AffineT<Mat>;
using Qkv = QkvT<Mat>;

struct ModelParams {
  ModelConfig config;
  Weights weights;
};

// Shapes follow `config`; entries uniform in +-sqrt(1/fan_in); dustbin = 1.
ModelParams init_model(const ModelConfig& config, std::uint64_t seed);

// All-zero weights of the right shapes (dustbin included).
ModelParams zero_model(const ModelConfig& config);

// Registers every tensor on the tape, as parameters when `trainable`.
WeightVars bind(ad::Tape& tape, const Weights& weights, bool trainable);

std::size_t parameter_count(const Weights& weights);

// x * weight + bias for an n x in input.
Mat apply_affine(const Mat& x, const Affine& a);

// Tape version.
ad::Var apply_affine(ad::Tape& tape, ad::Var x, const AffineT<ad::Var>& a);

}  // namespace inbet
