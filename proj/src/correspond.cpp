#include "inbet/correspond.hpp"

#include <cmath>

namespace inbet {

namespace net {

ad::Var attention(ad::Tape& tape, ad::Var fa, ad::Var fb, const QkvT<ad::Var>& layer) {
  const double c = static_cast<double>(tape.value(fa).cols());
  ad::Var q = apply_affine(tape, fa, layer[0]);
  ad::Var k = apply_affine(tape, fb, layer[1]);
  ad::Var v = apply_affine(tape, fb, layer[2]);
  ad::Var weights = tape.row_softmax(tape.scale(tape.matmul_nt(q, k), 1.0 / std::sqrt(c)));
  return tape.add(fa, tape.matmul(weights, v));
}

std::pair<ad::Var, ad::Var> aggregate(ad::Tape& tape, ad::Var f0, ad::Var f1,
                                      const WeightVars& w) {
  if (w.self_attn.size() != w.cross_attn.size())
    throw Error("aggregate: self and cross layer counts differ");
  for (std::size_t l = 0; l < w.self_attn.size(); ++l) {
    f0 = attention(tape, f0, f0, w.self_attn[l]);
    f1 = attention(tape, f1, f1, w.self_attn[l]);
    ad::Var c0 = attention(tape, f0, f1, w.cross_attn[l]);
    ad::Var c1 = attention(tape, f1, f0, w.cross_attn[l]);
    f0 = c0;
    f1 = c1;
  }
  return {f0, f1};
}

ad::Var correlation(ad::Tape& tape, ad::Var f0, ad::Var f1) {
  const double c = static_cast<double>(tape.value(f0).cols());
  return tape.scale(tape.matmul_nt(f0, f1), 1.0 / std::sqrt(c));
}

}  // namespace net

namespace {

QkvT<ad::Var> bind_layer(ad::Tape& tape, const Qkv& layer) {
  QkvT<ad::Var> out;
  for (int r = 0; r < 3; ++r)
    out[r] = {tape.constant(layer[r].weight), tape.constant(layer[r].bias)};
  return out;
}

}  // namespace

Mat self_attention(const Mat& f, const Qkv& layer) {
  ad::Tape tape;
  ad::Var x = tape.constant(f);
  return tape.value(net::attention(tape, x, x, bind_layer(tape, layer)));
}

Mat cross_attention(const Mat& fa, const Mat& fb, const Qkv& layer) {
  ad::Tape tape;
  return tape.value(
      net::attention(tape, tape.constant(fa), tape.constant(fb), bind_layer(tape, layer)));
}

std::pair<Mat, Mat> aggregate(const Mat& f0, const Mat& f1, std::span<const Qkv> self_layers,
                              std::span<const Qkv> cross_layers) {
  if (self_layers.size() != cross_layers.size())
    throw Error("aggregate: self and cross layer counts differ");
  ad::Tape tape;
  WeightVars w;
  for (std::size_t l = 0; l < self_layers.size(); ++l) {
    w.self_attn.push_back(bind_layer(tape, self_layers[l]));
    w.cross_attn.push_back(bind_layer(tape, cross_layers[l]));
  }
  auto [a, b] = net::aggregate(tape, tape.constant(f0), tape.constant(f1), w);
  return {tape.value(a), tape.value(b)};
}

Mat correlation(const Mat& f0, const Mat& f1) {
  if (f0.cols() != f1.cols()) throw Error("correlation: feature widths differ");
  Mat p = matmul_nt(f0, f1);
  const double s = 1.0 / std::sqrt(static_cast<double>(f0.cols()));
  for (double& v : p.storage()) v *= s;
  return p;
}

TransportPlan sinkhorn_ot(const Mat& scores, double dustbin, int iters) {
  ad::Tape tape;
  ad::Var lp = tape.log_sinkhorn(tape.constant(scores), tape.constant(Mat(1, 1, dustbin)), iters);
  Mat plan = tape.value(lp);
  for (double& v : plan.storage()) v = std::exp(v);
  return {std::move(plan), iters};
}

Matching mutual_match(const TransportPlan& tp, double theta) {
  if (!(theta >= 0.0 && theta < 1.0)) throw Error("mutual_match: theta must be in [0, 1)");
  const int k0 = tp.rows();
  const int k1 = tp.cols();
  const Mat& p = tp.plan;
  std::vector<int> row_best(k0, -1), col_best(k1, -1);
  for (int i = 0; i < k0; ++i)
    for (int j = 0; j < k1; ++j)
      if (row_best[i] < 0 || p(i, j) > p(i, row_best[i])) row_best[i] = j;
  for (int j = 0; j < k1; ++j)
    for (int i = 0; i < k0; ++i)
      if (col_best[j] < 0 || p(i, j) > p(col_best[j], j)) col_best[j] = i;
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < k0; ++i) {
    const int j = row_best[i];
    if (j >= 0 && col_best[j] == i && p(i, j) > theta) pairs.emplace_back(i, j);
  }
  return Matching::from_pairs(std::move(pairs), k0, k1);
}

}  // namespace inbet
