#include "inbet/reposefuse.hpp"

#include <algorithm>
#include <cmath>

namespace inbet {

Mat vertex_matrix(const std::vector<Vec2>& vertices) {
  Mat m(vertices.size(), 2);
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    m(i, 0) = vertices[i].x;
    m(i, 1) = vertices[i].y;
  }
  return m;
}

namespace net {

namespace {

ad::Var self_similarity(ad::Tape& tape, ad::Var f) {
  const double c = static_cast<double>(tape.value(f).cols());
  return tape.row_softmax(tape.scale(tape.matmul_nt(f, f), 1.0 / std::sqrt(c)));
}

}  // namespace

std::pair<ad::Var, ad::Var> propagate_shifts(ad::Tape& tape, ad::Var f0, ad::Var f1,
                                             ad::Var scores, const Mat& v0, const Mat& v1) {
  ad::Var pos0 = tape.constant(v0);
  ad::Var pos1 = tape.constant(v1);
  ad::Var soft01 = tape.row_softmax(scores);
  ad::Var soft10 = tape.row_softmax(tape.transpose(scores));
  ad::Var raw01 = tape.sub(tape.matmul(soft01, pos1), pos0);
  ad::Var raw10 = tape.sub(tape.matmul(soft10, pos0), pos1);
  return {tape.matmul(self_similarity(tape, f0), raw01),
          tape.matmul(self_similarity(tape, f1), raw10)};
}

ad::Var visibility_logits(ad::Tape& tape, ad::Var features, const WeightVars& w) {
  ad::Var h = tape.relu(apply_affine(tape, features, w.vis1));
  h = tape.relu(apply_affine(tape, h, w.vis2));
  return apply_affine(tape, h, w.vis3);
}

}  // namespace net

std::pair<RepositionField, RepositionField> propagate_shifts(const Mat& f0, const Mat& f1,
                                                             const Mat& scores,
                                                             const std::vector<Vec2>& v0,
                                                             const std::vector<Vec2>& v1) {
  if (scores.rows() != v0.size() || scores.cols() != v1.size() || f0.rows() != v0.size() ||
      f1.rows() != v1.size())
    throw Error("propagate_shifts: inconsistent shapes");
  ad::Tape tape;
  auto [a, b] = net::propagate_shifts(tape, tape.constant(f0), tape.constant(f1),
                                      tape.constant(scores), vertex_matrix(v0), vertex_matrix(v1));
  return {tape.value(a), tape.value(b)};
}

RepositionField final_repositioning(const Matching& matching, const std::vector<Vec2>& v0,
                                    const std::vector<Vec2>& v1,
                                    const RepositionField& propagated) {
  if (propagated.rows() != v0.size() || propagated.cols() != 2)
    throw Error("final_repositioning: propagated field must be K0 x 2");
  RepositionField r = propagated;
  for (auto [i, j] : matching.pairs) {
    r(i, 0) = v1[j].x - v0[i].x;
    r(i, 1) = v1[j].y - v0[i].y;
  }
  return r;
}

RepositionField final_repositioning_reverse(const Matching& matching,
                                            const std::vector<Vec2>& v0,
                                            const std::vector<Vec2>& v1,
                                            const RepositionField& propagated) {
  if (propagated.rows() != v1.size() || propagated.cols() != 2)
    throw Error("final_repositioning_reverse: propagated field must be K1 x 2");
  RepositionField r = propagated;
  for (auto [i, j] : matching.pairs) {
    r(j, 0) = v0[i].x - v1[j].x;
    r(j, 1) = v0[i].y - v1[j].y;
  }
  return r;
}

VisibilityMask predict_visibility(const Mat& features, const Weights& w, double threshold) {
  ad::Tape tape;
  const WeightVars vars = bind(tape, w, false);
  Mat logits = tape.value(net::visibility_logits(tape, tape.constant(features), vars));
  VisibilityMask m;
  m.visible.resize(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i)
    m.visible[i] = 1.0 / (1.0 + std::exp(-logits[i])) >= threshold ? 1 : 0;
  m.logits = std::move(logits);
  return m;
}

LineGraph fuse(const LineGraph& g0, const LineGraph& g1, const Matching& matching,
               const RepositionField& r0, const RepositionField& r1, const VisibilityMask& m0,
               const VisibilityMask& m1, double t) {
  if (!(t > 0.0 && t < 1.0)) throw Error("fuse: t must be in (0, 1)");
  if (g0.width != g1.width || g0.height != g1.height)
    throw Error("fuse: frames have different sizes");
  const int k0 = g0.size();
  const int k1 = g1.size();
  if (static_cast<int>(r0.rows()) != k0 || static_cast<int>(r1.rows()) != k1 ||
      static_cast<int>(m0.visible.size()) != k0 || static_cast<int>(m1.visible.size()) != k1 ||
      static_cast<int>(matching.occluded_0.size()) != k0 ||
      static_cast<int>(matching.occluded_1.size()) != k1)
    throw Error("fuse: inputs do not match the graph sizes");

  LineGraph out;
  out.width = g0.width;
  out.height = g0.height;
  auto clamp_in = [&](Vec2 p) {
    return Vec2{std::clamp(p.x, 0.0, double(out.width - 1)),
                std::clamp(p.y, 0.0, double(out.height - 1))};
  };
  std::vector<int> map0(k0, -1), map1(k1, -1);
  for (auto [i, j] : matching.pairs) {
    map0[i] = map1[j] = out.size();
    out.vertices.push_back(clamp_in((1.0 - t) * g0.vertices[i] + t * g1.vertices[j]));
  }
  for (int i = 0; i < k0; ++i)
    if (matching.occluded_0[i] && m0.visible[i]) {
      map0[i] = out.size();
      out.vertices.push_back(clamp_in(g0.vertices[i] + t * Vec2{r0(i, 0), r0(i, 1)}));
    }
  for (int j = 0; j < k1; ++j)
    if (matching.occluded_1[j] && m1.visible[j]) {
      map1[j] = out.size();
      out.vertices.push_back(clamp_in(g1.vertices[j] + (1.0 - t) * Vec2{r1(j, 0), r1(j, 1)}));
    }
  for (auto [a, b] : g0.edges)
    if (map0[a] >= 0 && map0[b] >= 0) out.edges.emplace_back(map0[a], map0[b]);
  for (auto [a, b] : g1.edges)
    if (map1[a] >= 0 && map1[b] >= 0) out.edges.emplace_back(map1[a], map1[b]);
  canonicalize_edges(out.edges);
  return out;
}

}  // namespace inbet
