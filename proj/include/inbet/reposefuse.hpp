#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "inbet/autodiff.hpp"
#include "inbet/geom.hpp"
#include "inbet/model.hpp"

namespace inbet {

// K x 2 shift vectors in pixels.
using RepositionField = Mat;

struct VisibilityMask {
  std::vector<std::uint8_t> visible;
  std::optional<Mat> logits;  // K x 1, kept for training
};

Mat vertex_matrix(const std::vector<Vec2>& vertices);

// r01 = softmax(F0 F0^T / sqrt C) (softmax(P) V1 - V0) and symmetrically r10,
// where softmax(P) is the row softmax of the raw correlation scores.
std::pair<RepositionField, RepositionField> propagate_shifts(const Mat& f0, const Mat& f1,
                                                             const Mat& scores,
                                                             const std::vector<Vec2>& v0,
                                                             const std::vector<Vec2>& v1);

// Matched vertices take their exact displacement; the rest keep `propagated`.
RepositionField final_repositioning(const Matching& matching, const std::vector<Vec2>& v0,
                                    const std::vector<Vec2>& v1,
                                    const RepositionField& propagated);

// The same rule seen from graph 1 (r1 of the pair).
RepositionField final_repositioning_reverse(const Matching& matching,
                                            const std::vector<Vec2>& v0,
                                            const std::vector<Vec2>& v1,
                                            const RepositionField& propagated);

VisibilityMask predict_visibility(const Mat& features, const Weights& w, double threshold);

// Merges two graphs into the intermediate frame at time t in (0, 1).
LineGraph fuse(const LineGraph& g0, const LineGraph& g1, const Matching& matching,
               const RepositionField& r0, const RepositionField& r1, const VisibilityMask& m0,
               const VisibilityMask& m1, double t);

namespace net {

std::pair<ad::Var, ad::Var> propagate_shifts(ad::Tape& tape, ad::Var f0, ad::Var f1,
                                             ad::Var scores, const Mat& v0, const Mat& v1);

// K x 1 visibility logits.
ad::Var visibility_logits(ad::Tape& tape, ad::Var features, const WeightVars& w);

}  // namespace net

}  // namespace inbet
