#pragma once

#include <span>
#include <utility>

#include "inbet/autodiff.hpp"
#include "inbet/geom.hpp"
#include "inbet/model.hpp"

namespace inbet {

// (K0+1) x (K1+1) soft assignment; the last row and column are the dustbin.
struct TransportPlan {
  Mat plan;
  int iterations = 0;

  int rows() const { return static_cast<int>(plan.rows()) - 1; }
  int cols() const { return static_cast<int>(plan.cols()) - 1; }
};

// F + softmax(Q(F) K(F)^T / sqrt(C)) V(F)
Mat self_attention(const Mat& f, const Qkv& layer);
// Fa + softmax(Q(Fa) K(Fb)^T / sqrt(C)) V(Fb)
Mat cross_attention(const Mat& fa, const Mat& fb, const Qkv& layer);

// N rounds of [self on both streams, then cross in both directions from the
// post-self features]. Self and cross layer lists must have equal length.
std::pair<Mat, Mat> aggregate(const Mat& f0, const Mat& f1, std::span<const Qkv> self_layers,
                              std::span<const Qkv> cross_layers);

// F0 F1^T / sqrt(C)
Mat correlation(const Mat& f0, const Mat& f1);

TransportPlan sinkhorn_ot(const Mat& scores, double dustbin, int iters);

// Mutual row/column argmax over the plan core (lowest index on ties) with
// plan value strictly above theta.
Matching mutual_match(const TransportPlan& plan, double theta);

namespace net {

ad::Var attention(ad::Tape& tape, ad::Var fa, ad::Var fb, const QkvT<ad::Var>& layer);

std::pair<ad::Var, ad::Var> aggregate(ad::Tape& tape, ad::Var f0, ad::Var f1,
                                      const WeightVars& w);

ad::Var correlation(ad::Tape& tape, ad::Var f0, ad::Var f1);

}  // namespace net

}  // namespace inbet
