#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "inbet/autodiff.hpp"
#include "inbet/correspond.hpp"

namespace inbet {

inline constexpr double kPlanFloor = 1e-12;
inline constexpr double kProbClamp = 1e-7;

struct CorrespondenceLoss {
  double value = 0.0;
  bool no_pairs = false;  // ground truth had no pairs; value is 0
};

// -mean over ground-truth pairs of log(max(plan, 1e-12)).
CorrespondenceLoss loss_correspondence(const TransportPlan& plan, const Matching& gt);

// Sum of per-vertex L1 norms divided by the vertex count (0 for no vertices).
double loss_reposition(const Mat& r_pred, const Mat& r_gt);
// Both directions added.
double loss_reposition(const Mat& r01, const Mat& gt01, const Mat& r10, const Mat& gt10);

// -mean[w y log p + (1 - w)(1 - y) log(1 - p)], p = sigmoid(logit) clamped to [1e-7, 1 - 1e-7].
double weighted_bce(const Mat& logits, const std::vector<std::uint8_t>& labels, double w);
double loss_visibility(const Mat& logits0, const Mat& logits1,
                       const std::vector<std::uint8_t>& y0, const std::vector<std::uint8_t>& y1,
                       double w);

namespace net {

ad::Var correspondence_loss(ad::Tape& tape, ad::Var log_plan,
                            const std::vector<std::pair<int, int>>& pairs);
ad::Var reposition_loss(ad::Tape& tape, ad::Var r_pred, const Mat& r_gt);
ad::Var weighted_bce(ad::Tape& tape, ad::Var logits, const std::vector<std::uint8_t>& labels,
                     double w);

}  // namespace net

}  // namespace inbet
