#include "inbet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace inbet {

CorrespondenceLoss loss_correspondence(const TransportPlan& plan, const Matching& gt) {
  if (gt.pairs.empty()) return {0.0, true};
  double sum = 0.0;
  for (auto [i, j] : gt.pairs) {
    if (i < 0 || j < 0 || i >= plan.rows() || j >= plan.cols())
      throw Error("loss_correspondence: pair outside the plan core");
    sum += std::log(std::max(plan.plan(i, j), kPlanFloor));
  }
  return {-sum / static_cast<double>(gt.pairs.size()), false};
}

double loss_reposition(const Mat& r_pred, const Mat& r_gt) {
  if (!r_pred.same_shape(r_gt)) throw Error("loss_reposition: shape mismatch");
  if (r_pred.rows() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < r_pred.size(); ++i) sum += std::abs(r_pred[i] - r_gt[i]);
  return sum / static_cast<double>(r_pred.rows());
}

double loss_reposition(const Mat& r01, const Mat& gt01, const Mat& r10, const Mat& gt10) {
  return loss_reposition(r01, gt01) + loss_reposition(r10, gt10);
}

double weighted_bce(const Mat& logits, const std::vector<std::uint8_t>& labels, double w) {
  if (logits.size() != labels.size()) throw Error("weighted_bce: length mismatch");
  if (labels.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(1.0 / (1.0 + std::exp(-logits[i])), kProbClamp, 1.0 - kProbClamp);
    sum += labels[i] ? w * std::log(p) : (1.0 - w) * std::log(1.0 - p);
  }
  return -sum / static_cast<double>(labels.size());
}

double loss_visibility(const Mat& logits0, const Mat& logits1,
                       const std::vector<std::uint8_t>& y0, const std::vector<std::uint8_t>& y1,
                       double w) {
  return weighted_bce(logits0, y0, w) + weighted_bce(logits1, y1, w);
}

namespace net {

ad::Var correspondence_loss(ad::Tape& tape, ad::Var log_plan,
                            const std::vector<std::pair<int, int>>& pairs) {
  if (pairs.empty()) return tape.constant(Mat(1, 1));
  ad::Var g = tape.gather_elements(log_plan, pairs);
  g = tape.clamp(g, std::log(kPlanFloor), std::numeric_limits<double>::max());
  return tape.scale(tape.mean(g), -1.0);
}

ad::Var reposition_loss(ad::Tape& tape, ad::Var r_pred, const Mat& r_gt) {
  const Mat& pred = tape.value(r_pred);
  if (!pred.same_shape(r_gt)) throw Error("reposition_loss: shape mismatch");
  if (pred.rows() == 0) return tape.constant(Mat(1, 1));
  ad::Var diff = tape.abs(tape.sub(r_pred, tape.constant(r_gt)));
  return tape.scale(tape.sum(diff), 1.0 / static_cast<double>(pred.rows()));
}

ad::Var weighted_bce(ad::Tape& tape, ad::Var logits, const std::vector<std::uint8_t>& labels,
                     double w) {
  const std::size_t n = labels.size();
  if (tape.value(logits).size() != n) throw Error("weighted_bce: length mismatch");
  if (n == 0) return tape.constant(Mat(1, 1));
  Mat pos(n, 1), neg(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    pos[i] = labels[i] ? w : 0.0;
    neg[i] = labels[i] ? 0.0 : 1.0 - w;
  }
  ad::Var p = tape.clamp(tape.sigmoid(logits), kProbClamp, 1.0 - kProbClamp);
  ad::Var terms = tape.add(tape.mul(tape.log(p), tape.constant(std::move(pos))),
                           tape.mul(tape.log(tape.affine(p, -1.0, 1.0)),
                                    tape.constant(std::move(neg))));
  return tape.scale(tape.mean(terms), -1.0);
}

}  // namespace net

}  // namespace inbet
