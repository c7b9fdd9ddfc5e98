#pragma once

#include <limits>
#include <string>
#include <vector>

#include "inbet/dataset.hpp"
#include "inbet/image.hpp"
#include "inbet/pipeline.hpp"

namespace inbet {

inline constexpr double kNoLineDistance = std::numeric_limits<double>::max();

// Exact Euclidean distance from every pixel to the nearest true pixel
// (separable two-pass lower-envelope algorithm). All-false → kNoLineDistance.
std::vector<double> distance_transform(const Mask& mask);

struct ChamferResult {
  double value = 0.0;
  // One of the masks was empty; its distances were capped at the image diagonal.
  bool empty_mask = false;
};

// (1 / (H W d)) * sum[pred * DT(gt) + gt * DT(pred)] on binarized images.
ChamferResult chamfer(const RasterImage& pred, const RasterImage& gt, double d);

inline double default_search_diameter(int width, int height) {
  return std::max(width, height) / 10.0;
}

inline constexpr int kEvalLineWidth = 2;

struct EvalConfig {
  std::vector<int> gaps{1, 5, 9};
  double t = 0.5;
  double d = 0.0;  // <= 0: default_search_diameter of the data
  std::string split = "test";
};

struct PairResult {
  int gap = 0;
  std::string pair_id;
  double cd = 0.0;           // pipeline
  double baseline_cd = 0.0;  // first key frame copied as the answer
  double avg_shift = 0.0;
  bool flagged = false;
};

struct CDReport {
  EvalConfig config;
  double d = 0.0;
  std::vector<PairResult> pairs;
  std::vector<double> mean_cd;           // per gap, same order as config.gaps
  std::vector<double> mean_baseline_cd;
};

// Centre frame of gap g starting at z is z + (g + 1) / 2; gaps must be odd.
CDReport evaluate(const ModelParams& params, const std::vector<LoadedSequence>& sequences,
                  const EvalConfig& config);

// CSV with columns gap, pair_id, cd, baseline_cd, d; CD values in units of 1e-5,
// one "mean" row per gap.
std::string report_csv(const CDReport& report);

// Fraction of ground-truth pairs whose first vertex is predicted to match its
// true partner ("valid accuracy", over non-occluded vertices).
double valid_accuracy(const Matching& predicted, const Matching& truth);

struct AccuracySummary {
  double accuracy = 0.0;  // pooled over all ground-truth pairs
  std::size_t pairs = 0;
  std::size_t frame_pairs = 0;
};

// Pooled valid accuracy over every (z, z + gap + 1) pair of the sequences with
// gap in `gaps` and average shift at most `max_avg_shift`.
AccuracySummary matching_accuracy(const ModelParams& params,
                                  const std::vector<LoadedSequence>& sequences,
                                  const std::vector<int>& gaps, double max_avg_shift);

}  // namespace inbet
