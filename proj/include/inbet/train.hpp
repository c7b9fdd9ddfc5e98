#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "inbet/autodiff.hpp"
#include "inbet/pipeline.hpp"

namespace inbet {

struct LoadedSequence;

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs_total = 70;
  int epochs_phase1 = 50;  // correspondence loss only
  int accumulation_steps = 8;
  double bias_weight = 0.2;  // weight of the positive term in the visibility BCE
  int gap_min = 1;           // frames strictly between the two inputs
  int gap_max = 9;
  std::uint64_t seed = 0;
  int max_samples_per_epoch = 0;  // 0 = every sample
  int max_steps = 0;              // 0 = no limit on optimizer steps

  void validate() const;
};

// A frame pair with supervision derived from the frames between them.
struct TrainingSample {
  std::string id;
  std::shared_ptr<const FrameData> a, b;
  Matching gt;
  Mat r01_gt, r10_gt;  // full-gap pseudo shifts
  std::vector<std::uint8_t> m0_gt, m1_gt;
  double avg_shift = 0.0;
};

// `frames` runs from the first key frame to the second inclusive; its length
// minus two is the gap, which must be odd so the centre frame exists.
TrainingSample make_sample(std::vector<std::shared_ptr<const FrameData>> frames,
                           std::string id = {});

// Every (z, gap) pair with odd gap in [gap_min, gap_max] from every sequence.
std::vector<TrainingSample> build_samples(const std::vector<LoadedSequence>& sequences,
                                          int gap_min, int gap_max);

enum class Phase { correspondence = 1, full = 2 };

struct LossTerms {
  ad::Var total;
  double l_c = 0.0, l_r = 0.0, l_m = 0.0, value = 0.0;
};

// Phase 1 records L_c only; phase 2 records L_c + L_r + L_m.
LossTerms forward_loss(ad::Tape& tape, const WeightVars& w, const ModelConfig& config,
                       const TrainingSample& sample, Phase phase, double bias_weight);

double sample_loss(const ModelParams& params, const TrainingSample& sample, Phase phase,
                   double bias_weight);

// Gradient of the sample loss with respect to every weight tensor.
Weights loss_gradient(const ModelParams& params, const TrainingSample& sample, Phase phase,
                      double bias_weight, LossTerms* terms = nullptr);

std::vector<double> flatten(const Weights& w);
void unflatten(const std::vector<double>& flat, Weights& w);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Central differences (f(x+eps) - f(x-eps)) / 2eps against `analytic` on the
// chosen coordinates (all of them when `coords` is empty). Relative error is
// |a - n| / max(1e-8, |a| + |n|).
GradCheckResult check_gradient(const std::function<double(const std::vector<double>&)>& f,
                               const std::vector<double>& x, const std::vector<double>& analytic,
                               double eps, const std::vector<std::size_t>& coords = {});

// Full-model check; max_coordinates = 0 checks every coordinate, otherwise a
// seeded random subset of that size.
GradCheckResult grad_check(const ModelParams& params, const TrainingSample& sample, Phase phase,
                           double eps, double bias_weight, std::size_t max_coordinates = 0,
                           std::uint64_t seed = 0);

class Adam {
 public:
  Adam(const Weights& shape, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  // Updates `w` in place and rounds every entry to float precision.
  void step(Weights& w, const Weights& grad);
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

struct LossRecord {
  int epoch = 0;
  int step = 0;
  double l_c = 0.0, l_r = 0.0, l_m = 0.0, total = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<LossRecord> log;
};

using ProgressFn = std::function<void(const LossRecord&, const ModelParams&)>;

// Deterministic given config.seed. One sample per forward pass, gradients
// averaged over accumulation_steps samples before each Adam update.
TrainResult train(const std::vector<TrainingSample>& samples, ModelParams init,
                  const TrainConfig& config, const ProgressFn& progress = {});

std::string loss_log_csv(const std::vector<LossRecord>& log);

}  // namespace inbet
