#include "inbet/train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "inbet/dataset.hpp"
#include "inbet/log.hpp"
#include "inbet/losses.hpp"
#include "inbet/pseudo_labels.hpp"
#include "inbet/rng.hpp"

namespace inbet {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw Error("train.learning_rate: must be >= 0");
  if (epochs_total < 0) throw Error("train.epochs_total: must be >= 0");
  if (epochs_phase1 < 0 || epochs_phase1 > epochs_total)
    throw Error("train.epochs_phase1: must be in [0, epochs_total]");
  if (accumulation_steps < 1) throw Error("train.accumulation_steps: must be >= 1");
  if (!(bias_weight > 0.0 && bias_weight < 1.0))
    throw Error("train.bias_weight: must be in (0, 1)");
  if (gap_min < 1 || gap_max < gap_min)
    throw Error("train.gap_min/gap_max: need 1 <= gap_min <= gap_max");
  if (max_samples_per_epoch < 0) throw Error("train.max_samples_per_epoch: must be >= 0");
  if (max_steps < 0) throw Error("train.max_steps: must be >= 0");
}

TrainingSample make_sample(std::vector<std::shared_ptr<const FrameData>> frames, std::string id) {
  const int n = static_cast<int>(frames.size());
  const int gap = n - 2;
  if (gap < 1 || gap % 2 == 0)
    throw Error("make_sample: gap must be odd and >= 1, got " + std::to_string(gap));
  const int center = (gap + 1) / 2;

  std::vector<const LineGraph*> fwd, bwd;
  for (int i = 0; i < n; ++i) fwd.push_back(&frames[i]->graph);
  bwd.assign(fwd.rbegin(), fwd.rend());

  TrainingSample s;
  s.id = std::move(id);
  s.a = frames.front();
  s.b = frames.back();
  s.gt = derive_matching(s.a->graph, s.b->graph);
  s.r01_gt = backtrack_pseudo_shift(std::span<const LineGraph* const>(fwd));
  s.r10_gt = backtrack_pseudo_shift(std::span<const LineGraph* const>(bwd));
  const Mat half0 =
      backtrack_pseudo_shift(std::span<const LineGraph* const>(fwd.data(), center + 1));
  const Mat half1 =
      backtrack_pseudo_shift(std::span<const LineGraph* const>(bwd.data(), n - center));
  s.m0_gt = pseudo_visibility(s.a->graph.vertices, half0, frames[center]->image);
  s.m1_gt = pseudo_visibility(s.b->graph.vertices, half1, frames[center]->image);
  s.avg_shift = graph_stats(s.a->graph, s.b->graph).avg_shift;
  return s;
}

std::vector<TrainingSample> build_samples(const std::vector<LoadedSequence>& sequences,
                                          int gap_min, int gap_max) {
  std::vector<TrainingSample> out;
  for (const auto& seq : sequences) {
    const int frames = static_cast<int>(seq.frames.size());
    for (int gap = gap_min; gap <= gap_max; ++gap) {
      if (gap % 2 == 0) continue;
      for (int z = 0; z + gap + 1 < frames; ++z) {
        std::vector<std::shared_ptr<const FrameData>> span(seq.frames.begin() + z,
                                                           seq.frames.begin() + z + gap + 2);
        out.push_back(make_sample(std::move(span), seq.entry.id + ":" + std::to_string(z) + "+" +
                                                       std::to_string(gap)));
      }
    }
  }
  return out;
}

LossTerms forward_loss(ad::Tape& tape, const WeightVars& w, const ModelConfig& config,
                       const TrainingSample& sample, Phase phase, double bias_weight) {
  const bool full = phase == Phase::full;
  const net::Forward fw = net::forward(tape, w, config, *sample.a, *sample.b, full);
  LossTerms terms;
  ad::Var lc = net::correspondence_loss(tape, fw.log_plan, sample.gt.pairs);
  terms.l_c = tape.scalar(lc);
  terms.total = lc;
  if (full) {
    ad::Var lr = tape.add(net::reposition_loss(tape, fw.r01, sample.r01_gt),
                          net::reposition_loss(tape, fw.r10, sample.r10_gt));
    ad::Var lm = tape.add(net::weighted_bce(tape, fw.vis0, sample.m0_gt, bias_weight),
                          net::weighted_bce(tape, fw.vis1, sample.m1_gt, bias_weight));
    terms.l_r = tape.scalar(lr);
    terms.l_m = tape.scalar(lm);
    terms.total = tape.add(tape.add(lc, lr), lm);
  }
  terms.value = tape.scalar(terms.total);
  return terms;
}

double sample_loss(const ModelParams& params, const TrainingSample& sample, Phase phase,
                   double bias_weight) {
  ad::Tape tape;
  const WeightVars w = bind(tape, params.weights, false);
  return forward_loss(tape, w, params.config, sample, phase, bias_weight).value;
}

Weights loss_gradient(const ModelParams& params, const TrainingSample& sample, Phase phase,
                      double bias_weight, LossTerms* terms) {
  ad::Tape tape;
  WeightVars w = bind(tape, params.weights, true);
  const LossTerms t = forward_loss(tape, w, params.config, sample, phase, bias_weight);
  if (tape.requires_grad(t.total)) tape.backward(t.total);
  Weights grad = params.weights;
  std::vector<Mat> grads;
  w.visit([&](const std::string&, ad::Var& v) { grads.push_back(tape.grad(v)); });
  std::size_t next = 0;
  grad.visit([&](const std::string&, Mat& g) { g = std::move(grads[next++]); });
  if (terms) *terms = t;
  return grad;
}

std::vector<double> flatten(const Weights& w) {
  std::vector<double> flat;
  w.visit([&](const std::string&, const Mat& t) {
    flat.insert(flat.end(), t.storage().begin(), t.storage().end());
  });
  return flat;
}

void unflatten(const std::vector<double>& flat, Weights& w) {
  std::size_t at = 0;
  w.visit([&](const std::string&, Mat& t) {
    if (at + t.size() > flat.size()) throw Error("unflatten: vector too short");
    std::copy_n(flat.begin() + at, t.size(), t.storage().begin());
    at += t.size();
  });
  if (at != flat.size()) throw Error("unflatten: vector too long");
}

GradCheckResult check_gradient(const std::function<double(const std::vector<double>&)>& f,
                               const std::vector<double>& x, const std::vector<double>& analytic,
                               double eps, const std::vector<std::size_t>& coords) {
  if (analytic.size() != x.size()) throw Error("check_gradient: size mismatch");
  std::vector<std::size_t> which = coords;
  if (which.empty())
    for (std::size_t i = 0; i < x.size(); ++i) which.push_back(i);
  GradCheckResult r;
  std::vector<double> probe = x;
  for (std::size_t i : which) {
    probe[i] = x[i] + eps;
    const double up = f(probe);
    probe[i] = x[i] - eps;
    const double down = f(probe);
    probe[i] = x[i];
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[i];
    const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    if (r.coordinates == 0 || err > r.max_rel_error) {
      r.max_rel_error = err;
      r.worst_index = i;
      r.worst_analytic = a;
      r.worst_numeric = numeric;
    }
    ++r.coordinates;
  }
  return r;
}

GradCheckResult grad_check(const ModelParams& params, const TrainingSample& sample, Phase phase,
                           double eps, double bias_weight, std::size_t max_coordinates,
                           std::uint64_t seed) {
  const std::vector<double> analytic = flatten(loss_gradient(params, sample, phase, bias_weight));
  const std::vector<double> x = flatten(params.weights);
  std::vector<std::size_t> coords;
  if (max_coordinates > 0 && max_coordinates < x.size()) {
    std::vector<std::size_t> all(x.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    Rng rng(seed);
    for (std::size_t i = 0; i < max_coordinates; ++i)
      std::swap(all[i], all[i + rng.below(all.size() - i)]);
    coords.assign(all.begin(), all.begin() + max_coordinates);
    std::sort(coords.begin(), coords.end());
  }
  ModelParams probe = params;
  auto f = [&](const std::vector<double>& flat) {
    unflatten(flat, probe.weights);
    return sample_loss(probe, sample, phase, bias_weight);
  };
  return check_gradient(f, x, analytic, eps, coords);
}

Adam::Adam(const Weights& shape, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  const std::size_t n = flatten(shape).size();
  m_.assign(n, 0.0);
  v_.assign(n, 0.0);
}

void Adam::step(Weights& w, const Weights& grad) {
  std::vector<double> p = flatten(w);
  const std::vector<double> g = flatten(grad);
  if (p.size() != m_.size() || g.size() != m_.size()) throw Error("Adam: shape mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < p.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g[i] * g[i];
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    p[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    p[i] = static_cast<double>(static_cast<float>(p[i]));
  }
  unflatten(p, w);
}

TrainResult train(const std::vector<TrainingSample>& samples, ModelParams init,
                  const TrainConfig& config, const ProgressFn& progress) {
  config.validate();
  init.config.validate();
  if (samples.empty()) throw Error("train: no training samples");
  TrainResult result{std::move(init), {}};
  ModelParams& params = result.params;
  Adam adam(params.weights, config.learning_rate);
  Rng rng(config.seed);

  std::vector<double> grad_sum(flatten(params.weights).size(), 0.0);
  LossRecord pending;
  int accumulated = 0;
  int step = 0;

  auto apply_step = [&](int epoch) {
    const double inv = 1.0 / accumulated;
    std::vector<double> avg(grad_sum.size());
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] = grad_sum[i] * inv;
    Weights grad = params.weights;
    unflatten(avg, grad);
    adam.step(params.weights, grad);
    ++step;
    LossRecord rec{epoch, step, pending.l_c * inv, pending.l_r * inv, pending.l_m * inv,
                   pending.total * inv};
    result.log.push_back(rec);
    if (progress) progress(rec, params);
    std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
    pending = {};
    accumulated = 0;
  };

  std::vector<std::size_t> order(samples.size());
  for (int epoch = 0; epoch < config.epochs_total; ++epoch) {
    const Phase phase = epoch < config.epochs_phase1 ? Phase::correspondence : Phase::full;
    // The full loss adds pixel-scale terms; moments tuned to L_c alone would
    // lag the new gradient scale for ~1/(1 - beta2) steps and overshoot.
    if (epoch > 0 && epoch == config.epochs_phase1) adam = Adam(params.weights, config.learning_rate);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    std::size_t count = order.size();
    if (config.max_samples_per_epoch > 0)
      count = std::min<std::size_t>(count, config.max_samples_per_epoch);

    for (std::size_t k = 0; k < count; ++k) {
      LossTerms terms;
      const Weights g =
          loss_gradient(params, samples[order[k]], phase, config.bias_weight, &terms);
      const std::vector<double> flat = flatten(g);
      for (std::size_t i = 0; i < flat.size(); ++i) grad_sum[i] += flat[i];
      pending.l_c += terms.l_c;
      pending.l_r += terms.l_r;
      pending.l_m += terms.l_m;
      pending.total += terms.value;
      if (++accumulated == config.accumulation_steps) apply_step(epoch);
      if (config.max_steps > 0 && step >= config.max_steps) return result;
    }
    if (accumulated > 0) apply_step(epoch);
    if (config.max_steps > 0 && step >= config.max_steps) break;
    log_info("epoch " + std::to_string(epoch) + " done, step " + std::to_string(step) +
             ", last total " + std::to_string(result.log.empty() ? 0.0 : result.log.back().total));
  }
  return result;
}

std::string loss_log_csv(const std::vector<LossRecord>& log) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,step,L_c,L_r,L_m,total\n";
  for (const auto& r : log)
    os << r.epoch << ',' << r.step << ',' << r.l_c << ',' << r.l_r << ',' << r.l_m << ','
       << r.total << '\n';
  return os.str();
}

}  // namespace inbet
