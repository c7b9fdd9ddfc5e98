#include "inbet/pipeline.hpp"

#include <cmath>

namespace inbet {

FrameData prepare_frame(LineGraph graph, RasterImage image, int spectral_dim) {
  validate(graph);
  image.validate();
  if (graph.width != image.width || graph.height != image.height)
    throw Error("frame: graph is " + std::to_string(graph.width) + "x" +
                std::to_string(graph.height) + " but image is " + std::to_string(image.width) +
                "x" + std::to_string(image.height));
  Mat spectral = spectral_embedding(graph, spectral_dim);
  return {std::move(graph), std::move(image), std::move(spectral)};
}

namespace net {

Forward forward(ad::Tape& tape, const WeightVars& w, const ModelConfig& config,
                const FrameData& a, const FrameData& b, bool heads) {
  if (a.graph.size() == 0 || b.graph.size() == 0)
    throw Error("forward: both graphs need at least one vertex");
  Forward out;
  ad::Var e0 = embed(tape, a.graph, a.image, a.spectral, w, config);
  ad::Var e1 = embed(tape, b.graph, b.image, b.spectral, w, config);
  std::tie(out.f0, out.f1) = aggregate(tape, e0, e1, w);
  out.scores = correlation(tape, out.f0, out.f1);
  out.log_plan = tape.log_sinkhorn(out.scores, w.dustbin, config.sinkhorn_iters);
  if (heads) {
    std::tie(out.r01, out.r10) = propagate_shifts(tape, out.f0, out.f1, out.scores,
                                                  vertex_matrix(a.graph.vertices),
                                                  vertex_matrix(b.graph.vertices));
    out.vis0 = visibility_logits(tape, out.f0, w);
    out.vis1 = visibility_logits(tape, out.f1, w);
  }
  return out;
}

}  // namespace net

namespace {

TransportPlan plan_of(const ad::Tape& tape, ad::Var log_plan, int iters) {
  Mat p = tape.value(log_plan);
  for (double& v : p.storage()) v = std::exp(v);
  return {std::move(p), iters};
}

VisibilityMask threshold_logits(Mat logits, double threshold) {
  VisibilityMask m;
  m.visible.resize(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i)
    m.visible[i] = 1.0 / (1.0 + std::exp(-logits[i])) >= threshold ? 1 : 0;
  m.logits = std::move(logits);
  return m;
}

}  // namespace

InbetweenResult inbetween(const FrameData& a, const FrameData& b, const ModelParams& model,
                          double t) {
  if (!(t > 0.0 && t < 1.0)) throw Error("inbetween: t must be in (0, 1)");
  ad::Tape tape;
  const WeightVars w = bind(tape, model.weights, false);
  const net::Forward fw = net::forward(tape, w, model.config, a, b, true);
  InbetweenResult r;
  r.plan = plan_of(tape, fw.log_plan, model.config.sinkhorn_iters);
  r.matching = mutual_match(r.plan, model.config.match_threshold);
  r.r0 = final_repositioning(r.matching, a.graph.vertices, b.graph.vertices, tape.value(fw.r01));
  r.r1 = final_repositioning_reverse(r.matching, a.graph.vertices, b.graph.vertices,
                                     tape.value(fw.r10));
  r.m0 = threshold_logits(tape.value(fw.vis0), model.config.visibility_threshold);
  r.m1 = threshold_logits(tape.value(fw.vis1), model.config.visibility_threshold);
  r.graph = fuse(a.graph, b.graph, r.matching, r.r0, r.r1, r.m0, r.m1, t);
  return r;
}

InbetweenResult inbetween(const LineGraph& g0, const RasterImage& i0, const LineGraph& g1,
                          const RasterImage& i1, const ModelParams& model, double t) {
  return inbetween(prepare_frame(g0, i0, model.config.spectral_dim),
                   prepare_frame(g1, i1, model.config.spectral_dim), model, t);
}

std::pair<TransportPlan, Matching> match_frames(const FrameData& a, const FrameData& b,
                                                const ModelParams& model) {
  ad::Tape tape;
  const WeightVars w = bind(tape, model.weights, false);
  const net::Forward fw = net::forward(tape, w, model.config, a, b, false);
  TransportPlan plan = plan_of(tape, fw.log_plan, model.config.sinkhorn_iters);
  Matching m = mutual_match(plan, model.config.match_threshold);
  return {std::move(plan), std::move(m)};
}

}  // namespace inbet
