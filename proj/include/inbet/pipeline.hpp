#pragma once

#include "inbet/autodiff.hpp"
#include "inbet/correspond.hpp"
#include "inbet/embed.hpp"
#include "inbet/reposefuse.hpp"

namespace inbet {

// One key frame with its cached spectral embedding.
struct FrameData {
  LineGraph graph;
  RasterImage image;
  Mat spectral;  // K x spectral_dim
};

FrameData prepare_frame(LineGraph graph, RasterImage image, int spectral_dim);

namespace net {

struct Forward {
  ad::Var f0, f1;      // features after attention
  ad::Var scores;      // K0 x K1 correlation
  ad::Var log_plan;    // (K0+1) x (K1+1)
  ad::Var r01, r10;    // propagated shifts (heads only)
  ad::Var vis0, vis1;  // visibility logits (heads only)
};

// Records embed -> aggregate -> correlation -> Sinkhorn, and when `heads` is
// set also the repositioning and visibility heads.
Forward forward(ad::Tape& tape, const WeightVars& w, const ModelConfig& config,
                const FrameData& a, const FrameData& b, bool heads);

}  // namespace net

struct InbetweenResult {
  LineGraph graph;
  TransportPlan plan;
  Matching matching;
  RepositionField r0, r1;
  VisibilityMask m0, m1;
};

// Full inference: both graphs must have at least one vertex.
InbetweenResult inbetween(const FrameData& a, const FrameData& b, const ModelParams& model,
                          double t);
InbetweenResult inbetween(const LineGraph& g0, const RasterImage& i0, const LineGraph& g1,
                          const RasterImage& i1, const ModelParams& model, double t);

// Correspondence only (no heads): plan and mutual matching.
std::pair<TransportPlan, Matching> match_frames(const FrameData& a, const FrameData& b,
                                                const ModelParams& model);

}  // namespace inbet
