#pragma once

#include <vector>

#include "inbet/autodiff.hpp"
#include "inbet/geom.hpp"
#include "inbet/image.hpp"
#include "inbet/model.hpp"

namespace inbet {

// Dense H*W x C feature map; row y*W + x holds the features of pixel (x, y).
struct FeatureMap {
  int width = 0;
  int height = 0;
  Mat features;
};

// Full-resolution output of the three-layer image encoder.
FeatureMap contextual_features(const RasterImage& image, const Weights& w);

// Row i = features at the round-half-up pixel of vertex i.
Mat index_at_vertices(const FeatureMap& map, const std::vector<Vec2>& vertices);

// (2x/(W-1) - 1, 2y/(H-1) - 1) for each vertex.
Mat normalized_coordinates(const std::vector<Vec2>& vertices, int width, int height);

Mat positional_embedding(const std::vector<Vec2>& vertices, int width, int height,
                         const Weights& w);
Mat topological_embedding(const LineGraph& graph, const Weights& w, int spectral_dim);

// Sum of the enabled components (disabled components contribute zero).
Mat embed_vertices(const LineGraph& graph, const RasterImage& image, const ModelParams& model);

// Pixel of each vertex; throws when a vertex rounds outside the image.
std::vector<std::pair<int, int>> vertex_pixels(const std::vector<Vec2>& vertices, int width,
                                               int height);

namespace net {

// Image encoder evaluated only on the 7x7 receptive field of each vertex. Gives
// the same values as index_at_vertices(contextual_features(...)).
ad::Var contextual_at_vertices(ad::Tape& tape, const RasterImage& image,
                               const std::vector<Vec2>& vertices, const WeightVars& w);

ad::Var positional(ad::Tape& tape, const std::vector<Vec2>& vertices, int width, int height,
                   const WeightVars& w);

// `spectral` is the K x S spectral embedding of the graph.
ad::Var topological(ad::Tape& tape, const Mat& spectral, const WeightVars& w);

ad::Var embed(ad::Tape& tape, const LineGraph& graph, const RasterImage& image,
              const Mat& spectral, const WeightVars& w, const ModelConfig& config);

}  // namespace net

}  // namespace inbet
