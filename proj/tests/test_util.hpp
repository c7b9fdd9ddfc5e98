#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "inbet/geom.hpp"
#include "inbet/pipeline.hpp"
#include "inbet/rng.hpp"
#include "inbet/tensor.hpp"

namespace testutil {

inline inbet::Mat random_mat(inbet::Rng& rng, std::size_t r, std::size_t c, double lo = -1.0,
                             double hi = 1.0) {
  inbet::Mat m(r, c);
  for (double& v : m.storage()) v = rng.uniform(lo, hi);
  return m;
}

// Random connected-ish graph: a path through all vertices plus a few chords.
inline inbet::LineGraph random_graph(inbet::Rng& rng, int k, int size = 32, bool ids = true) {
  inbet::LineGraph g;
  g.width = g.height = size;
  for (int i = 0; i < k; ++i)
    g.vertices.push_back({rng.uniform(0, size - 1), rng.uniform(0, size - 1)});
  for (int i = 0; i + 1 < k; ++i)
    if (rng.uniform() < 0.85) g.edges.emplace_back(i, i + 1);
  for (int c = 0; c < k / 3; ++c) {
    const int a = static_cast<int>(rng.below(k)), b = static_cast<int>(rng.below(k));
    if (a != b) g.edges.emplace_back(a, b);
  }
  inbet::canonicalize_edges(g.edges);
  if (ids) {
    g.ref_ids.emplace();
    for (int i = 0; i < k; ++i) g.ref_ids->push_back(100 + i);
  }
  return g;
}

inline double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Three frames of one small moving graph (ids shared, one vertex dropped from
// the last frame), ready for make_sample with gap 1.
inline std::vector<std::shared_ptr<const inbet::FrameData>> tiny_sequence(inbet::Rng& rng, int k,
                                                                          int spectral_dim,
                                                                          int size = 24) {
  inbet::LineGraph g = random_graph(rng, k, size);
  for (auto& v : g.vertices) v = {std::clamp(v.x, 3.0, size - 4.0), std::clamp(v.y, 3.0, size - 4.0)};
  std::vector<std::shared_ptr<const inbet::FrameData>> out;
  for (int f = 0; f < 3; ++f) {
    inbet::LineGraph h = g;
    for (auto& v : h.vertices) v = v + inbet::Vec2{0.8 * f, -0.5 * f};
    if (f == 2) {
      h.vertices.pop_back();
      h.ref_ids->pop_back();
      std::erase_if(h.edges, [&](auto e) { return e.second >= k - 1; });
    }
    auto img = inbet::rasterize(h, 1);
    out.push_back(std::make_shared<const inbet::FrameData>(
        inbet::prepare_frame(std::move(h), std::move(img), spectral_dim)));
  }
  return out;
}

}  // namespace testutil
