#include "inbet/pseudo_labels.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "inbet/vectorize.hpp"

namespace inbet {

namespace {

// Destinations for the vertices of `g` given destinations of `next`.
std::vector<Vec2> step_back(const LineGraph& g, const LineGraph& next,
                            const std::vector<Vec2>& next_dest) {
  if (!g.ref_ids || !next.ref_ids) throw Error("backtrack_pseudo_shift: frames need ref_ids");
  std::unordered_map<std::int64_t, int> in_next;
  for (int j = 0; j < next.size(); ++j) in_next.emplace((*next.ref_ids)[j], j);

  const int k = g.size();
  std::vector<Vec2> shift(k);
  std::vector<std::uint8_t> assigned(k, 0), fixed(k, 0);
  for (int i = 0; i < k; ++i) {
    auto it = in_next.find((*g.ref_ids)[i]);
    if (it == in_next.end()) continue;
    shift[i] = next_dest[it->second] - g.vertices[i];
    assigned[i] = fixed[i] = 1;
  }

  const auto adj = adjacency_lists(g);
  for (int sweep = 0; sweep < kMaxNeighborSweeps; ++sweep) {
    std::vector<Vec2> next_shift = shift;
    std::vector<std::uint8_t> next_assigned = assigned;
    double change = 0.0;
    bool grew = false;
    for (int i = 0; i < k; ++i) {
      if (fixed[i]) continue;
      Vec2 sum;
      int n = 0;
      for (int j : adj[i])
        if (assigned[j]) {
          sum = sum + shift[j];
          ++n;
        }
      if (n == 0) continue;
      const Vec2 mean = (1.0 / n) * sum;
      if (assigned[i]) change = std::max(change, norm(mean - shift[i]));
      else grew = true;
      next_shift[i] = mean;
      next_assigned[i] = 1;
    }
    shift = std::move(next_shift);
    assigned = std::move(next_assigned);
    if (!grew && change < kNeighborTolerance) break;
  }

  std::vector<Vec2> dest(k);
  for (int i = 0; i < k; ++i)
    dest[i] = fixed[i] ? next_dest[in_next.at((*g.ref_ids)[i])]
                       : g.vertices[i] + (assigned[i] ? shift[i] : Vec2{});
  return dest;
}

}  // namespace

Mat backtrack_pseudo_shift(std::span<const LineGraph* const> frames) {
  if (frames.size() < 2) throw Error("backtrack_pseudo_shift: need at least two frames");
  std::vector<Vec2> dest = frames.back()->vertices;
  for (std::size_t z = frames.size() - 1; z-- > 0;)
    dest = step_back(*frames[z], *frames[z + 1], dest);
  const auto& v0 = frames.front()->vertices;
  Mat r(v0.size(), 2);
  for (std::size_t i = 0; i < v0.size(); ++i) {
    r(i, 0) = dest[i].x - v0[i].x;
    r(i, 1) = dest[i].y - v0[i].y;
  }
  return r;
}

Mat backtrack_pseudo_shift(std::span<const LineGraph> frames) {
  std::vector<const LineGraph*> ptrs;
  for (const auto& f : frames) ptrs.push_back(&f);
  return backtrack_pseudo_shift(std::span<const LineGraph* const>(ptrs));
}

std::vector<std::uint8_t> pseudo_visibility(const std::vector<Vec2>& v0, const Mat& r_half,
                                            const RasterImage& frame_t) {
  if (r_half.rows() != v0.size() || r_half.cols() != 2)
    throw Error("pseudo_visibility: shift field must be K x 2");
  const Mask lines = dilate3x3(binarize(frame_t));
  std::vector<std::uint8_t> out(v0.size(), 0);
  for (std::size_t i = 0; i < v0.size(); ++i) {
    const int x = round_half_up(v0[i].x + r_half(i, 0));
    const int y = round_half_up(v0[i].y + r_half(i, 1));
    out[i] = lines.get_or(x, y, false) ? 1 : 0;
  }
  return out;
}

}  // namespace inbet
