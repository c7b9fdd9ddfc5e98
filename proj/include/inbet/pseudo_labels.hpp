#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "inbet/geom.hpp"
#include "inbet/image.hpp"

namespace inbet {

inline constexpr int kMaxNeighborSweeps = 100;
inline constexpr double kNeighborTolerance = 1e-6;

// Shift field that carries every vertex of frames.front() to frames.back().
// Walks back from the last frame: a vertex matched by ref_id in the next
// frame inherits that vertex's destination, an unmatched one takes the mean
// shift of its assigned neighbours (Jacobi sweeps to a fixpoint; 0 if none).
// Destinations are propagated instead of summed shifts, so fully matched
// chains reproduce the direct displacement bit for bit.
Mat backtrack_pseudo_shift(std::span<const LineGraph> frames);
Mat backtrack_pseudo_shift(std::span<const LineGraph* const> frames);

// 1 where round(V0 + r_half) falls on a line pixel of the binarized image
// after one 3x3 dilation; 0 outside the image.
std::vector<std::uint8_t> pseudo_visibility(const std::vector<Vec2>& v0, const Mat& r_half,
                                            const RasterImage& frame_t);

}  // namespace inbet
