#pragma once

#include <vector>

#include "inbet/geom.hpp"
#include "inbet/image.hpp"

namespace inbet {

// Ordered 2D pixel coordinates; at least two points, consecutive points distinct.
struct Polyline {
  std::vector<Vec2> points;
  bool closed() const { return points.size() > 2 && points.front() == points.back(); }
};

// Line pixels are those darker than 0.99 x the brightest pixel.
Mask binarize(const RasterImage& image);

// Zhang-Suen thinning followed by removal of corner pixels that are redundant
// for 8-connectivity, leaving a one-pixel-wide skeleton.
Mask skeletonize(const Mask& mask);

// Splits a skeleton into arcs between endpoint (1 neighbor) and junction
// (>= 3 neighbors) pixels. Adjacent junction pixels form one cluster whose
// representative is the pixel with most neighbors (lowest y, then x, on ties).
std::vector<Polyline> trace_polylines(const Mask& skeleton);

// Ramer-Douglas-Peucker. Closed polylines are first split at the point farthest
// from their start so that both halves keep their shape.
Polyline simplify(const Polyline& polyline, double tol);

inline constexpr double kDefaultSimplifyTol = 1.5;

// binarize -> skeletonize -> trace -> simplify -> LineGraph -> merge (0.5 px).
LineGraph geometrize(const RasterImage& image, double tol = kDefaultSimplifyTol);

// Distance from p to segment ab.
double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

}  // namespace inbet
