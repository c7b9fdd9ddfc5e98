#include "doctest.h"

#include "inbet/vectorize.hpp"
#include "test_util.hpp"

using namespace inbet;

namespace {

// Literal recursive Ramer-Douglas-Peucker.
void rdp_ref(const std::vector<Vec2>& p, std::size_t lo, std::size_t hi, double tol,
             std::vector<std::uint8_t>& keep) {
  if (hi <= lo + 1) return;
  double best = -1;
  std::size_t at = lo;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    const double d = point_segment_distance(p[i], p[lo], p[hi]);
    if (d > best) {
      best = d;
      at = i;
    }
  }
  if (best > tol) {
    keep[at] = 1;
    rdp_ref(p, lo, at, tol, keep);
    rdp_ref(p, at, hi, tol, keep);
  }
}

bool one_pixel_wide(const Mask& m) {
  for (int y = 0; y + 1 < m.height; ++y)
    for (int x = 0; x + 1 < m.width; ++x)
      if (m.at(x, y) && m.at(x + 1, y) && m.at(x, y + 1) && m.at(x + 1, y + 1)) return false;
  return true;
}

}  // namespace

TEST_CASE("binarize uses 0.99 of the brightest pixel") {
  RasterImage im(3, 1);
  im.intensities = {1.0, 0.995, 0.98};
  const Mask m = binarize(im);
  CHECK_FALSE(m.at(0, 0));
  CHECK_FALSE(m.at(1, 0));
  CHECK(m.at(2, 0));
}

TEST_CASE("simplify: tolerance 0 keeps every point, straight runs collapse") {
  Polyline p;
  for (int i = 0; i <= 10; ++i) p.points.push_back({double(i), 0.0});
  CHECK(simplify(p, 1.0).points == std::vector<Vec2>{{0, 0}, {10, 0}});
  Polyline zig{{{0, 0}, {1, 1}, {2, 0}, {3, 1}}};
  CHECK(simplify(zig, 0.0).points == zig.points);
}

TEST_CASE("simplify equals literal recursive RDP on open polylines") {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    Polyline p;
    const int n = 2 + static_cast<int>(rng.below(25));
    for (int i = 0; i < n; ++i) p.points.push_back({i * 2.0, rng.uniform(-3, 3)});
    const double tol = rng.uniform(0, 2);
    std::vector<std::uint8_t> keep(n, 0);
    keep[0] = keep[n - 1] = 1;
    rdp_ref(p.points, 0, n - 1, tol, keep);
    std::vector<Vec2> expect;
    for (int i = 0; i < n; ++i)
      if (keep[i]) expect.push_back(p.points[i]);
    CHECK(simplify(p, tol).points == expect);
  }
}

TEST_CASE("closed polylines keep a loop shape") {
  Polyline sq{{{0, 0}, {5, 0}, {10, 0}, {10, 10}, {0, 10}, {0, 0}}};
  const Polyline s = simplify(sq, 0.5);
  CHECK(s.points.front() == s.points.back());
  CHECK(s.points.size() == 5);
}

TEST_CASE("skeletonize thins a thick bar to a connected one-pixel line") {
  Mask m(30, 12);
  for (int y = 4; y <= 7; ++y)
    for (int x = 3; x <= 26; ++x) m.set(x, y, true);
  const Mask s = skeletonize(m);
  CHECK(s.count() > 10);
  CHECK(one_pixel_wide(s));
  CHECK(count_components8(s) == 1);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 30; ++x)
      if (s.at(x, y)) CHECK(m.at(x, y));
}

TEST_CASE("trace_polylines splits at junctions and closes loops") {
  Mask t(21, 21);
  for (int x = 2; x <= 18; ++x) t.set(x, 10, true);
  for (int y = 2; y < 10; ++y) t.set(10, y, true);
  const auto lines = trace_polylines(t);
  CHECK(lines.size() == 3);

  Mask ring(12, 12);
  for (int i = 2; i <= 9; ++i) {
    ring.set(i, 2, true);
    ring.set(i, 9, true);
    ring.set(2, i, true);
    ring.set(9, i, true);
  }
  const auto loops = trace_polylines(skeletonize(ring));
  REQUIRE(loops.size() == 1);
  CHECK(loops[0].closed());
}

TEST_CASE("geometrize recovers the corners of a rasterized L") {
  LineGraph g;
  g.width = g.height = 64;
  g.vertices = {{10, 10}, {10, 50}, {50, 50}};
  g.edges = {{0, 1}, {1, 2}};
  const LineGraph v = geometrize(rasterize(g, 2));
  CHECK_NOTHROW(validate(v));
  CHECK_FALSE(v.has_ref_ids());
  REQUIRE(v.size() == 3);
  CHECK(v.edges.size() == 2);
  for (const Vec2 p : g.vertices) {
    double best = 1e9;
    for (const Vec2 q : v.vertices) best = std::min(best, distance(p, q));
    CHECK(best < 2.5);
  }
}

TEST_CASE("geometrize of a blank image is empty") {
  const LineGraph v = geometrize(RasterImage(16, 16));
  CHECK(v.size() == 0);
  CHECK(v.width == 16);
}
