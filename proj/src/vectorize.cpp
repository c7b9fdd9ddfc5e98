#include "inbet/vectorize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace inbet {

namespace {

// Neighbor offsets in Zhang-Suen order P2..P9: N, NE, E, SE, S, SW, W, NW.
constexpr std::array<int, 8> kDx = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr std::array<int, 8> kDy = {-1, -1, 0, 1, 1, 1, 0, -1};

std::array<int, 8> ring(const Mask& m, int x, int y) {
  std::array<int, 8> p{};
  for (int k = 0; k < 8; ++k) p[k] = m.get_or(x + kDx[k], y + kDy[k], false) ? 1 : 0;
  return p;
}

int neighbor_count(const Mask& m, int x, int y) {
  const auto p = ring(m, x, y);
  int n = 0;
  for (int v : p) n += v;
  return n;
}

bool zhang_suen_pass(Mask& m, int step) {
  std::vector<std::pair<int, int>> kill;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      if (!m.at(x, y)) continue;
      const auto p = ring(m, x, y);
      int b = 0;
      for (int v : p) b += v;
      if (b < 2 || b > 6) continue;
      int a = 0;
      for (int k = 0; k < 8; ++k) a += (p[k] == 0 && p[(k + 1) % 8] == 1) ? 1 : 0;
      if (a != 1) continue;
      // p[0]=P2 (N), p[2]=P4 (E), p[4]=P6 (S), p[6]=P8 (W)
      if (step == 0) {
        if (p[0] * p[2] * p[4] != 0 || p[2] * p[4] * p[6] != 0) continue;
      } else {
        if (p[0] * p[2] * p[6] != 0 || p[0] * p[4] * p[6] != 0) continue;
      }
      kill.emplace_back(x, y);
    }
  for (auto [x, y] : kill) m.set(x, y, false);
  return !kill.empty();
}

// Yokoi connectivity number for 8-connected foreground. Neighbors are taken
// counter-clockwise from E: E, NE, N, NW, W, SW, S, SE.
int connectivity_number8(const Mask& m, int x, int y) {
  static constexpr std::array<int, 8> dx = {1, 1, 0, -1, -1, -1, 0, 1};
  static constexpr std::array<int, 8> dy = {0, -1, -1, -1, 0, 1, 1, 1};
  std::array<int, 9> inv{};
  for (int k = 0; k < 8; ++k) inv[k] = m.get_or(x + dx[k], y + dy[k], false) ? 0 : 1;
  inv[8] = inv[0];
  int n = 0;
  for (int k = 0; k < 8; k += 2) n += inv[k] - inv[k] * inv[k + 1] * inv[(k + 2) % 8];
  return n;
}

}  // namespace

Mask binarize(const RasterImage& image) {
  Mask mask(image.width, image.height);
  if (image.intensities.empty()) return mask;
  const double peak = *std::max_element(image.intensities.begin(), image.intensities.end());
  const double cut = 0.99 * peak;
  for (std::size_t i = 0; i < image.intensities.size(); ++i)
    mask.bits[i] = image.intensities[i] < cut ? 1 : 0;
  return mask;
}

Mask skeletonize(const Mask& mask) {
  Mask m = mask;
  bool changed = true;
  while (changed) {
    changed = zhang_suen_pass(m, 0);
    changed = zhang_suen_pass(m, 1) || changed;
  }
  // Drop simple, non-end pixels (4-connected staircase corners).
  changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x) {
        if (!m.at(x, y) || neighbor_count(m, x, y) < 2) continue;
        if (connectivity_number8(m, x, y) == 1) {
          m.set(x, y, false);
          changed = true;
        }
      }
  }
  return m;
}

std::vector<Polyline> trace_polylines(const Mask& skel) {
  const int w = skel.width;
  const int h = skel.height;
  auto id = [w](int x, int y) { return y * w + x; };
  std::vector<int> degree(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (skel.at(x, y)) degree[id(x, y)] = neighbor_count(skel, x, y);

  // Node clusters: endpoints alone, junction pixels grouped by adjacency.
  std::vector<int> cluster(degree.size(), -1);
  std::vector<std::pair<int, int>> rep;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!skel.at(x, y) || cluster[id(x, y)] >= 0) continue;
      const int d = degree[id(x, y)];
      if (d == 1) {
        cluster[id(x, y)] = static_cast<int>(rep.size());
        rep.emplace_back(x, y);
      } else if (d >= 3) {
        const int c = static_cast<int>(rep.size());
        std::vector<std::pair<int, int>> stack{{x, y}};
        cluster[id(x, y)] = c;
        std::pair<int, int> best{x, y};
        while (!stack.empty()) {
          auto [cx, cy] = stack.back();
          stack.pop_back();
          const int bd = degree[id(best.first, best.second)];
          const int cd = degree[id(cx, cy)];
          if (cd > bd || (cd == bd && std::pair(cy, cx) < std::pair(best.second, best.first)))
            best = {cx, cy};
          for (int k = 0; k < 8; ++k) {
            const int nx = cx + kDx[k], ny = cy + kDy[k];
            if (!skel.get_or(nx, ny, false) || degree[id(nx, ny)] < 3 || cluster[id(nx, ny)] >= 0)
              continue;
            cluster[id(nx, ny)] = c;
            stack.emplace_back(nx, ny);
          }
        }
        rep.push_back(best);
      }
    }

  auto to_vec = [](std::pair<int, int> p) { return Vec2{double(p.first), double(p.second)}; };
  std::vector<Polyline> out;
  std::vector<std::uint8_t> visited(degree.size(), 0);
  std::vector<std::pair<int, int>> direct_links;

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!skel.at(x, y) || cluster[id(x, y)] < 0) continue;
      const int c = cluster[id(x, y)];
      for (int k = 0; k < 8; ++k) {
        const int qx = x + kDx[k], qy = y + kDy[k];
        if (!skel.get_or(qx, qy, false)) continue;
        const int qc = cluster[id(qx, qy)];
        if (qc == c) continue;
        if (qc >= 0) {
          const std::pair<int, int> key{std::min(c, qc), std::max(c, qc)};
          if (std::find(direct_links.begin(), direct_links.end(), key) != direct_links.end())
            continue;
          direct_links.push_back(key);
          out.push_back({{to_vec(rep[c]), to_vec(rep[qc])}});
          continue;
        }
        if (visited[id(qx, qy)]) continue;
        Polyline line{{to_vec(rep[c])}};
        std::pair<int, int> prev{x, y};
        std::pair<int, int> cur{qx, qy};
        while (true) {
          visited[id(cur.first, cur.second)] = 1;
          line.points.push_back(to_vec(cur));
          std::pair<int, int> next{-1, -1};
          bool end_at_node = false;
          for (int j = 0; j < 8; ++j) {
            const int nx = cur.first + kDx[j], ny = cur.second + kDy[j];
            if (!skel.get_or(nx, ny, false) || std::pair(nx, ny) == prev) continue;
            const int nc = cluster[id(nx, ny)];
            if (nc >= 0) {
              // Never step back into the cluster we just left on the first step.
              if (line.points.size() == 2 && nc == c && cluster[id(prev.first, prev.second)] == c)
                continue;
              next = rep[nc];
              end_at_node = true;
              break;
            }
            if (!visited[id(nx, ny)]) next = {nx, ny};
          }
          if (end_at_node) {
            line.points.push_back(to_vec(next));
            break;
          }
          if (next.first < 0) break;
          prev = cur;
          cur = next;
        }
        if (line.points.size() >= 2) out.push_back(std::move(line));
      }
    }

  // Junction-free closed loops.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!skel.at(x, y) || visited[id(x, y)] || degree[id(x, y)] != 2) continue;
      Polyline line;
      std::pair<int, int> cur{x, y};
      std::pair<int, int> prev{-1, -1};
      while (true) {
        visited[id(cur.first, cur.second)] = 1;
        line.points.push_back(to_vec(cur));
        std::pair<int, int> next{-1, -1};
        bool closes = false;
        for (int j = 0; j < 8; ++j) {
          const int nx = cur.first + kDx[j], ny = cur.second + kDy[j];
          if (!skel.get_or(nx, ny, false) || std::pair(nx, ny) == prev) continue;
          if (std::pair(nx, ny) == std::pair(x, y) && line.points.size() > 2) closes = true;
          if (!visited[id(nx, ny)]) {
            next = {nx, ny};
            break;
          }
        }
        if (next.first < 0) {
          if (closes) line.points.push_back(to_vec({x, y}));
          break;
        }
        prev = cur;
        cur = next;
      }
      if (line.points.size() >= 2) out.push_back(std::move(line));
    }
  return out;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

namespace {

std::vector<Vec2> rdp_open(const std::vector<Vec2>& pts, double tol) {
  const std::size_t n = pts.size();
  if (n <= 2) return pts;
  std::vector<std::uint8_t> keep(n, 0);
  keep[0] = 1;
  keep[n - 1] = 1;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n - 1}};
  while (!stack.empty()) {
    auto [lo, hi] = stack.back();
    stack.pop_back();
    if (hi <= lo + 1) continue;
    double best = -1.0;
    std::size_t at = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double d = point_segment_distance(pts[i], pts[lo], pts[hi]);
      if (d > best) {
        best = d;
        at = i;
      }
    }
    // Splitting at d == tol keeps every point when tol is 0.
    if (best > tol || (tol == 0.0 && best >= 0.0)) {
      keep[at] = 1;
      stack.emplace_back(lo, at);
      stack.emplace_back(at, hi);
    }
  }
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(pts[i]);
  return out;
}

}  // namespace

Polyline simplify(const Polyline& polyline, double tol) {
  if (tol < 0.0) throw Error("simplify: tol must be >= 0");
  const auto& pts = polyline.points;
  if (!polyline.closed()) return {rdp_open(pts, tol)};
  std::size_t far = 0;
  double best = -1.0;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double d = distance(pts[i], pts.front());
    if (d > best) {
      best = d;
      far = i;
    }
  }
  std::vector<Vec2> a(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(far) + 1);
  std::vector<Vec2> b(pts.begin() + static_cast<std::ptrdiff_t>(far), pts.end());
  auto sa = rdp_open(a, tol);
  auto sb = rdp_open(b, tol);
  sa.insert(sa.end(), sb.begin() + 1, sb.end());
  return {std::move(sa)};
}

LineGraph geometrize(const RasterImage& image, double tol) {
  LineGraph g;
  g.width = image.width;
  g.height = image.height;
  const Mask skel = skeletonize(binarize(image));
  std::map<std::pair<double, double>, int> index;
  auto vertex = [&](Vec2 p) {
    auto [it, fresh] = index.emplace(std::pair(p.x, p.y), g.size());
    if (fresh) g.vertices.push_back(p);
    return it->second;
  };
  for (const Polyline& line : trace_polylines(skel)) {
    const Polyline s = simplify(line, tol);
    int prev = vertex(s.points.front());
    for (std::size_t i = 1; i < s.points.size(); ++i) {
      const int cur = vertex(s.points[i]);
      if (cur != prev) g.edges.emplace_back(prev, cur);
      prev = cur;
    }
  }
  for (int y = 0; y < skel.height; ++y)
    for (int x = 0; x < skel.width; ++x)
      if (skel.at(x, y) && neighbor_count(skel, x, y) == 0) vertex({double(x), double(y)});
  canonicalize_edges(g.edges);
  g = merge_close_vertices(g, kDefaultMergeEps);
  validate(g);
  return g;
}

}  // namespace inbet
