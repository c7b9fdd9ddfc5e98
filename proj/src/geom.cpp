#include "inbet/geom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace inbet {

using nlohmann::json;

double norm(Vec2 v) { return std::hypot(v.x, v.y); }
double distance(Vec2 a, Vec2 b) { return norm(a - b); }

void validate(const LineGraph& g) {
  if (g.width <= 0) throw GraphError("width: must be > 0, got " + std::to_string(g.width));
  if (g.height <= 0) throw GraphError("height: must be > 0, got " + std::to_string(g.height));
  const int k = g.size();
  for (int i = 0; i < k; ++i) {
    const Vec2 v = g.vertices[i];
    if (!std::isfinite(v.x) || !std::isfinite(v.y))
      throw GraphError("vertices[" + std::to_string(i) + "]: non-finite coordinate");
    if (v.x < 0.0 || v.x > g.width - 1 || v.y < 0.0 || v.y > g.height - 1)
      throw GraphError("vertices[" + std::to_string(i) + "]: outside the image bounds");
  }
  std::vector<Edge> seen;
  seen.reserve(g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    auto [i, j] = g.edges[e];
    const std::string where = "edges[" + std::to_string(e) + "]";
    if (i < 0 || j < 0 || i >= k || j >= k) throw GraphError(where + ": index out of range");
    if (i == j) throw GraphError(where + ": self-loop");
    seen.emplace_back(std::min(i, j), std::max(i, j));
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw GraphError("edges: duplicate edge");
  if (g.ref_ids) {
    if (static_cast<int>(g.ref_ids->size()) != k)
      throw GraphError("ref_ids: length " + std::to_string(g.ref_ids->size()) +
                       " does not match vertex count " + std::to_string(k));
    std::unordered_set<std::int64_t> ids;
    for (int i = 0; i < k; ++i) {
      const auto id = (*g.ref_ids)[i];
      if (id < 0) throw GraphError("ref_ids[" + std::to_string(i) + "]: negative id");
      if (!ids.insert(id).second)
        throw GraphError("ref_ids[" + std::to_string(i) + "]: duplicate id " + std::to_string(id));
    }
  }
}

void canonicalize_edges(std::vector<Edge>& edges) {
  for (auto& [i, j] : edges)
    if (i > j) std::swap(i, j);
  std::erase_if(edges, [](const Edge& e) { return e.first == e.second; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

std::vector<std::vector<int>> adjacency_lists(const LineGraph& g) {
  std::vector<std::vector<int>> adj(g.vertices.size());
  for (auto [i, j] : g.edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

std::string graph_to_json(const LineGraph& g) {
  json j;
  j["width"] = g.width;
  j["height"] = g.height;
  json verts = json::array();
  for (const Vec2& v : g.vertices) verts.push_back({v.x, v.y});
  j["vertices"] = std::move(verts);
  json edges = json::array();
  for (auto [a, b] : g.edges) edges.push_back({std::min(a, b), std::max(a, b)});
  j["edges"] = std::move(edges);
  if (g.ref_ids) j["ref_ids"] = *g.ref_ids;
  return j.dump();
}

LineGraph graph_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw GraphError(std::string("parse: ") + e.what());
  }
  if (!j.is_object()) throw GraphError("parse: top level must be an object");
  LineGraph g;
  try {
    for (const char* key : {"width", "height", "vertices", "edges"})
      if (!j.contains(key)) throw GraphError(std::string(key) + ": missing");
    g.width = j.at("width").get<int>();
    g.height = j.at("height").get<int>();
    const auto& verts = j.at("vertices");
    if (!verts.is_array()) throw GraphError("vertices: must be an array");
    for (std::size_t i = 0; i < verts.size(); ++i) {
      const auto& v = verts[i];
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw GraphError("vertices[" + std::to_string(i) + "]: expected [x, y]");
      g.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
    }
    const auto& edges = j.at("edges");
    if (!edges.is_array()) throw GraphError("edges: must be an array");
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto& p = edges[e];
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() ||
          !p[1].is_number_integer())
        throw GraphError("edges[" + std::to_string(e) + "]: expected [i, j] integers");
      g.edges.emplace_back(p[0].get<int>(), p[1].get<int>());
    }
    if (j.contains("ref_ids")) {
      const auto& r = j.at("ref_ids");
      if (!r.is_array()) throw GraphError("ref_ids: must be an array");
      std::vector<std::int64_t> ids;
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (!r[i].is_number_integer())
          throw GraphError("ref_ids[" + std::to_string(i) + "]: expected integer");
        ids.push_back(r[i].get<std::int64_t>());
      }
      g.ref_ids = std::move(ids);
    }
  } catch (const json::exception& e) {
    throw GraphError(std::string("parse: ") + e.what());
  }
  validate(g);
  for (auto& [a, b] : g.edges)
    if (a > b) std::swap(a, b);
  return g;
}

LineGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return graph_from_json(ss.str());
}

void save_graph(const LineGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << graph_to_json(graph) << "\n";
  if (!out) throw Error("write failed for " + path.string());
}

namespace {

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  // Keeps the smaller index as the root.
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b)
      parent[b] = a;
    else
      parent[a] = b;
  }
};

}  // namespace

LineGraph merge_close_vertices(const LineGraph& graph, double eps) {
  if (eps < 0.0) throw Error("merge_close_vertices: eps must be >= 0");
  const int k = graph.size();
  DisjointSet ds(k);
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return graph.vertices[a].x < graph.vertices[b].x ||
           (graph.vertices[a].x == graph.vertices[b].x && a < b);
  });
  for (int s = 0; s < k; ++s) {
    const Vec2 p = graph.vertices[order[s]];
    for (int t = s + 1; t < k; ++t) {
      const Vec2 q = graph.vertices[order[t]];
      if (q.x - p.x > eps) break;
      if (distance(p, q) <= eps) ds.unite(order[s], order[t]);
    }
  }

  LineGraph out;
  out.width = graph.width;
  out.height = graph.height;
  std::vector<int> new_index(k, -1);
  for (int i = 0; i < k; ++i) {
    if (ds.find(i) != i) continue;
    new_index[i] = static_cast<int>(out.vertices.size());
    out.vertices.push_back(graph.vertices[i]);
  }
  if (graph.ref_ids) {
    std::vector<std::int64_t> ids;
    for (int i = 0; i < k; ++i)
      if (ds.find(i) == i) ids.push_back((*graph.ref_ids)[i]);
    out.ref_ids = std::move(ids);
  }
  for (auto [a, b] : graph.edges) out.edges.emplace_back(new_index[ds.find(a)], new_index[ds.find(b)]);
  canonicalize_edges(out.edges);
  return out;
}

std::vector<std::pair<int, int>> midpoint_line(int x0, int y0, int x1, int y1) {
  if (std::pair(x1, y1) < std::pair(x0, y0)) {
    std::swap(x0, x1);
    std::swap(y0, y1);
  }
  std::vector<std::pair<int, int>> pts;
  const int dx = std::abs(x1 - x0);
  const int dy = std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  if (dx >= dy) {
    // x-major: one pixel per column; step y when the midpoint falls past the line.
    int err = 2 * dy - dx;
    int y = y0;
    for (int x = x0;; x += sx) {
      pts.emplace_back(x, y);
      if (x == x1) break;
      if (err > 0) {
        y += sy;
        err -= 2 * dx;
      }
      err += 2 * dy;
    }
  } else {
    int err = 2 * dx - dy;
    int x = x0;
    for (int y = y0;; y += sy) {
      pts.emplace_back(x, y);
      if (y == y1) break;
      if (err > 0) {
        x += sx;
        err -= 2 * dy;
      }
      err += 2 * dx;
    }
  }
  return pts;
}

RasterImage rasterize(const LineGraph& graph, int line_width) {
  if (line_width < 1) throw Error("rasterize: line_width must be >= 1");
  RasterImage img(graph.width, graph.height, 1.0);
  const int lo = -(line_width - 1) / 2;
  const int hi = line_width / 2;
  auto stamp = [&](int cx, int cy) {
    for (int dy = lo; dy <= hi; ++dy)
      for (int dx = lo; dx <= hi; ++dx)
        if (img.contains(cx + dx, cy + dy)) img.at(cx + dx, cy + dy) = 0.0;
  };
  std::vector<std::uint8_t> has_edge(graph.vertices.size(), 0);
  for (auto [a, b] : graph.edges) {
    has_edge[a] = has_edge[b] = 1;
    const Vec2 p = graph.vertices[a];
    const Vec2 q = graph.vertices[b];
    for (auto [x, y] : midpoint_line(round_half_up(p.x), round_half_up(p.y), round_half_up(q.x),
                                     round_half_up(q.y)))
      stamp(x, y);
  }
  for (std::size_t i = 0; i < graph.vertices.size(); ++i)
    if (!has_edge[i]) stamp(round_half_up(graph.vertices[i].x), round_half_up(graph.vertices[i].y));
  return img;
}

Matching Matching::from_pairs(std::vector<std::pair<int, int>> pairs, int k0, int k1) {
  Matching m;
  m.occluded_0.assign(k0, 1);
  m.occluded_1.assign(k1, 1);
  std::sort(pairs.begin(), pairs.end());
  for (auto [i, j] : pairs) {
    if (i < 0 || i >= k0 || j < 0 || j >= k1) throw Error("matching: pair index out of range");
    if (!m.occluded_0[i] || !m.occluded_1[j]) throw Error("matching: vertex used twice");
    m.occluded_0[i] = 0;
    m.occluded_1[j] = 0;
  }
  m.pairs = std::move(pairs);
  return m;
}

int Matching::match_of_0(int i) const {
  auto it = std::lower_bound(pairs.begin(), pairs.end(), std::pair(i, -1));
  return (it != pairs.end() && it->first == i) ? it->second : -1;
}

Matching derive_matching(const LineGraph& g0, const LineGraph& g1) {
  if (!g0.ref_ids || !g1.ref_ids) throw GraphError("derive_matching: missing ref_ids");
  std::unordered_map<std::int64_t, int> index1;
  index1.reserve(g1.ref_ids->size());
  for (int j = 0; j < g1.size(); ++j) index1.emplace((*g1.ref_ids)[j], j);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < g0.size(); ++i) {
    auto it = index1.find((*g0.ref_ids)[i]);
    if (it != index1.end()) pairs.emplace_back(i, it->second);
  }
  return Matching::from_pairs(std::move(pairs), g0.size(), g1.size());
}

PairStats graph_stats(const LineGraph& g0, const LineGraph& g1) {
  const Matching m = derive_matching(g0, g1);
  PairStats s;
  const int total = g0.size() + g1.size();
  const int matched = static_cast<int>(m.pairs.size());
  s.occlusion_rate = total == 0 ? 0.0 : double(total - 2 * matched) / total;
  if (matched == 0) {
    s.no_matches = true;
    return s;
  }
  double sum = 0.0;
  for (auto [i, j] : m.pairs) {
    const double d = distance(g0.vertices[i], g1.vertices[j]);
    sum += d;
    s.max_shift = std::max(s.max_shift, d);
  }
  s.avg_shift = sum / matched;
  return s;
}

}  // namespace inbet
