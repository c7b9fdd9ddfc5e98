#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "inbet/image.hpp"
#include "inbet/tensor.hpp"

namespace inbet {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

double norm(Vec2 v);
double distance(Vec2 a, Vec2 b);

using Edge = std::pair<int, int>;

// Geometrized line drawing: endpoint vertices, binary adjacency stored as an
// edge list with i < j, and optional persistent reference IDs.
struct LineGraph {
  int width = 0;
  int height = 0;
  std::vector<Vec2> vertices;
  std::vector<Edge> edges;
  std::optional<std::vector<std::int64_t>> ref_ids;

  int size() const { return static_cast<int>(vertices.size()); }
  bool has_ref_ids() const { return ref_ids.has_value(); }

  friend bool operator==(const LineGraph&, const LineGraph&) = default;
};

class GraphError : public Error {
 public:
  using Error::Error;
};

// Throws GraphError naming the offending field and index.
void validate(const LineGraph& graph);

// Sorts every edge to (min, max), sorts the list and drops duplicates and self-loops.
void canonicalize_edges(std::vector<Edge>& edges);

std::vector<std::vector<int>> adjacency_lists(const LineGraph& graph);

std::string graph_to_json(const LineGraph& graph);
LineGraph graph_from_json(const std::string& text);
LineGraph load_graph(const std::filesystem::path& path);
void save_graph(const LineGraph& graph, const std::filesystem::path& path);

// Collapses every connected component of the "distance <= eps" relation onto
// its lowest-index vertex, keeping that vertex's position and ref_id.
LineGraph merge_close_vertices(const LineGraph& graph, double eps);

inline constexpr double kDefaultMergeEps = 0.5;

// Round-half-up to the nearest integer pixel.
inline int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

// Integer midpoint line between two pixels, drawn from the lexicographically
// smaller (x, y) endpoint. Returns the visited pixel centers in order.
std::vector<std::pair<int, int>> midpoint_line(int x0, int y0, int x1, int y1);

// Square brush of side `line_width` covers offsets [-(w-1)/2, w/2] on both axes.
RasterImage rasterize(const LineGraph& graph, int line_width);

struct SpectralDecomposition {
  std::vector<double> eigenvalues;  // ascending, all K of them
  Mat eigenvectors;                 // K x K, column c pairs with eigenvalues[c]
  int components = 0;
};

Mat laplacian(const LineGraph& graph);
SpectralDecomposition laplacian_eigen(const LineGraph& graph);

// K x dim per-vertex spectral coordinates; see the header comment of spectral.cpp.
Mat spectral_embedding(const LineGraph& graph, int dim);

struct Matching {
  std::vector<std::pair<int, int>> pairs;  // sorted by first index
  std::vector<std::uint8_t> occluded_0;
  std::vector<std::uint8_t> occluded_1;

  // Builds the occlusion flags from `pairs`; throws if a vertex appears twice.
  static Matching from_pairs(std::vector<std::pair<int, int>> pairs, int k0, int k1);
  int match_of_0(int i) const;

  friend bool operator==(const Matching&, const Matching&) = default;
};

Matching derive_matching(const LineGraph& g0, const LineGraph& g1);

struct PairStats {
  double occlusion_rate = 0.0;
  double avg_shift = 0.0;
  double max_shift = 0.0;
  bool no_matches = false;
};

PairStats graph_stats(const LineGraph& g0, const LineGraph& g1);

}  // namespace inbet
