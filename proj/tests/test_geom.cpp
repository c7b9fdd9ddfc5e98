#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <set>

#include "inbet/geom.hpp"
#include "test_util.hpp"

using namespace inbet;

TEST_CASE("graph JSON round-trips and omits absent ref_ids") {
  Rng rng(5);
  LineGraph g = testutil::random_graph(rng, 12, 40);
  CHECK(graph_from_json(graph_to_json(g)) == g);
  g.ref_ids.reset();
  const std::string text = graph_to_json(g);
  CHECK(text.find("ref_ids") == std::string::npos);
  CHECK(graph_from_json(text) == g);

  const auto path = std::filesystem::temp_directory_path() / "inbet_graph.json";
  save_graph(g, path);
  CHECK(load_graph(path) == g);
}

TEST_CASE("graph validation names the offending field") {
  const std::string base = R"({"width": 10, "height": 10, "vertices": [[1,1],[2,2]], )";
  CHECK_NOTHROW(graph_from_json(base + R"("edges": [[0,1]]})"));
  CHECK_NOTHROW(graph_from_json(base + R"("edges": [[1,0]]})"));
  CHECK_THROWS_AS(graph_from_json(base + R"("edges": [[1,1]]})"), GraphError);
  CHECK_THROWS_AS(graph_from_json(base + R"("edges": [[0,2]]})"), GraphError);
  CHECK_THROWS_AS(graph_from_json(base + R"("edges": [], "ref_ids": [4, 4]})"), GraphError);
  CHECK_THROWS_AS(graph_from_json(R"({"width": 10, "height": 10, "vertices": [[10,1]], "edges": []})"),
                  GraphError);
  try {
    graph_from_json(R"({"width": 10, "height": 10, "vertices": [[1,1],[-1,0]], "edges": []})");
    FAIL("expected a GraphError");
  } catch (const GraphError& e) {
    CHECK(std::string(e.what()).find("vertices") != std::string::npos);
  }
  CHECK_THROWS(graph_from_json("{not json"));
}

TEST_CASE("merge_close_vertices equals the pairwise-component oracle") {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    LineGraph g = testutil::random_graph(rng, 2 + static_cast<int>(rng.below(30)), 12);
    const double eps = rng.uniform(0.2, 1.5);
    const int k = g.size();

    // Oracle: flood fill over the "distance <= eps" relation.
    std::vector<int> comp(k, -1);
    for (int s = 0; s < k; ++s) {
      if (comp[s] >= 0) continue;
      std::vector<int> stack{s};
      comp[s] = s;
      while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int u = 0; u < k; ++u)
          if (comp[u] < 0 && distance(g.vertices[v], g.vertices[u]) <= eps) {
            comp[u] = s;
            stack.push_back(u);
          }
      }
    }
    std::vector<int> reps;
    for (int i = 0; i < k; ++i)
      if (comp[i] == i) reps.push_back(i);

    const LineGraph m = merge_close_vertices(g, eps);
    REQUIRE(m.size() == static_cast<int>(reps.size()));
    std::vector<int> new_of(k);
    for (int i = 0; i < k; ++i)
      new_of[i] = static_cast<int>(std::lower_bound(reps.begin(), reps.end(), comp[i]) - reps.begin());
    for (std::size_t r = 0; r < reps.size(); ++r) {
      CHECK(m.vertices[r] == g.vertices[reps[r]]);
      CHECK((*m.ref_ids)[r] == (*g.ref_ids)[reps[r]]);
    }
    std::vector<Edge> expect;
    for (auto [a, b] : g.edges) expect.emplace_back(new_of[a], new_of[b]);
    canonicalize_edges(expect);
    CHECK(m.edges == expect);
    CHECK_NOTHROW(validate(m));
  }
}

TEST_CASE("midpoint lines are 8-connected, direction independent and complete") {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const int x0 = static_cast<int>(rng.below(20)) - 5, y0 = static_cast<int>(rng.below(20)) - 5;
    const int x1 = static_cast<int>(rng.below(20)) - 5, y1 = static_cast<int>(rng.below(20)) - 5;
    const auto a = midpoint_line(x0, y0, x1, y1);
    const auto b = midpoint_line(x1, y1, x0, y0);
    CHECK(a == b);
    REQUIRE(a.size() == static_cast<std::size_t>(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) + 1);
    const std::set<std::pair<int, int>> ends{a.front(), a.back()};
    CHECK(ends == std::set<std::pair<int, int>>{{x0, y0}, {x1, y1}});
    for (std::size_t i = 1; i < a.size(); ++i) {
      CHECK(std::abs(a[i].first - a[i - 1].first) <= 1);
      CHECK(std::abs(a[i].second - a[i - 1].second) <= 1);
    }
    // Every pixel lies within half a pixel (in the minor axis) of the ideal line.
    const double len = std::hypot(x1 - x0, y1 - y0);
    if (len > 0)
      for (auto [x, y] : a) {
        const double d = std::abs((x1 - x0) * (y0 - y) - (x0 - x) * (y1 - y0)) / len;
        CHECK(d <= 0.5 * std::max(std::abs(x1 - x0), std::abs(y1 - y0)) / len + 1e-9);
      }
  }
}

TEST_CASE("rasterize stamps isolated vertices and brushes edges") {
  LineGraph g;
  g.width = g.height = 8;
  g.vertices = {{3.0, 3.0}};
  RasterImage im = rasterize(g, 2);
  int dark = 0;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      if (im.at(x, y) == 0.0) {
        ++dark;
        CHECK((x >= 3 && x <= 4 && y >= 3 && y <= 4));
      }
  CHECK(dark == 4);

  g.vertices = {{1.0, 2.0}, {6.0, 2.0}};
  g.edges = {{0, 1}};
  im = rasterize(g, 1);
  for (int x = 1; x <= 6; ++x) CHECK(im.at(x, 2) == 0.0);
  CHECK(im.at(0, 2) == 1.0);
  CHECK(im.at(3, 3) == 1.0);
}

TEST_CASE("rasterize is invariant to vertex and edge order") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    LineGraph g = testutil::random_graph(rng, 10, 24, false);
    std::vector<int> perm(10);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 9; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    LineGraph h = g;
    for (int i = 0; i < 10; ++i) h.vertices[perm[i]] = g.vertices[i];
    h.edges.clear();
    for (auto [a, b] : g.edges) h.edges.emplace_back(perm[a], perm[b]);
    canonicalize_edges(h.edges);
    CHECK(rasterize(g, 2) == rasterize(h, 2));
  }
}

TEST_CASE("Laplacian of a 3-vertex path has eigenvalues 0, 1, 3") {
  LineGraph g;
  g.width = g.height = 10;
  g.vertices = {{0, 0}, {1, 0}, {2, 0}};
  g.edges = {{0, 1}, {1, 2}};
  const auto eig = laplacian_eigen(g);
  REQUIRE(eig.eigenvalues.size() == 3);
  CHECK(eig.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eig.eigenvalues[1] == doctest::Approx(1.0));
  CHECK(eig.eigenvalues[2] == doctest::Approx(3.0));
  CHECK(eig.components == 1);

  // Fiedler vector of the path is (1, 0, -1)/sqrt 2 up to sign; anchor fixes +.
  const Mat s = spectral_embedding(g, 4);
  CHECK(s.rows() == 3);
  CHECK(s.cols() == 4);
  CHECK(s(0, 0) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(s(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
  // (1, -2, 1)/sqrt 6 with its largest entry made positive.
  CHECK(s(0, 1) == doctest::Approx(-1 / std::sqrt(6.0)));
  CHECK(s(1, 1) == doctest::Approx(2 / std::sqrt(6.0)));
  for (int r = 0; r < 3; ++r) {
    CHECK(s(r, 2) == 0.0);
    CHECK(s(r, 3) == 0.0);
  }
}

TEST_CASE("spectral columns are unit, orthogonal to constants and sign-fixed") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const LineGraph g = testutil::random_graph(rng, 5 + static_cast<int>(rng.below(20)));
    const Mat s = spectral_embedding(g, 64);
    const auto eig = laplacian_eigen(g);
    const int used = std::min<int>(64, g.size() - eig.components);
    for (int c = 0; c < used; ++c) {
      double norm2 = 0.0, best = 0.0;
      for (int r = 0; r < g.size(); ++r) {
        norm2 += s(r, c) * s(r, c);
        if (std::abs(s(r, c)) > std::abs(best) + 1e-12) best = s(r, c);
      }
      CHECK(norm2 == doctest::Approx(1.0));
      CHECK(best > 0.0);
    }
    for (int c = used; c < 64; ++c)
      for (int r = 0; r < g.size(); ++r) CHECK(s(r, c) == 0.0);
  }
}

TEST_CASE("derive_matching pairs equal ref_ids and graph_stats follows its definition") {
  LineGraph a, b;
  a.width = a.height = b.width = b.height = 20;
  a.vertices = {{0, 0}, {3, 0}, {5, 5}};
  a.ref_ids = std::vector<std::int64_t>{1, 2, 3};
  b.vertices = {{4, 0}, {0, 4}};
  b.ref_ids = std::vector<std::int64_t>{2, 1};
  const Matching m = derive_matching(a, b);
  CHECK(m.pairs == std::vector<std::pair<int, int>>{{0, 1}, {1, 0}});
  CHECK(m.occluded_0 == std::vector<std::uint8_t>{0, 0, 1});
  CHECK(m.occluded_1 == std::vector<std::uint8_t>{0, 0});
  const PairStats st = graph_stats(a, b);
  CHECK(st.occlusion_rate == doctest::Approx(1.0 / 5.0));
  CHECK(st.avg_shift == doctest::Approx((4.0 + 1.0) / 2));
  CHECK(st.max_shift == doctest::Approx(4.0));
  CHECK_FALSE(st.no_matches);

  b.ref_ids = std::vector<std::int64_t>{7, 8};
  CHECK(graph_stats(a, b).no_matches);
  CHECK(graph_stats(a, b).occlusion_rate == doctest::Approx(1.0));
  a.ref_ids.reset();
  CHECK_THROWS_AS(derive_matching(a, b), GraphError);
}
