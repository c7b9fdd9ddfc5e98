#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "inbet/eval.hpp"
#include "inbet/reposefuse.hpp"
#include "test_util.hpp"

using namespace inbet;
using testutil::random_mat;

namespace {

std::vector<double> row_softmax(std::vector<double> s) {
  const double mx = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double& e : s) z += (e = std::exp(e - mx));
  for (double& e : s) e /= z;
  return s;
}

// Shift field of one direction written out with explicit loops.
Mat shifts_loop(const Mat& fa, const Mat& scores_ab, const std::vector<Vec2>& va,
                const std::vector<Vec2>& vb) {
  const std::size_t ka = va.size(), kb = vb.size(), c = fa.cols();
  std::vector<Vec2> raw(ka);
  for (std::size_t i = 0; i < ka; ++i) {
    std::vector<double> s(kb);
    for (std::size_t j = 0; j < kb; ++j) s[j] = scores_ab(i, j);
    s = row_softmax(s);
    Vec2 acc{0, 0};
    for (std::size_t j = 0; j < kb; ++j) acc = acc + s[j] * vb[j];
    raw[i] = acc - va[i];
  }
  Mat out(ka, 2);
  for (std::size_t i = 0; i < ka; ++i) {
    std::vector<double> s(ka);
    for (std::size_t j = 0; j < ka; ++j) {
      for (std::size_t d = 0; d < c; ++d) s[j] += fa(i, d) * fa(j, d);
      s[j] /= std::sqrt(static_cast<double>(c));
    }
    s = row_softmax(s);
    for (std::size_t j = 0; j < ka; ++j) {
      out(i, 0) += s[j] * raw[j].x;
      out(i, 1) += s[j] * raw[j].y;
    }
  }
  return out;
}

std::vector<Vec2> random_points(Rng& rng, int k, double size = 63) {
  std::vector<Vec2> v;
  for (int i = 0; i < k; ++i) v.push_back({rng.uniform(0, size), rng.uniform(0, size)});
  return v;
}

VisibilityMask mask_of(std::vector<std::uint8_t> v) {
  VisibilityMask m;
  m.visible = std::move(v);
  return m;
}

Matching random_matching(Rng& rng, int k0, int k1) {
  std::vector<int> cols(k1);
  for (int j = 0; j < k1; ++j) cols[j] = j;
  for (int j = k1 - 1; j > 0; --j) std::swap(cols[j], cols[rng.below(j + 1)]);
  std::vector<std::pair<int, int>> pairs;
  int next = 0;
  for (int i = 0; i < k0 && next < k1; ++i)
    if (rng.coin()) pairs.emplace_back(i, cols[next++]);
  return Matching::from_pairs(pairs, k0, k1);
}

}  // namespace

TEST_CASE("propagated shifts equal a loop oracle") {
  Rng rng(31);
  const Mat f0 = random_mat(rng, 3, 5), f1 = random_mat(rng, 4, 5);
  const Mat scores = random_mat(rng, 3, 4, -3, 3);
  const auto v0 = random_points(rng, 3), v1 = random_points(rng, 4);
  auto [r01, r10] = propagate_shifts(f0, f1, scores, v0, v1);
  CHECK(max_abs_diff(r01, shifts_loop(f0, scores, v0, v1)) < 1e-9);
  CHECK(max_abs_diff(r10, shifts_loop(f1, transpose(scores), v1, v0)) < 1e-9);
}

TEST_CASE("propagated shifts trivial cases") {
  Rng rng(32);
  auto [a, b] = propagate_shifts(random_mat(rng, 1, 3), random_mat(rng, 1, 3), Mat(1, 1, 0.3),
                                 {{2, 3}}, {{7, 1}});
  CHECK(a(0, 0) == doctest::Approx(5.0));
  CHECK(a(0, 1) == doctest::Approx(-2.0));
  CHECK(b(0, 0) == doctest::Approx(-5.0));
  CHECK(b(0, 1) == doctest::Approx(2.0));

  // A sharply peaked diagonal score on identical graphs yields no shift.
  const auto v = random_points(rng, 4);
  const Mat f = random_mat(rng, 4, 3);
  Mat s(4, 4, -1e3);
  for (int i = 0; i < 4; ++i) s(i, i) = 1e3;
  auto [c, d] = propagate_shifts(f, f, s, v, v);
  for (double x : c.storage()) CHECK(std::abs(x) < 1e-9);
  CHECK_THROWS_AS(propagate_shifts(f, f, Mat(3, 4), v, v), Error);
}

TEST_CASE("final repositioning keeps exact shifts for matched vertices") {
  Rng rng(33);
  const auto v0 = random_points(rng, 6), v1 = random_points(rng, 5);
  const Mat prop = random_mat(rng, 6, 2, -9, 9);
  const Matching m = random_matching(rng, 6, 5);
  const Mat r = final_repositioning(m, v0, v1, prop);
  for (int i = 0; i < 6; ++i) {
    const int j = m.match_of_0(i);
    if (j >= 0) {
      CHECK(r(i, 0) == v1[j].x - v0[i].x);
      CHECK(r(i, 1) == v1[j].y - v0[i].y);
    } else {
      CHECK(r(i, 0) == prop(i, 0));
      CHECK(r(i, 1) == prop(i, 1));
    }
  }
  CHECK(final_repositioning(Matching::from_pairs({}, 6, 5), v0, v1, prop) == prop);

  const Matching full = Matching::from_pairs({{0, 0}, {1, 1}, {2, 2}}, 3, 3);
  const std::vector<Vec2> a{v0[0], v0[1], v0[2]}, b{v1[0], v1[1], v1[2]};
  CHECK(final_repositioning(full, a, b, Mat(3, 2, 1.0)) ==
        final_repositioning(full, a, b, Mat(3, 2, -4.0)));

  const Mat prop1 = random_mat(rng, 5, 2);
  const Mat r1 = final_repositioning_reverse(m, v0, v1, prop1);
  for (auto [i, j] : m.pairs) CHECK(r1(j, 0) == v0[i].x - v1[j].x);
}

TEST_CASE("visibility head") {
  ModelConfig cfg;
  cfg.feature_dim = 8;
  cfg.layers = 1;
  Rng rng(34);
  const Mat f = random_mat(rng, 7, 8);
  const ModelParams zero = zero_model(cfg);
  const VisibilityMask all = predict_visibility(f, zero.weights, 0.5);
  CHECK(std::all_of(all.visible.begin(), all.visible.end(), [](auto v) { return v == 1; }));

  ModelParams hidden = zero;
  hidden.weights.vis3.bias(0, 0) = -50.0;
  const VisibilityMask none = predict_visibility(f, hidden.weights, 0.5);
  CHECK(std::all_of(none.visible.begin(), none.visible.end(), [](auto v) { return v == 0; }));

  const ModelParams p = init_model(cfg, 8);
  const VisibilityMask m = predict_visibility(f, p.weights, 0.5);
  auto relu = [](Mat x) {
    for (double& v : x.storage()) v = std::max(0.0, v);
    return x;
  };
  const Mat logit = apply_affine(
      relu(apply_affine(relu(apply_affine(f, p.weights.vis1)), p.weights.vis2)), p.weights.vis3);
  REQUIRE(m.logits.has_value());
  CHECK(max_abs_diff(*m.logits, logit) < 1e-12);
  for (int i = 0; i < 7; ++i)
    CHECK(m.visible[i] == (1.0 / (1.0 + std::exp(-logit(i, 0))) >= 0.5 ? 1 : 0));
}

TEST_CASE("fuse counting, edge witnesses and swap symmetry") {
  Rng rng(35);
  for (int trial = 0; trial < 100; ++trial) {
    const int k0 = 1 + static_cast<int>(rng.below(12)), k1 = 1 + static_cast<int>(rng.below(12));
    LineGraph g0 = testutil::random_graph(rng, k0, 64), g1 = testutil::random_graph(rng, k1, 64);
    const Matching m = random_matching(rng, k0, k1);
    const Mat r0 = random_mat(rng, k0, 2, -5, 5), r1 = random_mat(rng, k1, 2, -5, 5);
    std::vector<std::uint8_t> vis0(k0), vis1(k1);
    for (auto& v : vis0) v = rng.coin();
    for (auto& v : vis1) v = rng.coin();
    const double t = rng.uniform(0.05, 0.95);
    const LineGraph out = fuse(g0, g1, m, r0, r1, mask_of(vis0), mask_of(vis1), t);

    int expected = static_cast<int>(m.pairs.size());
    for (int i = 0; i < k0; ++i) expected += m.occluded_0[i] && vis0[i];
    for (int j = 0; j < k1; ++j) expected += m.occluded_1[j] && vis1[j];
    CHECK(out.size() == expected);
    CHECK(!out.ref_ids.has_value());
    for (auto [a, b] : out.edges) {
      CHECK(a >= 0);
      CHECK(b < out.size());
      CHECK(a != b);
    }
    for (const Vec2& v : out.vertices) {
      CHECK(v.x >= 0.0);
      CHECK(v.x <= 63.0);
    }

    // Swapped call at 1 - t yields the same vertex set and edge set.
    std::vector<std::pair<int, int>> sw;
    for (auto [i, j] : m.pairs) sw.emplace_back(j, i);
    std::sort(sw.begin(), sw.end());
    const LineGraph rev = fuse(g1, g0, Matching::from_pairs(sw, k1, k0), r1, r0, mask_of(vis1),
                               mask_of(vis0), 1.0 - t);
    REQUIRE(rev.size() == out.size());
    auto canon = [](const LineGraph& g) {
      std::set<std::pair<std::pair<double, double>, std::pair<double, double>>> es;
      auto key = [](Vec2 p) {
        return std::make_pair(std::round(p.x * 1e6) / 1e6, std::round(p.y * 1e6) / 1e6);
      };
      for (auto [a, b] : g.edges) {
        auto ka = key(g.vertices[a]), kb = key(g.vertices[b]);
        es.insert({std::min(ka, kb), std::max(ka, kb)});
      }
      return es;
    };
    CHECK(canon(rev) == canon(out));
  }
}

TEST_CASE("fuse trivial cases") {
  Rng rng(36);
  LineGraph g0 = testutil::random_graph(rng, 8, 64);
  for (auto& v : g0.vertices) v.x = std::min(v.x, 40.0);
  LineGraph g1 = g0;
  for (auto& v : g1.vertices) v.x += 10.0;
  std::vector<std::pair<int, int>> id;
  for (int i = 0; i < 8; ++i) id.emplace_back(i, i);
  const Matching full = Matching::from_pairs(id, 8, 8);
  const LineGraph mid = fuse(g0, g1, full, Mat(8, 2), Mat(8, 2), mask_of(std::vector<std::uint8_t>(8)),
                             mask_of(std::vector<std::uint8_t>(8)), 0.5);
  LineGraph expect = g0;
  expect.ref_ids.reset();
  for (auto& v : expect.vertices) v.x += 5.0;
  CHECK(mid.edges == expect.edges);
  for (int i = 0; i < 8; ++i) CHECK(distance(mid.vertices[i], expect.vertices[i]) < 1e-12);
  CHECK(chamfer(rasterize(mid, 2), rasterize(expect, 2), 6.4).value < 1e-9);

  const LineGraph empty = fuse(g0, g1, Matching::from_pairs({}, 8, 8), Mat(8, 2), Mat(8, 2),
                               mask_of(std::vector<std::uint8_t>(8)),
                               mask_of(std::vector<std::uint8_t>(8)), 0.5);
  CHECK(empty.size() == 0);
  CHECK(empty.edges.empty());
  CHECK_THROWS_AS(fuse(g0, g1, full, Mat(8, 2), Mat(8, 2), mask_of(std::vector<std::uint8_t>(8)),
                       mask_of(std::vector<std::uint8_t>(8)), 1.0),
                  Error);
}
