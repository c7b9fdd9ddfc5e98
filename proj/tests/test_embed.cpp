#include "doctest.h"

#include "inbet/embed.hpp"
#include "test_util.hpp"

using namespace inbet;

namespace {

RasterImage random_image(Rng& rng, int w, int h) {
  RasterImage im(w, h);
  for (double& v : im.intensities) v = rng.uniform();
  return im;
}

// Direct zero-padded 3x3 convolution over a C-channel map stored [y][x][c].
std::vector<double> conv_ref(const std::vector<double>& in, int w, int h, int cin, const Affine& a,
                             bool relu) {
  const int cout = static_cast<int>(a.weight.cols());
  std::vector<double> out(static_cast<std::size_t>(w) * h * cout);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int o = 0; o < cout; ++o) {
        double s = a.bias(0, o);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int sx = x + dx, sy = y + dy;
            if (sx < 0 || sy < 0 || sx >= w || sy >= h) continue;
            const int tap = (dy + 1) * 3 + (dx + 1);
            for (int c = 0; c < cin; ++c)
              s += in[(static_cast<std::size_t>(sy) * w + sx) * cin + c] * a.weight(tap * cin + c, o);
          }
        out[(static_cast<std::size_t>(y) * w + x) * cout + o] = relu ? std::max(0.0, s) : s;
      }
  return out;
}

ModelConfig small_config() {
  ModelConfig c;
  c.feature_dim = 8;
  c.layers = 1;
  c.spectral_dim = 6;
  return c;
}

}  // namespace

TEST_CASE("full-map image encoder equals a direct convolution") {
  Rng rng(14);
  const ModelParams p = init_model(small_config(), 3);
  const RasterImage im = random_image(rng, 9, 7);
  const FeatureMap fm = contextual_features(im, p.weights);
  auto h1 = conv_ref(im.intensities, 9, 7, 1, p.weights.conv1, true);
  auto h2 = conv_ref(h1, 9, 7, 2, p.weights.conv2, true);
  auto h3 = conv_ref(h2, 9, 7, 4, p.weights.conv3, false);
  CHECK(testutil::max_abs(fm.features.storage(), h3) < 1e-12);
}

TEST_CASE("per-vertex receptive-field encoder equals indexing the full map") {
  Rng rng(15);
  const ModelParams p = init_model(small_config(), 4);
  const RasterImage im = random_image(rng, 11, 10);
  std::vector<Vec2> vs = {{0, 0}, {10, 9}, {0, 9}, {10, 0}, {1.4, 1.6}, {5.5, 4.49}, {9.2, 3}};
  for (int i = 0; i < 20; ++i) vs.push_back({rng.uniform(0, 10), rng.uniform(0, 9)});
  const Mat full = index_at_vertices(contextual_features(im, p.weights), vs);
  ad::Tape t;
  const WeightVars w = bind(t, p.weights, false);
  const Mat patch = t.value(net::contextual_at_vertices(t, im, vs, w));
  CHECK(max_abs_diff(full, patch) < 1e-12);
}

TEST_CASE("positional embedding normalizes the canvas to [-1, 1]") {
  const Mat n = normalized_coordinates({{0, 0}, {31, 15}, {15.5, 7.5}}, 32, 16);
  CHECK(n(0, 0) == -1.0);
  CHECK(n(0, 1) == -1.0);
  CHECK(n(1, 0) == 1.0);
  CHECK(n(1, 1) == 1.0);
  CHECK(n(2, 0) == doctest::Approx(0.0));
  CHECK(n(2, 1) == doctest::Approx(0.0));
}

TEST_CASE("embedding is the sum of its enabled parts") {
  Rng rng(16);
  ModelConfig cfg = small_config();
  const ModelParams p = init_model(cfg, 5);
  LineGraph g = testutil::random_graph(rng, 9, 20);
  const RasterImage im = rasterize(g, 2);
  const Mat ctx = index_at_vertices(contextual_features(im, p.weights), g.vertices);
  const Mat pos = positional_embedding(g.vertices, 20, 20, p.weights);
  const Mat topo = topological_embedding(g, p.weights, cfg.spectral_dim);
  const Mat all = embed_vertices(g, im, p);
  for (std::size_t i = 0; i < all.size(); ++i)
    CHECK(all[i] == doctest::Approx(ctx[i] + pos[i] + topo[i]));

  ModelParams q = p;
  q.config.use_position = false;
  q.config.use_topology = false;
  CHECK(max_abs_diff(embed_vertices(g, im, q), ctx) < 1e-12);
  q.config.use_image = false;
  CHECK(embed_vertices(g, im, q) == Mat(9, 8));
}

TEST_CASE("embedding rejects mismatched graph and image sizes") {
  Rng rng(17);
  const ModelParams p = init_model(small_config(), 6);
  LineGraph g = testutil::random_graph(rng, 4, 20);
  CHECK_THROWS_AS(embed_vertices(g, RasterImage(21, 20), p), Error);
}

TEST_CASE("init_model is seeded, float-representable and fan-in bounded") {
  const ModelParams a = init_model(small_config(), 9), b = init_model(small_config(), 9);
  bool same = true;
  a.weights.visit([&](const std::string& name, const Mat& t) {
    (void)name;
    for (double v : t.storage()) CHECK(static_cast<double>(static_cast<float>(v)) == v);
  });
  std::vector<const Mat*> ta, tb;
  a.weights.visit([&](const std::string&, const Mat& t) { ta.push_back(&t); });
  b.weights.visit([&](const std::string&, const Mat& t) { tb.push_back(&t); });
  for (std::size_t i = 0; i < ta.size(); ++i) same = same && *ta[i] == *tb[i];
  CHECK(same);
  CHECK(a.weights.dustbin(0, 0) == 1.0);
  const double bound = std::sqrt(1.0 / 9.0);
  for (double v : a.weights.conv1.weight.storage()) CHECK(std::abs(v) <= bound + 1e-7);
  for (double v : a.weights.conv1.bias.storage()) CHECK(std::abs(v) <= bound + 1e-7);
}
