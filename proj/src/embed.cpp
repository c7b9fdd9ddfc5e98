#include "inbet/embed.hpp"

#include <algorithm>

namespace inbet {

namespace {

constexpr int kTapDx[9] = {-1, 0, 1, -1, 0, 1, -1, 0, 1};
constexpr int kTapDy[9] = {-1, -1, -1, 0, 0, 0, 1, 1, 1};

// Same-size 3x3 convolution with zero padding over an H*W x Cin map.
Mat conv3x3(const Mat& in, int width, int height, const Affine& a, bool relu) {
  const std::size_t cin = in.cols();
  const std::size_t cout = a.weight.cols();
  if (a.weight.rows() != 9 * cin) throw Error("conv3x3: weight rows do not match 9*Cin");
  Mat out(static_cast<std::size_t>(width) * height, cout);
  Mat cols(width, 9 * cin);
  for (int y = 0; y < height; ++y) {
    cols.fill(0.0);
    for (int x = 0; x < width; ++x)
      for (int t = 0; t < 9; ++t) {
        const int sx = x + kTapDx[t], sy = y + kTapDy[t];
        if (sx < 0 || sy < 0 || sx >= width || sy >= height) continue;
        std::copy_n(in.data() + (static_cast<std::size_t>(sy) * width + sx) * cin, cin,
                    cols.data() + x * 9 * cin + t * cin);
      }
    const Mat rows = apply_affine(cols, a);
    std::copy(rows.storage().begin(), rows.storage().end(),
              out.data() + static_cast<std::size_t>(y) * width * cout);
  }
  if (relu)
    for (double& v : out.storage()) v = std::max(0.0, v);
  return out;
}

}  // namespace

FeatureMap contextual_features(const RasterImage& image, const Weights& w) {
  if (image.width <= 0 || image.height <= 0) throw Error("contextual_features: empty image");
  Mat in(static_cast<std::size_t>(image.width) * image.height, 1);
  std::copy(image.intensities.begin(), image.intensities.end(), in.data());
  Mat h1 = conv3x3(in, image.width, image.height, w.conv1, true);
  Mat h2 = conv3x3(h1, image.width, image.height, w.conv2, true);
  Mat h3 = conv3x3(h2, image.width, image.height, w.conv3, false);
  return {image.width, image.height, std::move(h3)};
}

std::vector<std::pair<int, int>> vertex_pixels(const std::vector<Vec2>& vertices, int width,
                                               int height) {
  std::vector<std::pair<int, int>> px;
  px.reserve(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const int x = round_half_up(vertices[i].x);
    const int y = round_half_up(vertices[i].y);
    if (x < 0 || y < 0 || x >= width || y >= height)
      throw Error("vertex " + std::to_string(i) + " lies outside the " + std::to_string(width) +
                  "x" + std::to_string(height) + " image");
    px.emplace_back(x, y);
  }
  return px;
}

Mat index_at_vertices(const FeatureMap& map, const std::vector<Vec2>& vertices) {
  const auto px = vertex_pixels(vertices, map.width, map.height);
  const std::size_t c = map.features.cols();
  Mat out(vertices.size(), c);
  for (std::size_t i = 0; i < px.size(); ++i) {
    const auto row = map.features.row(static_cast<std::size_t>(px[i].second) * map.width +
                                      px[i].first);
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

Mat normalized_coordinates(const std::vector<Vec2>& vertices, int width, int height) {
  if (width < 2 || height < 2) throw Error("positional embedding: width and height must be >= 2");
  Mat out(vertices.size(), 2);
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    out(i, 0) = 2.0 * vertices[i].x / (width - 1) - 1.0;
    out(i, 1) = 2.0 * vertices[i].y / (height - 1) - 1.0;
  }
  return out;
}

namespace {

template <class Fn>
Mat evaluate_constant(const Weights& w, Fn&& fn) {
  ad::Tape tape;
  const WeightVars vars = bind(tape, w, false);
  return tape.value(fn(tape, vars));
}

}  // namespace

Mat positional_embedding(const std::vector<Vec2>& vertices, int width, int height,
                         const Weights& w) {
  return evaluate_constant(w, [&](ad::Tape& t, const WeightVars& v) {
    return net::positional(t, vertices, width, height, v);
  });
}

Mat topological_embedding(const LineGraph& graph, const Weights& w, int spectral_dim) {
  const Mat spectral = spectral_embedding(graph, spectral_dim);
  return evaluate_constant(
      w, [&](ad::Tape& t, const WeightVars& v) { return net::topological(t, spectral, v); });
}

Mat embed_vertices(const LineGraph& graph, const RasterImage& image, const ModelParams& model) {
  if (graph.width != image.width || graph.height != image.height)
    throw Error("embed_vertices: graph is " + std::to_string(graph.width) + "x" +
                std::to_string(graph.height) + " but image is " + std::to_string(image.width) +
                "x" + std::to_string(image.height));
  const Mat spectral = spectral_embedding(graph, model.config.spectral_dim);
  return evaluate_constant(model.weights, [&](ad::Tape& t, const WeightVars& v) {
    return net::embed(t, graph, image, spectral, v, model.config);
  });
}

namespace net {

ad::Var contextual_at_vertices(ad::Tape& tape, const RasterImage& image,
                               const std::vector<Vec2>& vertices, const WeightVars& w) {
  const auto px = vertex_pixels(vertices, image.width, image.height);
  const std::size_t k = px.size();
  auto inside = [&](int x, int y) { return x >= 0 && y >= 0 && x < image.width && y < image.height; };

  // Layer 1 on the 5x5 window around each vertex: row k*25 + (dy+2)*5 + (dx+2).
  Mat cols1(k * 25, 9);
  std::vector<double> mask1(k * 25, 0.0);
  for (std::size_t v = 0; v < k; ++v)
    for (int dy = -2; dy <= 2; ++dy)
      for (int dx = -2; dx <= 2; ++dx) {
        const std::size_t r = v * 25 + (dy + 2) * 5 + (dx + 2);
        const int cx = px[v].first + dx, cy = px[v].second + dy;
        mask1[r] = inside(cx, cy) ? 1.0 : 0.0;
        for (int t = 0; t < 9; ++t) {
          const int sx = cx + kTapDx[t], sy = cy + kTapDy[t];
          if (inside(sx, sy)) cols1(r, t) = image.at(sx, sy);
        }
      }
  ad::Var h1 = tape.relu(apply_affine(tape, tape.constant(std::move(cols1)), w.conv1));
  h1 = tape.scale_rows(h1, std::move(mask1));

  // Layer 2 on the 3x3 window: row k*9 + (ey+1)*3 + (ex+1).
  std::vector<int> idx2(k * 9 * 9);
  std::vector<double> mask2(k * 9, 0.0);
  for (std::size_t v = 0; v < k; ++v)
    for (int ey = -1; ey <= 1; ++ey)
      for (int ex = -1; ex <= 1; ++ex) {
        const std::size_t r = v * 9 + (ey + 1) * 3 + (ex + 1);
        mask2[r] = inside(px[v].first + ex, px[v].second + ey) ? 1.0 : 0.0;
        for (int t = 0; t < 9; ++t)
          idx2[r * 9 + t] =
              static_cast<int>(v * 25 + (ey + kTapDy[t] + 2) * 5 + (ex + kTapDx[t] + 2));
      }
  ad::Var h2 = tape.relu(apply_affine(tape, tape.gather_blocks(h1, std::move(idx2), 9), w.conv2));
  h2 = tape.scale_rows(h2, std::move(mask2));

  std::vector<int> idx3(k * 9);
  for (std::size_t v = 0; v < k; ++v)
    for (int t = 0; t < 9; ++t) idx3[v * 9 + t] = static_cast<int>(v * 9 + t);
  return apply_affine(tape, tape.gather_blocks(h2, std::move(idx3), 9), w.conv3);
}

ad::Var positional(ad::Tape& tape, const std::vector<Vec2>& vertices, int width, int height,
                   const WeightVars& w) {
  ad::Var x = tape.constant(normalized_coordinates(vertices, width, height));
  return apply_affine(tape, tape.relu(apply_affine(tape, x, w.pos1)), w.pos2);
}

ad::Var topological(ad::Tape& tape, const Mat& spectral, const WeightVars& w) {
  ad::Var s = tape.constant(spectral);
  return apply_affine(tape, tape.relu(apply_affine(tape, s, w.topo1)), w.topo2);
}

ad::Var embed(ad::Tape& tape, const LineGraph& graph, const RasterImage& image,
              const Mat& spectral, const WeightVars& w, const ModelConfig& config) {
  if (spectral.rows() != graph.vertices.size())
    throw Error("embed: spectral rows do not match vertex count");
  std::vector<ad::Var> parts;
  if (config.use_image) parts.push_back(contextual_at_vertices(tape, image, graph.vertices, w));
  if (config.use_position)
    parts.push_back(positional(tape, graph.vertices, graph.width, graph.height, w));
  if (config.use_topology) parts.push_back(topological(tape, spectral, w));
  if (parts.empty()) return tape.constant(Mat(graph.vertices.size(), config.feature_dim));
  ad::Var f = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) f = tape.add(f, parts[i]);
  return f;
}

}  // namespace net

}  // namespace inbet
