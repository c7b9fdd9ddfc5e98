#include "inbet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "inbet/vectorize.hpp"

namespace inbet {

namespace {

// Stands in for "no line" during the passes; exceeds any squared distance on
// a realistic grid, and every row has a finite entry after the column pass.
constexpr double kFar = 1e20;

// 1D squared distance transform of f (lower envelope of parabolas).
void edt_1d(const double* f, double* out, int n, std::vector<int>& v, std::vector<double>& z) {
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * (q - v[k]));
    while (s <= z[k]) {
      --k;
      s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * (q - v[k]));
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    out[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

std::vector<double> distance_transform(const Mask& mask) {
  const int w = mask.width, h = mask.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (mask.count() == 0) return std::vector<double>(n, kNoLineDistance);
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = mask.bits[i] ? 0.0 : kFar;
  const int m = std::max(w, h);
  std::vector<double> f(m), out(m), z(m + 1);
  std::vector<int> v(m);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = grid[static_cast<std::size_t>(y) * w + x];
    edt_1d(f.data(), out.data(), h, v, z);
    for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = out[y];
  }
  for (int y = 0; y < h; ++y) {
    double* row = grid.data() + static_cast<std::size_t>(y) * w;
    std::copy_n(row, w, f.begin());
    edt_1d(f.data(), out.data(), w, v, z);
    std::copy_n(out.begin(), w, row);
  }
  for (double& g : grid) g = std::sqrt(g);
  return grid;
}

ChamferResult chamfer(const RasterImage& pred, const RasterImage& gt, double d) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw Error("chamfer: image sizes differ (" + std::to_string(pred.width) + "x" +
                std::to_string(pred.height) + " vs " + std::to_string(gt.width) + "x" +
                std::to_string(gt.height) + ")");
  if (!(d > 0.0)) throw Error("chamfer: d must be > 0");
  const Mask mp = binarize(pred), mg = binarize(gt);
  const auto dp = distance_transform(mp), dg = distance_transform(mg);
  const double cap = std::hypot(pred.width, pred.height);
  ChamferResult r;
  r.empty_mask = mp.count() == 0 || mg.count() == 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < mp.bits.size(); ++i) {
    if (mp.bits[i]) sum += std::min(dg[i], cap);
    if (mg.bits[i]) sum += std::min(dp[i], cap);
  }
  r.value = sum / (static_cast<double>(pred.width) * pred.height * d);
  return r;
}

CDReport evaluate(const ModelParams& params, const std::vector<LoadedSequence>& sequences,
                  const EvalConfig& config) {
  if (!(config.t > 0.0 && config.t < 1.0)) throw Error("eval: t must be in (0, 1)");
  CDReport rep;
  rep.config = config;
  for (int gap : config.gaps)
    if (gap < 1 || gap % 2 == 0)
      throw Error("eval: gaps must be odd and >= 1 so the centre frame exists, got " +
                  std::to_string(gap));
  for (int gap : config.gaps) {
    double sum = 0.0, base = 0.0;
    std::size_t count = 0;
    for (const auto& seq : sequences) {
      const int frames = static_cast<int>(seq.frames.size());
      for (int z = 0; z + gap + 1 < frames; ++z) {
        const FrameData& a = *seq.frames[z];
        const FrameData& b = *seq.frames[z + gap + 1];
        const FrameData& c = *seq.frames[z + (gap + 1) / 2];
        if (rep.d <= 0.0)
          rep.d = config.d > 0.0 ? config.d : default_search_diameter(c.image.width, c.image.height);
        const InbetweenResult res = inbetween(a, b, params, config.t);
        const ChamferResult cd = chamfer(rasterize(res.graph, kEvalLineWidth), c.image, rep.d);
        const ChamferResult bl = chamfer(a.image, c.image, rep.d);
        PairResult pr;
        pr.gap = gap;
        pr.pair_id = seq.entry.id + ":" + std::to_string(z);
        pr.cd = cd.value;
        pr.baseline_cd = bl.value;
        pr.avg_shift = graph_stats(a.graph, b.graph).avg_shift;
        pr.flagged = cd.empty_mask || bl.empty_mask;
        sum += pr.cd;
        base += pr.baseline_cd;
        ++count;
        rep.pairs.push_back(std::move(pr));
      }
    }
    rep.mean_cd.push_back(count ? sum / count : 0.0);
    rep.mean_baseline_cd.push_back(count ? base / count : 0.0);
  }
  return rep;
}

std::string report_csv(const CDReport& report) {
  std::ostringstream os;
  os.precision(10);
  os << "gap,pair_id,cd,baseline_cd,d\n";
  for (std::size_t g = 0; g < report.config.gaps.size(); ++g) {
    const int gap = report.config.gaps[g];
    for (const auto& p : report.pairs)
      if (p.gap == gap)
        os << gap << ',' << p.pair_id << ',' << p.cd * 1e5 << ',' << p.baseline_cd * 1e5 << ','
           << report.d << '\n';
    os << gap << ",mean," << report.mean_cd[g] * 1e5 << ',' << report.mean_baseline_cd[g] * 1e5
       << ',' << report.d << '\n';
  }
  return os.str();
}

double valid_accuracy(const Matching& predicted, const Matching& truth) {
  if (truth.pairs.empty()) return 0.0;
  std::size_t hit = 0;
  for (auto [i, j] : truth.pairs) hit += predicted.match_of_0(i) == j ? 1 : 0;
  return static_cast<double>(hit) / truth.pairs.size();
}

AccuracySummary matching_accuracy(const ModelParams& params,
                                  const std::vector<LoadedSequence>& sequences,
                                  const std::vector<int>& gaps, double max_avg_shift) {
  AccuracySummary s;
  std::size_t hits = 0;
  for (const auto& seq : sequences)
    for (int gap : gaps)
      for (int z = 0; z + gap + 1 < static_cast<int>(seq.frames.size()); ++z) {
        const FrameData& a = *seq.frames[z];
        const FrameData& b = *seq.frames[z + gap + 1];
        const Matching truth = derive_matching(a.graph, b.graph);
        if (truth.pairs.empty() || graph_stats(a.graph, b.graph).avg_shift > max_avg_shift)
          continue;
        const Matching pred = match_frames(a, b, params).second;
        for (auto [i, j] : truth.pairs) hits += pred.match_of_0(i) == j ? 1 : 0;
        s.pairs += truth.pairs.size();
        ++s.frame_pairs;
      }
  s.accuracy = s.pairs ? static_cast<double>(hits) / s.pairs : 0.0;
  return s;
}

}  // namespace inbet
