#include "inbet/synth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <unordered_map>

#include "inbet/rng.hpp"

namespace inbet {

namespace {

constexpr double kPi = std::numbers::pi;

double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

// Outline of the stadium around [0, length] on the bone axis, counter-clockwise
// in bone coordinates, with roughly `spacing` pixels between points.
std::vector<Vec2> capsule(double length, double radius, double spacing) {
  const int side = std::max(1, static_cast<int>(std::lround(length / spacing)));
  const int cap = std::max(2, static_cast<int>(std::lround(kPi * radius / spacing)));
  std::vector<Vec2> pts;
  for (int k = 0; k <= side; ++k) pts.push_back({length * k / side, -radius});
  for (int k = 1; k < cap; ++k) {
    const double a = -kPi / 2 + kPi * k / cap;
    pts.push_back({length + radius * std::cos(a), radius * std::sin(a)});
  }
  for (int k = side; k >= 0; --k) pts.push_back({length * k / side, radius});
  for (int k = 1; k < cap; ++k) {
    const double a = kPi / 2 + kPi * k / cap;
    pts.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return pts;
}

std::vector<Vec2> circle(Vec2 center, double radius, double spacing) {
  const int n = std::max(6, static_cast<int>(std::lround(2 * kPi * radius / spacing)));
  std::vector<Vec2> pts;
  for (int k = 0; k < n; ++k) {
    const double a = 2 * kPi * k / n;
    pts.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
  }
  return pts;
}

struct Builder {
  ArticulatedFigure fig;
  std::int64_t next_id = 1;

  int joint(int parent, double rest, double length, double mobility) {
    fig.joints.push_back({parent, rest, length, mobility});
    return static_cast<int>(fig.joints.size()) - 1;
  }
  void part(int bone, double depth, bool closed, std::vector<Vec2> local) {
    FigurePart p{bone, depth, closed, std::move(local), {}};
    for (std::size_t i = 0; i < p.local.size(); ++i) p.ids.push_back(next_id++);
    fig.parts.push_back(std::move(p));
  }
};

}  // namespace

JointCountRange joint_count_range(int complexity) {
  if (complexity <= 1) return {2, 2};
  const int limb = std::min(complexity - 1, 3);
  return {3 + 4 * limb, 3 + 4 * limb + complexity - 1};
}

ArticulatedFigure make_figure(std::uint64_t seed, int complexity, int canvas) {
  if (complexity < 1) throw Error("make_figure: complexity must be >= 1");
  if (canvas < 16) throw Error("make_figure: canvas must be >= 16");
  Rng rng(seed);
  const double s = canvas / 128.0;
  const double spacing = 7.0 * s;
  Builder b;
  b.fig.canvas = canvas;
  b.fig.complexity = complexity;
  b.joint(-1, -kPi / 2 + rng.uniform(-0.1, 0.1), 0.0, 0.12);

  if (complexity == 1) {
    const double len = rng.uniform(26, 34) * s;
    const int bone = b.joint(0, 0.0, len, 0.5);
    b.part(bone, 0.0, true, capsule(len, rng.uniform(5, 7) * s, spacing));
    return std::move(b.fig);
  }

  const double torso_len = rng.uniform(26, 32) * s;
  const double torso_r = rng.uniform(8, 10) * s;
  const int chest = b.joint(0, 0.0, torso_len, 0.15);
  const double head_len = rng.uniform(16, 20) * s;
  const int head = b.joint(chest, rng.uniform(-0.1, 0.1), head_len, 0.25);
  b.part(chest, 2.0, true, capsule(torso_len, torso_r, spacing));
  const double head_r = rng.uniform(8, 9.5) * s;
  b.part(head, 4.0, true, circle({head_len * 0.55, 0.0}, head_r, spacing));

  // Limbs: side 0 is behind the torso, side 1 in front of the head.
  const int segments = std::min(complexity - 1, 3);
  struct LimbBone {
    int bone;
    double length, radius;
  };
  std::vector<LimbBone> limb_bones;
  for (int limb = 0; limb < 4; ++limb) {
    const bool arm = limb < 2;
    const int side = limb % 2;
    const double sign = side == 0 ? -1.0 : 1.0;
    const double depth = arm ? (side == 0 ? 1.0 : 5.0) : (side == 0 ? 0.0 : 3.0);
    int parent = arm ? chest : 0;
    double rest = arm ? kPi + sign * rng.uniform(0.35, 0.6) : kPi + sign * rng.uniform(0.12, 0.3);
    for (int k = 0; k < segments; ++k) {
      double len, r;
      if (k == 2) {
        len = (arm ? rng.uniform(6, 8) : rng.uniform(7, 9)) * s;
        r = rng.uniform(2.5, 3.0) * s;
        rest = arm ? sign * 0.2 : -sign * 1.2;
      } else {
        len = (arm ? rng.uniform(13, 17) - 2 * k : rng.uniform(16, 20) - 2 * k) * s;
        r = (rng.uniform(3.5, 4.5) - 0.5 * k) * s;
        if (k == 1) rest = -sign * rng.uniform(0.1, 0.35);
      }
      parent = b.joint(parent, rest, len, arm ? 0.55 : 0.4);
      b.part(parent, depth + 0.1 * k, true, capsule(len, r, spacing));
      limb_bones.push_back({parent, len, r});
    }
  }

  const int accessories = static_cast<int>(rng.below(complexity));
  static constexpr double kAccessoryDepth[] = {0.5, 1.5, 2.5, 4.5, 5.5};
  for (int a = 0; a < accessories; ++a) {
    const int host = static_cast<int>(rng.below(3));  // pelvis, chest or head
    const double rest = host == 0 ? kPi + rng.uniform(-0.9, 0.9) : rng.uniform(-0.8, 0.8);
    const double len = rng.uniform(8, 14) * s;
    const int bone = b.joint(host, rest, len, 0.5);
    b.part(bone, kAccessoryDepth[rng.below(5)] + 0.01 * a, true,
           capsule(len, rng.uniform(2.5, 4) * s, spacing));
  }

  // Open decorations drawn on their host's depth.
  std::vector<std::pair<int, std::vector<Vec2>>> candidates;
  candidates.push_back({head, {{head_len * 0.4, -head_r * 0.5},
                               {head_len * 0.3, 0.0},
                               {head_len * 0.4, head_r * 0.5}}});
  candidates.push_back({chest, {{torso_len * 0.2, -torso_r * 0.7},
                                {torso_len * 0.25, 0.0},
                                {torso_len * 0.2, torso_r * 0.7}}});
  candidates.push_back({chest, {{torso_len * 0.95, -torso_r * 0.6},
                                {torso_len * 0.75, 0.0},
                                {torso_len * 0.95, torso_r * 0.6}}});
  for (const auto& lb : limb_bones) {
    const double u = lb.length * rng.uniform(0.35, 0.65);
    candidates.push_back({lb.bone, {{u, -lb.radius * 0.8}, {u, lb.radius * 0.8}}});
  }
  const std::size_t decorations = std::min<std::size_t>(complexity + 1, candidates.size());
  for (std::size_t d = 0; d < decorations; ++d) {
    const std::size_t pick = d < 3 ? d : d + rng.below(candidates.size() - d);
    std::swap(candidates[d], candidates[pick]);
    const int bone = candidates[d].first;
    double depth = 0.0;
    for (const auto& p : b.fig.parts)
      if (p.bone == bone && p.closed) depth = p.depth;
    b.part(bone, depth, false, candidates[d].second);
  }
  return std::move(b.fig);
}

MotionScript make_motion(std::uint64_t seed, const ArticulatedFigure& figure, int frames,
                         double amplitude) {
  if (frames < 1) throw Error("make_motion: frames must be >= 1");
  const double s = figure.canvas / 128.0;
  const std::size_t nj = figure.joints.size();
  std::vector<double> amp(nj), omega(nj), phase(nj);
  for (std::size_t j = 0; j < nj; ++j) {
    Rng r(mix_seed(seed, j));
    amp[j] = amplitude * figure.joints[j].mobility * r.uniform(0.7, 1.2);
    omega[j] = 2 * kPi / r.uniform(28, 44);
    phase[j] = r.uniform(0, 2 * kPi);
  }
  Rng r(mix_seed(seed, 0xabcdef));
  const double vx = amplitude * s * r.uniform(0.7, 1.3) * (r.coin() ? 1.0 : -1.0);
  const double vy = amplitude * s * r.uniform(-0.15, 0.15);
  const double bob = amplitude * s * r.uniform(0.5, 1.5);
  const double bob_omega = 2 * kPi / r.uniform(28, 44);
  const double bob_phase = r.uniform(0, 2 * kPi);

  MotionScript m;
  const double mid = (frames - 1) / 2.0;
  for (int f = 0; f < frames; ++f) {
    std::vector<double> a(nj);
    for (std::size_t j = 0; j < nj; ++j) a[j] = amp[j] * std::sin(omega[j] * f + phase[j]);
    m.angles.push_back(std::move(a));
    m.root.push_back({figure.canvas * 0.5 + vx * (f - mid),
                      figure.canvas * 0.55 + vy * (f - mid) +
                          bob * (std::sin(bob_omega * f + bob_phase) - std::sin(bob_phase))});
  }
  return m;
}

namespace {

struct BoneFrame {
  Vec2 origin, dir;
};

std::vector<BoneFrame> bone_frames(const ArticulatedFigure& fig, const MotionScript& script,
                                   int frame, std::vector<Vec2>* joints) {
  if (frame < 0 || frame >= script.frames()) throw Error("pose: frame index out of range");
  const std::size_t nj = fig.joints.size();
  if (script.angles[frame].size() != nj) throw Error("pose: script does not fit the figure");
  std::vector<double> angle(nj);
  std::vector<Vec2> pos(nj);
  std::vector<BoneFrame> frames(nj);
  for (std::size_t j = 0; j < nj; ++j) {
    const Joint& jt = fig.joints[j];
    if (jt.parent < 0) {
      angle[j] = jt.rest_angle + script.angles[frame][j];
      pos[j] = script.root[frame];
      frames[j] = {pos[j], {std::cos(angle[j]), std::sin(angle[j])}};
      continue;
    }
    angle[j] = angle[jt.parent] + jt.rest_angle + script.angles[frame][j];
    const Vec2 dir{std::cos(angle[j]), std::sin(angle[j])};
    pos[j] = pos[jt.parent] + jt.length * dir;
    frames[j] = {pos[jt.parent], dir};
  }
  if (joints) *joints = std::move(pos);
  return frames;
}

// Parameter range of p + t(q - p) inside [0, w] x [0, h]; false if empty.
bool clip_to_box(Vec2 p, Vec2 q, double w, double h, double& t0, double& t1) {
  t0 = 0.0;
  t1 = 1.0;
  const double d[2] = {q.x - p.x, q.y - p.y};
  const double lo[2] = {-p.x, -p.y};
  const double hi[2] = {w - p.x, h - p.y};
  for (int k = 0; k < 2; ++k) {
    if (d[k] == 0.0) {
      if (lo[k] > 0.0 || hi[k] < 0.0) return false;
      continue;
    }
    double a = lo[k] / d[k], b = hi[k] / d[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  return t0 < t1;
}

}  // namespace

std::vector<Vec2> joint_positions(const ArticulatedFigure& figure, const MotionScript& script,
                                  int frame) {
  std::vector<Vec2> pos;
  bone_frames(figure, script, frame, &pos);
  return pos;
}

std::vector<std::vector<Vec2>> posed_parts(const ArticulatedFigure& figure,
                                           const MotionScript& script, int frame) {
  const auto frames = bone_frames(figure, script, frame, nullptr);
  std::vector<std::vector<Vec2>> out;
  for (const auto& part : figure.parts) {
    const BoneFrame& bf = frames.at(part.bone);
    const Vec2 perp{-bf.dir.y, bf.dir.x};
    std::vector<Vec2> pts;
    for (Vec2 l : part.local) pts.push_back(bf.origin + l.x * bf.dir + l.y * perp);
    out.push_back(std::move(pts));
  }
  return out;
}

bool point_in_polygon(Vec2 p, const std::vector<Vec2>& poly) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2 a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x)
      inside = !inside;
  }
  return inside;
}

namespace {

// Identity of a point where a segment is cut: the segment's endpoint ids and
// the exact cut position. A cut that moves at all gets a new id; an unchanged
// pose reproduces the same ids.
std::int64_t split_id(std::int64_t a, std::int64_t b, Vec2 p) {
  std::uint64_t h = mix_seed(static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b));
  h = mix_seed(h, std::bit_cast<std::uint64_t>(p.x));
  h = mix_seed(h, std::bit_cast<std::uint64_t>(p.y));
  return kSplitIdBase + static_cast<std::int64_t>(h >> 4);
}

}  // namespace

std::vector<VisibleSegment> visible_segments(const ArticulatedFigure& figure,
                                             const MotionScript& script, int frame) {
  const auto world = posed_parts(figure, script, frame);
  const double w = figure.canvas - 1, h = figure.canvas - 1;
  std::vector<VisibleSegment> out;

  for (std::size_t pi = 0; pi < figure.parts.size(); ++pi) {
    const FigurePart& part = figure.parts[pi];
    const auto& pts = world[pi];
    const std::size_t n = pts.size();
    const std::size_t segs = part.closed ? n : (n >= 1 ? n - 1 : 0);
    for (std::size_t si = 0; si < segs; ++si) {
      const std::size_t ia = si, ib = (si + 1) % n;
      const Vec2 a = pts[ia], b = pts[ib];
      double t0, t1;
      if (!clip_to_box(a, b, w, h, t0, t1)) continue;

      std::vector<std::pair<double, double>> hidden;
      const Vec2 d = b - a;
      for (std::size_t qi = 0; qi < figure.parts.size(); ++qi) {
        const FigurePart& occ = figure.parts[qi];
        if (!occ.closed || occ.depth <= part.depth) continue;
        const auto& poly = world[qi];
        std::vector<double> cuts{t0, t1};
        for (std::size_t k = 0; k < poly.size(); ++k) {
          const Vec2 q = poly[k], e = poly[(k + 1) % poly.size()] - q;
          const double denom = cross(d, e);
          if (std::abs(denom) < 1e-12) continue;
          const double t = cross(q - a, e) / denom;
          const double u = cross(q - a, d) / denom;
          if (u >= 0.0 && u <= 1.0 && t > t0 && t < t1) cuts.push_back(t);
        }
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
          if (cuts[k + 1] - cuts[k] <= 1e-12) continue;
          const double tm = 0.5 * (cuts[k] + cuts[k + 1]);
          if (point_in_polygon(a + tm * d, poly)) hidden.emplace_back(cuts[k], cuts[k + 1]);
        }
      }
      std::sort(hidden.begin(), hidden.end());

      // Walk [t0, t1] emitting the gaps between hidden intervals.
      double cursor = t0;
      auto emit = [&](double ta, double tb) {
        if (tb - ta <= 1e-9) return;
        VisibleSegment seg;
        seg.part = static_cast<int>(pi);
        seg.a = ta == 0.0 ? a : a + ta * d;
        seg.b = tb == 1.0 ? b : a + tb * d;
        seg.id_a = ta == 0.0 ? part.ids[ia] : split_id(part.ids[ia], part.ids[ib], seg.a);
        seg.id_b = tb == 1.0 ? part.ids[ib] : split_id(part.ids[ia], part.ids[ib], seg.b);
        out.push_back(seg);
      };
      for (auto [ha, hb] : hidden) {
        if (ha > cursor) emit(cursor, ha);
        cursor = std::max(cursor, hb);
      }
      if (cursor < t1) emit(cursor, t1);
    }
  }
  return out;
}

LineGraph pose_frame(const ArticulatedFigure& figure, const MotionScript& script, int frame) {
  const auto segs = visible_segments(figure, script, frame);
  LineGraph g;
  g.width = g.height = figure.canvas;
  g.ref_ids.emplace();
  std::unordered_map<std::int64_t, int> index;
  const double hi = figure.canvas - 1;
  auto vertex = [&](std::int64_t id, Vec2 p) {
    auto [it, fresh] = index.emplace(id, g.size());
    if (fresh) {
      g.vertices.push_back({std::clamp(p.x, 0.0, hi), std::clamp(p.y, 0.0, hi)});
      g.ref_ids->push_back(id);
    }
    return it->second;
  };
  for (const auto& s : segs) {
    const int i = vertex(s.id_a, s.a);
    const int j = vertex(s.id_b, s.b);
    if (i != j) g.edges.emplace_back(i, j);
  }
  canonicalize_edges(g.edges);
  return merge_close_vertices(g, kDefaultMergeEps);
}

void SynthConfig::validate() const {
  if (figures < 1 || motions < 1 || frames < 1)
    throw Error("synth: figures, motions and frames must be >= 1");
  if (canvas < 16) throw Error("synth: canvas must be >= 16");
  if (!(amplitude >= 0.0)) throw Error("synth: amplitude must be >= 0");
  if (line_width < 1) throw Error("synth: line_width must be >= 1");
}

std::string split_of(int figure, int motion, int n_figures, int n_motions) {
  auto held_out = [](int i, int n) { return n >= 2 && i >= n - std::max(1, n / 3); };
  const bool tf = held_out(figure, n_figures), tm = held_out(motion, n_motions);
  if (tf && tm) return "test";
  if (!tf && !tm) return "train";
  return "val";
}

namespace {

std::string padded(int v, int width) {
  std::string s = std::to_string(v);
  return std::string(std::max(0, width - static_cast<int>(s.size())), '0') + s;
}

}  // namespace

DatasetManifest generate_dataset(const SynthConfig& config, const std::filesystem::path& out) {
  config.validate();
  std::filesystem::create_directories(out);
  DatasetManifest m;
  m.root = out;
  m.generator = {{"figures", config.figures}, {"motions", config.motions},
                 {"frames", config.frames},   {"canvas", config.canvas},
                 {"seed", config.seed},       {"amplitude", config.amplitude},
                 {"line_width", config.line_width}};
  for (int f = 0; f < config.figures; ++f) {
    const ArticulatedFigure fig =
        make_figure(mix_seed(config.seed, 2 * f + 1), 2 + f % 3, config.canvas);
    for (int mo = 0; mo < config.motions; ++mo) {
      const MotionScript script =
          make_motion(mix_seed(config.seed, 2 * mo + 2), fig, config.frames, config.amplitude);
      SequenceEntry e;
      e.id = "f" + padded(f, 2) + "_m" + padded(mo, 2);
      e.figure = f;
      e.motion = mo;
      e.split = split_of(f, mo, config.figures, config.motions);
      std::filesystem::create_directories(out / e.id);
      for (int z = 0; z < config.frames; ++z) {
        const LineGraph g = pose_frame(fig, script, z);
        const std::string stem = e.id + "/frame_" + padded(z, 3);
        save_graph(g, out / (stem + ".json"));
        save_image(rasterize(g, config.line_width), out / (stem + ".png"));
        e.graphs.push_back(stem + ".json");
        e.images.push_back(stem + ".png");
      }
      m.sequences.push_back(std::move(e));
    }
  }
  std::ofstream os(out / kManifestName);
  if (!os) throw Error("cannot write " + (out / kManifestName).string());
  os << manifest_to_json(m).dump(2) << '\n';
  return m;
}

std::vector<GapStats> dataset_stats(const std::vector<std::vector<LineGraph>>& sequences,
                                    const std::vector<int>& gaps) {
  std::vector<GapStats> out;
  for (int gap : gaps) {
    if (gap < 0) throw Error("dataset_stats: gap must be >= 0");
    GapStats st;
    st.gap = gap;
    for (const auto& seq : sequences)
      for (std::size_t z = 0; z + gap + 1 < seq.size(); ++z) {
        const PairStats p = graph_stats(seq[z], seq[z + gap + 1]);
        st.occlusion_rate += p.occlusion_rate;
        st.avg_shift += p.avg_shift;
        st.max_shift += p.max_shift;
        ++st.pairs;
      }
    if (st.pairs > 0) {
      st.occlusion_rate /= st.pairs;
      st.avg_shift /= st.pairs;
      st.max_shift /= st.pairs;
    }
    out.push_back(st);
  }
  return out;
}

std::vector<GapStats> dataset_stats(const DatasetManifest& manifest,
                                    const std::vector<int>& gaps) {
  std::vector<std::vector<LineGraph>> seqs;
  for (const auto& s : manifest.sequences) {
    std::vector<LineGraph> frames;
    for (const auto& p : s.graphs) frames.push_back(load_graph(manifest.root / p));
    seqs.push_back(std::move(frames));
  }
  return dataset_stats(seqs, gaps);
}

}  // namespace inbet
