#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "inbet/synth.hpp"
#include "test_util.hpp"

using namespace inbet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("inbet_synth_" + name);
  fs::remove_all(p);
  return p;
}

MotionScript still(const ArticulatedFigure& fig, int frames, Vec2 root) {
  MotionScript s;
  s.angles.assign(frames, std::vector<double>(fig.joints.size(), 0.0));
  s.root.assign(frames, root);
  return s;
}

// A square body (nearer) and a vertical stroke on a second bone (farther).
// With no rotation the stroke crosses the body; rotated by pi it lies clear.
ArticulatedFigure body_and_stroke() {
  ArticulatedFigure f;
  f.canvas = 128;
  f.joints = {{-1, 0.0, 0.0, 0.0}, {0, 0.0, 20.0, 0.0}, {0, 0.0, 30.0, 0.0}};
  FigurePart body;
  body.bone = 1;
  body.depth = 1.0;
  body.closed = true;
  body.local = {{0, -10}, {20, -10}, {20, 10}, {0, 10}};
  body.ids = {1, 2, 3, 4};
  FigurePart stroke;
  stroke.bone = 2;
  stroke.depth = 0.0;
  stroke.local = {{5, -25}, {5, -15}, {5, -5}, {5, 5}, {5, 15}, {5, 25}};
  stroke.ids = {11, 12, 13, 14, 15, 16};
  f.parts = {body, stroke};
  return f;
}

}  // namespace

TEST_CASE("make_figure is seeded and respects the complexity contract") {
  const ArticulatedFigure a = make_figure(5, 3), b = make_figure(5, 3);
  CHECK(a.joints.size() == b.joints.size());
  CHECK(a.parts.size() == b.parts.size());
  for (std::size_t i = 0; i < a.parts.size(); ++i) {
    CHECK(a.parts[i].local == b.parts[i].local);
    CHECK(a.parts[i].ids == b.parts[i].ids);
  }

  const ArticulatedFigure one = make_figure(1, 1);
  CHECK(one.joints.size() == 2);
  std::size_t ids = 0;
  for (const auto& p : one.parts) ids += p.ids.size();
  CHECK(ids >= 2);

  for (int c = 1; c <= 5; ++c)
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const ArticulatedFigure f = make_figure(seed, c);
      const JointCountRange r = joint_count_range(c);
      CHECK(static_cast<int>(f.joints.size()) >= r.min);
      CHECK(static_cast<int>(f.joints.size()) <= r.max);
      std::set<std::int64_t> seen;
      for (std::size_t j = 0; j < f.joints.size(); ++j) {
        CHECK(f.joints[j].parent < static_cast<int>(j));  // tree in topological order
        if (j > 0) CHECK(f.joints[j].length > 0.0);
      }
      for (const auto& p : f.parts) {
        CHECK(p.ids.size() == p.local.size());
        for (auto id : p.ids) {
          CHECK(seen.insert(id).second);
          CHECK(id < kSplitIdBase);
        }
      }
    }
  CHECK(joint_count_range(5).min == 15);
  CHECK(joint_count_range(5).max == 19);
}

TEST_CASE("static motion gives identical frames with total matching") {
  const ArticulatedFigure fig = make_figure(3, 4);
  const MotionScript s = make_motion(9, fig, 5, 0.0);
  const LineGraph g0 = pose_frame(fig, s, 0);
  validate(g0);
  for (int z = 1; z < 5; ++z) {
    const LineGraph g = pose_frame(fig, s, z);
    CHECK(g == g0);
    const Matching m = derive_matching(g0, g);
    CHECK(static_cast<int>(m.pairs.size()) == g0.size());
  }
}

TEST_CASE("rigid root translation shifts every matched vertex equally") {
  const ArticulatedFigure fig = make_figure(4, 3);
  MotionScript s = make_motion(2, fig, 2, 0.0);
  s.root[1] = s.root[0] + Vec2{3.0, 2.0};
  const LineGraph a = pose_frame(fig, s, 0), b = pose_frame(fig, s, 1);
  const Matching m = derive_matching(a, b);
  CHECK(m.pairs.size() > 10);
  for (auto [i, j] : m.pairs) {
    CHECK(b.vertices[j].x - a.vertices[i].x == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(b.vertices[j].y - a.vertices[i].y == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("hidden-line removal against the posed geometry") {
  const ArticulatedFigure fig = body_and_stroke();
  MotionScript s = still(fig, 2, {64, 64});
  s.angles[1][2] = 3.14159265358979;
  const LineGraph crossing = pose_frame(fig, s, 0), clear = pose_frame(fig, s, 1);
  validate(crossing);
  const std::vector<Vec2> body = posed_parts(fig, s, 0)[0];

  std::set<std::int64_t> ids(crossing.ref_ids->begin(), crossing.ref_ids->end());
  CHECK(!ids.count(13));
  CHECK(!ids.count(14));
  CHECK(ids.count(12));
  CHECK(ids.count(15));
  int splits = 0;
  for (auto id : ids) splits += id >= kSplitIdBase;
  CHECK(splits == 2);
  for (auto [a, b] : crossing.edges) {
    const Vec2 mid = 0.5 * (crossing.vertices[a] + crossing.vertices[b]);
    const auto ia = (*crossing.ref_ids)[a], ib = (*crossing.ref_ids)[b];
    const auto stroke = [](std::int64_t id) { return id >= 11 && id <= 16; };
    if (stroke(ia) || stroke(ib)) CHECK(!point_in_polygon(mid, body));
  }
  // The body outline and the two visible stroke pieces stay separate.
  CHECK(laplacian_eigen(crossing).components == 3);
  const std::set<std::int64_t> clear_ids(clear.ref_ids->begin(), clear.ref_ids->end());
  for (std::int64_t id = 11; id <= 16; ++id) CHECK(clear_ids.count(id));
  CHECK(graph_stats(clear, crossing).occlusion_rate > 0.0);
  CHECK(graph_stats(clear, clear).occlusion_rate == 0.0);
}

TEST_CASE("generated sequences never leave a visible edge inside a nearer body") {
  const ArticulatedFigure fig = make_figure(11, 4);
  const MotionScript s = make_motion(12, fig, 6);
  for (int z = 0; z < 6; ++z) {
    const auto segs = visible_segments(fig, s, z);
    const auto posed = posed_parts(fig, s, z);
    for (const auto& seg : segs) {
      const Vec2 mid = 0.5 * (seg.a + seg.b);
      for (std::size_t p = 0; p < fig.parts.size(); ++p)
        if (fig.parts[p].closed && fig.parts[p].depth > fig.parts[seg.part].depth)
          CHECK(!point_in_polygon(mid, posed[p]));
    }
    validate(pose_frame(fig, s, z));
  }
}

TEST_CASE("generate_dataset: layout, splits and determinism") {
  SynthConfig tiny;
  tiny.figures = tiny.motions = 1;
  tiny.frames = 2;
  tiny.canvas = 64;
  const fs::path d1 = scratch_dir("tiny");
  const DatasetManifest m = generate_dataset(tiny, d1);
  REQUIRE(m.sequences.size() == 1);
  CHECK(m.sequences[0].graphs.size() == 2);
  for (const auto& p : m.sequences[0].graphs) CHECK(fs::exists(d1 / p));
  for (const auto& p : m.sequences[0].images) CHECK(fs::exists(d1 / p));
  CHECK(m.sequences[0].split == "train");
  const DatasetManifest back = load_manifest(d1);
  CHECK(manifest_to_json(back) == manifest_to_json(m));

  SynthConfig cfg;
  cfg.figures = 3;
  cfg.motions = 3;
  cfg.frames = 4;
  cfg.canvas = 64;
  const fs::path a = scratch_dir("a"), b = scratch_dir("b");
  const DatasetManifest ma = generate_dataset(cfg, a);
  generate_dataset(cfg, b);
  CHECK(slurp(a / kManifestName) == slurp(b / kManifestName));
  for (const auto& s : ma.sequences)
    for (std::size_t z = 0; z < s.graphs.size(); ++z) {
      CHECK(slurp(a / s.graphs[z]) == slurp(b / s.graphs[z]));
      CHECK(slurp(a / s.images[z]) == slurp(b / s.images[z]));
    }

  std::set<int> train_fig, train_mot, test_fig, test_mot;
  for (const auto& s : ma.sequences) {
    if (s.split == "train") train_fig.insert(s.figure), train_mot.insert(s.motion);
    if (s.split == "test") test_fig.insert(s.figure), test_mot.insert(s.motion);
  }
  CHECK(!train_fig.empty());
  CHECK(!test_fig.empty());
  for (int f : test_fig) CHECK(!train_fig.count(f));
  for (int mo : test_mot) CHECK(!train_mot.count(mo));
  CHECK(split_of(2, 0, 3, 3) == "val");

  // Per-gap statistics equal a direct scan over the stored graphs.
  const auto stats = dataset_stats(ma, {0, 1});
  for (const GapStats& st : stats) {
    double occ = 0.0, shift = 0.0;
    std::size_t n = 0;
    for (const auto& s : ma.sequences)
      for (std::size_t z = 0; z + st.gap + 1 < s.graphs.size(); ++z) {
        const PairStats p =
            graph_stats(load_graph(a / s.graphs[z]), load_graph(a / s.graphs[z + st.gap + 1]));
        occ += p.occlusion_rate;
        shift += p.avg_shift;
        ++n;
      }
    CHECK(st.pairs == n);
    CHECK(st.occlusion_rate == doctest::Approx(occ / n).epsilon(1e-12));
    CHECK(st.avg_shift == doctest::Approx(shift / n).epsilon(1e-12));
  }

  cfg.amplitude = 0.0;
  const fs::path still_dir = scratch_dir("still");
  for (const GapStats& st : dataset_stats(generate_dataset(cfg, still_dir), {0, 1, 2})) {
    CHECK(st.avg_shift == 0.0);
    CHECK(st.occlusion_rate == 0.0);
  }
  for (const auto& p : {d1, a, b, still_dir}) fs::remove_all(p);
}
