#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "inbet/dataset.hpp"
#include "inbet/geom.hpp"

namespace inbet {

struct Joint {
  int parent = -1;          // -1 only for joint 0, the root
  double rest_angle = 0.0;  // relative to the parent bone; absolute for the root
  double length = 0.0;      // bone from parent to this joint; 0 for the root
  double mobility = 0.0;    // motion amplitude scale in radians
};

// Points live in the frame of bone (parent(bone) -> bone): x along the bone
// from the parent joint, y across it.
struct FigurePart {
  int bone = 1;
  double depth = 0.0;  // larger is nearer the viewer
  bool closed = false;  // closed outlines occlude parts of lower depth
  std::vector<Vec2> local;
  std::vector<std::int64_t> ids;
};

struct ArticulatedFigure {
  std::vector<Joint> joints;
  std::vector<FigurePart> parts;
  int canvas = 128;
  int complexity = 1;
};

// Persistent ids are below this; points created by cutting a segment get ids
// at or above it, derived from the cut segment and the exact cut position.
inline constexpr std::int64_t kSplitIdBase = 1'000'000;

// Complexity 1: one bone. Complexity c >= 2: pelvis, chest and head plus four
// limbs of min(c - 1, 3) bones each and 0..c-1 accessory bones, so the joint
// count lies in [3 + 4L, 3 + 4L + c - 1]. Decorations grow with c.
ArticulatedFigure make_figure(std::uint64_t seed, int complexity, int canvas = 128);

struct JointCountRange {
  int min = 0, max = 0;
};
JointCountRange joint_count_range(int complexity);

struct MotionScript {
  std::vector<std::vector<double>> angles;  // [frame][joint] offsets from rest
  std::vector<Vec2> root;                   // root joint position per frame

  int frames() const { return static_cast<int>(root.size()); }
};

// Sinusoidal joint swings (periods 28..44 frames) plus a root drift, scaled by
// `amplitude`; amplitude 0 gives a static pose.
MotionScript make_motion(std::uint64_t seed, const ArticulatedFigure& figure, int frames,
                         double amplitude = 1.0);

std::vector<Vec2> joint_positions(const ArticulatedFigure& figure, const MotionScript& script,
                                  int frame);

// World coordinates of every part point at `frame`.
std::vector<std::vector<Vec2>> posed_parts(const ArticulatedFigure& figure,
                                           const MotionScript& script, int frame);

struct VisibleSegment {
  Vec2 a, b;
  std::int64_t id_a = 0, id_b = 0;
  int part = 0;
};

// Part segments after clipping to the canvas and removing every portion that
// lies inside a closed part of greater depth.
std::vector<VisibleSegment> visible_segments(const ArticulatedFigure& figure,
                                             const MotionScript& script, int frame);

// Visible segments as a LineGraph with ref_ids, endpoints within 0.5 px merged.
LineGraph pose_frame(const ArticulatedFigure& figure, const MotionScript& script, int frame);

bool point_in_polygon(Vec2 p, const std::vector<Vec2>& polygon);

struct SynthConfig {
  int figures = 6;
  int motions = 6;
  int frames = 24;
  int canvas = 128;
  std::uint64_t seed = 7;
  double amplitude = 1.0;
  int line_width = 2;

  void validate() const;
};

// Figure f has complexity 2 + f % 3. The last max(1, n/3) figures and motions
// (when n >= 2) are test-only; sequences pairing a test figure with a test
// motion form the test split, pairs of train figure and train motion the
// train split, and mixed pairs the validation split.
std::string split_of(int figure, int motion, int n_figures, int n_motions);

DatasetManifest generate_dataset(const SynthConfig& config, const std::filesystem::path& out);

struct GapStats {
  int gap = 0;
  double occlusion_rate = 0.0;
  double avg_shift = 0.0;
  double max_shift = 0.0;  // mean over pairs of the per-pair maximum
  std::size_t pairs = 0;
};

// Averages graph_stats over all pairs (z, z + gap + 1).
std::vector<GapStats> dataset_stats(const std::vector<std::vector<LineGraph>>& sequences,
                                    const std::vector<int>& gaps);
std::vector<GapStats> dataset_stats(const DatasetManifest& manifest, const std::vector<int>& gaps);

}  // namespace inbet
