#include "inbet/dataset.hpp"

#include <fstream>

namespace inbet {

nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json seqs = nlohmann::json::array();
  for (const auto& s : m.sequences) {
    nlohmann::json frames = nlohmann::json::array();
    for (std::size_t f = 0; f < s.graphs.size(); ++f)
      frames.push_back({{"graph", s.graphs[f]}, {"image", s.images[f]}});
    seqs.push_back({{"id", s.id},
                    {"figure", s.figure},
                    {"motion", s.motion},
                    {"split", s.split},
                    {"frames", frames}});
  }
  return {{"format", "inbet-dataset"}, {"version", 1}, {"generator", m.generator},
          {"sequences", seqs}};
}

DatasetManifest load_manifest(const std::filesystem::path& dir) {
  const auto path = dir / kManifestName;
  std::ifstream is(path);
  if (!is) throw Error("cannot open dataset manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "inbet-dataset")
    throw Error(path.string() + ": not an inbet dataset manifest");
  DatasetManifest m;
  m.root = dir;
  m.generator = j.value("generator", nlohmann::json::object());
  try {
    for (const auto& s : j.at("sequences")) {
      SequenceEntry e;
      e.id = s.at("id").get<std::string>();
      e.figure = s.at("figure").get<int>();
      e.motion = s.at("motion").get<int>();
      e.split = s.at("split").get<std::string>();
      for (const auto& f : s.at("frames")) {
        e.graphs.push_back(f.at("graph").get<std::string>());
        e.images.push_back(f.at("image").get<std::string>());
      }
      if (e.graphs.empty()) throw Error(path.string() + ": sequence " + e.id + " has no frames");
      m.sequences.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return m;
}

std::vector<LoadedSequence> load_sequences(const DatasetManifest& manifest,
                                           const std::string& split, int spectral_dim) {
  std::vector<LoadedSequence> out;
  for (const auto& s : manifest.sequences) {
    if (!split.empty() && s.split != split) continue;
    LoadedSequence seq{s, {}};
    for (std::size_t f = 0; f < s.graphs.size(); ++f)
      seq.frames.push_back(std::make_shared<const FrameData>(
          prepare_frame(load_graph(manifest.root / s.graphs[f]),
                        load_image(manifest.root / s.images[f]), spectral_dim)));
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace inbet
