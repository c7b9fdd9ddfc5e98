#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "inbet/pipeline.hpp"

namespace inbet {

struct SequenceEntry {
  std::string id;
  int figure = 0;
  int motion = 0;
  std::string split;                // "train", "val" or "test"
  std::vector<std::string> graphs;  // paths relative to the dataset root
  std::vector<std::string> images;
};

struct DatasetManifest {
  std::filesystem::path root;
  nlohmann::json generator;
  std::vector<SequenceEntry> sequences;
};

inline constexpr const char* kManifestName = "manifest.json";

nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& dir);

struct LoadedSequence {
  SequenceEntry entry;
  std::vector<std::shared_ptr<const FrameData>> frames;
};

// Loads every sequence of `split` ("" for all), with spectral embeddings cached.
std::vector<LoadedSequence> load_sequences(const DatasetManifest& manifest,
                                           const std::string& split, int spectral_dim);

}  // namespace inbet
