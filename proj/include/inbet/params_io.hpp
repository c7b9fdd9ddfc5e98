#pragma once

#include <filesystem>

#include "inbet/model.hpp"

namespace inbet {

// Binary container: 8-byte little-endian length L, L bytes of JSON manifest
// {"format", "version", "config", "tensors": [{"name", "shape", "offset"}]},
// then the tensors as little-endian float32 in manifest order. Offsets are in
// bytes from the start of the float block.
void save_params(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_params(const std::filesystem::path& path);

}  // namespace inbet
