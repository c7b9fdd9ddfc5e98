#include "inbet/params_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "inbet/config.hpp"

namespace inbet {

namespace {

constexpr const char* kFormat = "inbet-params";
constexpr int kVersion = 1;

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(const unsigned char* b) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

void put_f32(std::string& out, double v) {
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(bits >> (8 * i)));
}

double get_f32(const unsigned char* b) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | b[i];
  return static_cast<double>(std::bit_cast<float>(bits));
}

}  // namespace

void save_params(const ModelParams& params, const std::filesystem::path& path) {
  nlohmann::json tensors = nlohmann::json::array();
  std::string data;
  params.weights.visit([&](const std::string& name, const Mat& t) {
    tensors.push_back({{"name", name},
                       {"shape", {t.rows(), t.cols()}},
                       {"offset", data.size()}});
    for (double v : t.storage()) put_f32(data, v);
  });
  nlohmann::json manifest = {{"format", kFormat},
                             {"version", kVersion},
                             {"config", to_json(params.config)},
                             {"tensors", tensors}};
  const std::string header = manifest.dump();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  put_u64(os, header.size());
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  os.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!os) throw Error("write failed: " + path.string());
}

ModelParams load_params(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open parameter file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 8) throw Error(path.string() + ": truncated header");
  const std::uint64_t len = get_u64(raw);
  if (len > bytes.size() - 8) throw Error(path.string() + ": manifest length exceeds file size");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(8, len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": bad manifest: " + e.what());
  }
  if (manifest.value("format", "") != kFormat || manifest.value("version", 0) != kVersion)
    throw Error(path.string() + ": not an inbet parameter file (format/version mismatch)");

  ModelConfig config;
  update_from_json(config, manifest.at("config"));
  ModelParams params = zero_model(config);
  const auto& tensors = manifest.at("tensors");
  const std::size_t base = 8 + len;
  std::size_t index = 0;
  params.weights.visit([&](const std::string& name, Mat& t) {
    if (index >= tensors.size()) throw Error(path.string() + ": missing tensor " + name);
    const auto& entry = tensors[index++];
    if (entry.at("name").get<std::string>() != name)
      throw Error(path.string() + ": expected tensor " + name + ", found " +
                  entry.at("name").get<std::string>());
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols())
      throw Error(path.string() + ": tensor " + name + " has shape " + entry.at("shape").dump() +
                  ", expected " + t.shape_string());
    const std::size_t offset = base + entry.at("offset").get<std::size_t>();
    if (offset + 4 * t.size() > bytes.size())
      throw Error(path.string() + ": tensor " + name + " runs past the end of the file");
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = get_f32(raw + offset + 4 * i);
  });
  if (index != tensors.size()) throw Error(path.string() + ": unexpected extra tensors");
  return params;
}

}  // namespace inbet
