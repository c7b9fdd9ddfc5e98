#include "inbet/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

#include "inbet/tensor.hpp"

namespace inbet {

RasterImage::RasterImage(int w, int h, double fill)
    : width(w), height(h), intensities(static_cast<std::size_t>(w) * h, fill) {}

void RasterImage::validate() const {
  if (width < 0 || height < 0) throw Error("image: negative dimensions");
  if (intensities.size() != static_cast<std::size_t>(width) * height)
    throw Error("image: grid length does not match width*height");
  for (std::size_t i = 0; i < intensities.size(); ++i)
    if (!(intensities[i] >= 0.0 && intensities[i] <= 1.0))
      throw Error("image: intensity out of [0,1] at index " + std::to_string(i));
}

Mask::Mask(int w, int h, bool fill)
    : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

RasterImage load_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw Error("png: cannot read " + path.string() + ": " + img.message);
  img.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error("png: decode failed for " + path.string() + ": " + img.message);
  }
  RasterImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  for (std::size_t i = 0; i < buf.size(); ++i) out.intensities[i] = buf[i] / 255.0;
  return out;
}

void save_png(const RasterImage& image, const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error("png: cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("png: out of memory");
  }
  std::vector<std::uint8_t> rowbuf(static_cast<std::size_t>(image.width));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("png: write failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) rowbuf[x] = to_byte(image.at(x, y));
    png_write_row(png, rowbuf.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

RasterImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("pgm: cannot open " + path.string());
  auto next_token = [&in]() {
    std::string tok;
    while (in) {
      int c = in.peek();
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
    in >> tok;
    return tok;
  };
  if (next_token() != "P5") throw Error("pgm: not a binary P5 file: " + path.string());
  const int w = std::stoi(next_token());
  const int h = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw Error("pgm: unsupported header in " + path.string());
  in.get();  // single whitespace after maxval
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw Error("pgm: truncated pixel data in " + path.string());
  RasterImage out(w, h);
  for (std::size_t i = 0; i < buf.size(); ++i) out.intensities[i] = buf[i] / double(maxval);
  return out;
}

void save_pgm(const RasterImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("pgm: cannot open " + path.string() + " for writing");
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  std::vector<char> buf(image.intensities.size());
  for (std::size_t i = 0; i < buf.size(); ++i)
    buf[i] = static_cast<char>(to_byte(image.intensities[i]));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("pgm: write failed for " + path.string());
}

namespace {

bool is_pgm(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".pgm") return true;
  if (ext == ".png") return false;
  throw Error("image: unsupported extension '" + ext.string() + "' (use .png or .pgm)");
}

}  // namespace

RasterImage load_image(const std::filesystem::path& path) {
  return is_pgm(path) ? load_pgm(path) : load_png(path);
}

void save_image(const RasterImage& image, const std::filesystem::path& path) {
  if (is_pgm(path))
    save_pgm(image, path);
  else
    save_png(image, path);
}

Mask dilate3x3(const Mask& mask) {
  Mask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      bool hit = false;
      for (int dy = -1; dy <= 1 && !hit; ++dy)
        for (int dx = -1; dx <= 1 && !hit; ++dx) hit = mask.get_or(x + dx, y + dy, false);
      out.set(x, y, hit);
    }
  return out;
}

int count_components8(const Mask& mask) {
  std::vector<int> label(mask.bits.size(), -1);
  int n = 0;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y) || label[static_cast<std::size_t>(y) * mask.width + x] >= 0) continue;
      stack.push_back({x, y});
      label[static_cast<std::size_t>(y) * mask.width + x] = n;
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (!mask.get_or(nx, ny, false)) continue;
            auto& l = label[static_cast<std::size_t>(ny) * mask.width + nx];
            if (l >= 0) continue;
            l = n;
            stack.push_back({nx, ny});
          }
      }
      ++n;
    }
  return n;
}

}  // namespace inbet
