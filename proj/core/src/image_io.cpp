#include "gpp/image_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "binio.hpp"
#include "gpp/errors.hpp"

namespace gpp {

using binio::read_f32;
using binio::read_u32;
using binio::write_f32;
using binio::write_u32;

namespace {

int read_pnm_int(std::istream& is) {
  // Skips whitespace and '#' comments between header tokens.
  int c = is.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = is.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = is.get();
  }
  if (c == EOF || !std::isdigit(c)) throw IoError("malformed PGM header");
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = is.get();
  }
  if (c != EOF) is.unget();
  return value;
}

}  // namespace

Image read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char m0 = 0, m1 = 0;
  is.get(m0);
  is.get(m1);
  if (m0 != 'P' || m1 != '5') throw IoError(path + ": not a binary PGM (P5)");
  const int width = read_pnm_int(is);
  const int height = read_pnm_int(is);
  const int maxval = read_pnm_int(is);
  if (width < 1 || height < 1) throw IoError(path + ": bad PGM dimensions");
  if (maxval != 255) throw IoError(path + ": only maxval 255 is supported");
  is.get();  // single whitespace before raster
  Image img(height, width);
  std::vector<unsigned char> row(static_cast<std::size_t>(width));
  for (int r = 0; r < height; ++r) {
    is.read(reinterpret_cast<char*>(row.data()), width);
    if (!is) throw IoError(path + ": truncated PGM raster");
    for (int c = 0; c < width; ++c) img.at(r, c) = row[c] / 255.0;
  }
  return img;
}

void write_pgm(const Image& img, const std::string& path) {
  if (img.data.size() != static_cast<std::size_t>(img.height) * img.width) {
    throw IoError("write_pgm: malformed image");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width));
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const double scaled = std::lround(img.at(r, c) * 255.0);
      row[c] = static_cast<unsigned char>(scaled < 0 ? 0 : (scaled > 255 ? 255 : scaled));
    }
    os.write(reinterpret_cast<const char*>(row.data()), img.width);
  }
  if (!os) throw IoError("short write to " + path);
}

Image read_gppi(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "GPPI", 4) != 0) throw IoError(path + ": not a GPPI file");
  const std::uint32_t version = read_u32(is);
  if (version != 1) throw IoError(path + ": unsupported GPPI version");
  const std::uint32_t height = read_u32(is);
  const std::uint32_t width = read_u32(is);
  if (height == 0 || width == 0 || height > (1u << 20) || width > (1u << 20)) {
    throw IoError(path + ": bad GPPI dimensions");
  }
  Image img(static_cast<int>(height), static_cast<int>(width));
  for (auto& v : img.data) {
    v = static_cast<double>(read_f32(is));
    if (!std::isfinite(v)) throw IoError(path + ": non-finite intensity");
  }
  return img;
}

void write_gppi(const Image& img, const std::string& path) {
  if (img.data.size() != static_cast<std::size_t>(img.height) * img.width) {
    throw IoError("write_gppi: malformed image");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write("GPPI", 4);
  write_u32(os, 1);
  write_u32(os, static_cast<std::uint32_t>(img.height));
  write_u32(os, static_cast<std::uint32_t>(img.width));
  for (const double v : img.data) write_f32(os, static_cast<float>(v));
  if (!os) throw IoError("short write to " + path);
}

Image read_image(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[2] = {0, 0};
  is.read(magic, 2);
  is.close();
  if (magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
  if (magic[0] == 'G' && magic[1] == 'P') return read_gppi(path);
  throw IoError(path + ": unrecognized image format");
}

void write_image(const Image& img, const std::string& path) {
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".gppi") == 0) {
    write_gppi(img, path);
  } else {
    write_pgm(img, path);
  }
}

}  // namespace gpp
