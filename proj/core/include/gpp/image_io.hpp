#pragma once

#include <string>

#include "gpp/image.hpp"

namespace gpp {

// Binary PGM (P5), maxval 255. Intensities map as pixel/255 on read and
// round(intensity*255) clamped to [0,255] on write.
Image read_pgm(const std::string& path);
void write_pgm(const Image& img, const std::string& path);

// Raw float raster: magic "GPPI", version u32, height u32, width u32,
// then height*width IEEE-754 f32 little-endian values, row-major.
Image read_gppi(const std::string& path);
void write_gppi(const Image& img, const std::string& path);

// Sniffs the magic bytes and dispatches to the matching reader.
Image read_image(const std::string& path);

// Picks the format from the extension (".gppi" raw float, anything else PGM).
void write_image(const Image& img, const std::string& path);

}  // namespace gpp
