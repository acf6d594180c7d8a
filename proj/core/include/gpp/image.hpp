#pragma once

#include <cstddef>
#include <vector>

namespace gpp {

enum class PadMode { None, Replicate };

// Grayscale raster, row-major, intensities nominally in [0,1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0.0) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
  std::size_t size() const { return data.size(); }
};

// Non-overlapping tau x tau patches plus the grid they came from.
// Patch order is row-major over the grid (top-left first, scanning
// left-to-right then top-to-bottom); each patch vector is itself row-major.
struct PatchSet {
  int tau = 0;
  int grid_rows = 0;
  int grid_cols = 0;
  PadMode pad_mode = PadMode::None;
  std::vector<std::vector<double>> patches;

  int count() const { return grid_rows * grid_cols; }
  int patch_len() const { return tau * tau; }
};

PatchSet patch_transform(const Image& img, int tau, PadMode pad_mode = PadMode::None);

// Exact left inverse of patch_transform on the unpadded region. Output
// dimensions may be up to tau-1 smaller than the patch grid to undo
// replicate padding.
Image inverse_patch_transform(const PatchSet& ps, int out_height, int out_width);

double mse(const Image& a, const Image& b);

// 10*log10(peak^2 / MSE); +infinity when the images are identical.
double psnr(const Image& a, const Image& b, double peak = 1.0);

// Bilinear, corner-aligned. from_tau == to_tau is the identity. A single
// output sample (to_tau == 1) reads the patch center.
std::vector<double> resize_patch(const std::vector<double>& p, int from_tau, int to_tau);

// Adjoint of resize_patch(., from_tau, to_tau): maps a gradient with
// respect to the resized patch back onto the source patch.
std::vector<double> resize_patch_adjoint(const std::vector<double>& g, int from_tau, int to_tau);

}  // namespace gpp
