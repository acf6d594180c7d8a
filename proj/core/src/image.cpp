#include "gpp/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gpp/errors.hpp"

namespace gpp {

namespace {

Image replicate_pad(const Image& img, int tau) {
  const int ph = (img.height + tau - 1) / tau * tau;
  const int pw = (img.width + tau - 1) / tau * tau;
  if (ph == img.height && pw == img.width) return img;
  Image out(ph, pw);
  for (int r = 0; r < ph; ++r) {
    const int sr = std::min(r, img.height - 1);
    for (int c = 0; c < pw; ++c) {
      out.at(r, c) = img.at(sr, std::min(c, img.width - 1));
    }
  }
  return out;
}

}  // namespace

PatchSet patch_transform(const Image& img, int tau, PadMode pad_mode) {
  if (tau < 1) throw DimensionMismatch("patch_transform: tau must be >= 1");
  if (img.height < 1 || img.width < 1 ||
      img.data.size() != static_cast<std::size_t>(img.height) * img.width) {
    throw DimensionMismatch("patch_transform: malformed image");
  }
  if (pad_mode == PadMode::None && (img.height % tau != 0 || img.width % tau != 0)) {
    throw DimensionMismatch("patch_transform: tau does not divide image dimensions");
  }
  Image padded;
  const Image* use_ptr = &img;
  if (pad_mode == PadMode::Replicate) {
    padded = replicate_pad(img, tau);
    use_ptr = &padded;
  }
  const Image& use = *use_ptr;

  PatchSet ps;
  ps.tau = tau;
  ps.pad_mode = pad_mode;
  ps.grid_rows = use.height / tau;
  ps.grid_cols = use.width / tau;
  ps.patches.reserve(static_cast<std::size_t>(ps.grid_rows) * ps.grid_cols);
  for (int gr = 0; gr < ps.grid_rows; ++gr) {
    for (int gc = 0; gc < ps.grid_cols; ++gc) {
      std::vector<double> patch(static_cast<std::size_t>(tau) * tau);
      for (int r = 0; r < tau; ++r) {
        for (int c = 0; c < tau; ++c) {
          patch[static_cast<std::size_t>(r) * tau + c] = use.at(gr * tau + r, gc * tau + c);
        }
      }
      ps.patches.push_back(std::move(patch));
    }
  }
  return ps;
}

Image inverse_patch_transform(const PatchSet& ps, int out_height, int out_width) {
  const int full_h = ps.grid_rows * ps.tau;
  const int full_w = ps.grid_cols * ps.tau;
  if (ps.patches.size() != static_cast<std::size_t>(ps.count())) {
    throw DimensionMismatch("inverse_patch_transform: patch count does not match grid");
  }
  if (out_height > full_h || out_width > full_w || out_height <= full_h - ps.tau ||
      out_width <= full_w - ps.tau) {
    throw DimensionMismatch("inverse_patch_transform: output size inconsistent with grid");
  }
  Image out(out_height, out_width);
  for (int gr = 0; gr < ps.grid_rows; ++gr) {
    for (int gc = 0; gc < ps.grid_cols; ++gc) {
      const auto& patch = ps.patches[static_cast<std::size_t>(gr) * ps.grid_cols + gc];
      if (patch.size() != static_cast<std::size_t>(ps.patch_len())) {
        throw DimensionMismatch("inverse_patch_transform: patch has wrong length");
      }
      for (int r = 0; r < ps.tau; ++r) {
        const int ir = gr * ps.tau + r;
        if (ir >= out_height) break;
        for (int c = 0; c < ps.tau; ++c) {
          const int ic = gc * ps.tau + c;
          if (ic >= out_width) break;
          out.at(ir, ic) = patch[static_cast<std::size_t>(r) * ps.tau + c];
        }
      }
    }
  }
  return out;
}

double mse(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width) {
    throw DimensionMismatch("mse: image dimensions differ");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

double psnr(const Image& a, const Image& b, double peak) {
  if (peak <= 0.0) throw DimensionMismatch("psnr: peak must be positive");
  const double err = mse(a, b);
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / err);
}

std::vector<double> resize_patch(const std::vector<double>& p, int from_tau, int to_tau) {
  if (from_tau < 1 || to_tau < 1 ||
      p.size() != static_cast<std::size_t>(from_tau) * from_tau) {
    throw DimensionMismatch("resize_patch: bad patch size");
  }
  if (from_tau == to_tau) return p;
  std::vector<double> out(static_cast<std::size_t>(to_tau) * to_tau, 0.0);
  const double scale =
      to_tau > 1 ? static_cast<double>(from_tau - 1) / (to_tau - 1) : 0.0;
  const double center = (from_tau - 1) / 2.0;
  for (int r = 0; r < to_tau; ++r) {
    const double sy = to_tau > 1 ? r * scale : center;
    const int y0 = std::min(static_cast<int>(sy), from_tau - 1);
    const int y1 = std::min(y0 + 1, from_tau - 1);
    const double fy = sy - y0;
    for (int c = 0; c < to_tau; ++c) {
      const double sx = to_tau > 1 ? c * scale : center;
      const int x0 = std::min(static_cast<int>(sx), from_tau - 1);
      const int x1 = std::min(x0 + 1, from_tau - 1);
      const double fx = sx - x0;
      const double v00 = p[static_cast<std::size_t>(y0) * from_tau + x0];
      const double v01 = p[static_cast<std::size_t>(y0) * from_tau + x1];
      const double v10 = p[static_cast<std::size_t>(y1) * from_tau + x0];
      const double v11 = p[static_cast<std::size_t>(y1) * from_tau + x1];
      out[static_cast<std::size_t>(r) * to_tau + c] =
          (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
    }
  }
  return out;
}

std::vector<double> resize_patch_adjoint(const std::vector<double>& g, int from_tau, int to_tau) {
  if (from_tau < 1 || to_tau < 1 || g.size() != static_cast<std::size_t>(to_tau) * to_tau) {
    throw DimensionMismatch("resize_patch_adjoint: bad gradient size");
  }
  if (from_tau == to_tau) return g;
  std::vector<double> out(static_cast<std::size_t>(from_tau) * from_tau, 0.0);
  const double scale =
      to_tau > 1 ? static_cast<double>(from_tau - 1) / (to_tau - 1) : 0.0;
  const double center = (from_tau - 1) / 2.0;
  for (int r = 0; r < to_tau; ++r) {
    const double sy = to_tau > 1 ? r * scale : center;
    const int y0 = std::min(static_cast<int>(sy), from_tau - 1);
    const int y1 = std::min(y0 + 1, from_tau - 1);
    const double fy = sy - y0;
    for (int c = 0; c < to_tau; ++c) {
      const double sx = to_tau > 1 ? c * scale : center;
      const int x0 = std::min(static_cast<int>(sx), from_tau - 1);
      const int x1 = std::min(x0 + 1, from_tau - 1);
      const double fx = sx - x0;
      const double up = g[static_cast<std::size_t>(r) * to_tau + c];
      out[static_cast<std::size_t>(y0) * from_tau + x0] += (1 - fy) * (1 - fx) * up;
      out[static_cast<std::size_t>(y0) * from_tau + x1] += (1 - fy) * fx * up;
      out[static_cast<std::size_t>(y1) * from_tau + x0] += fy * (1 - fx) * up;
      out[static_cast<std::size_t>(y1) * from_tau + x1] += fy * fx * up;
    }
  }
  return out;
}

}  // namespace gpp
