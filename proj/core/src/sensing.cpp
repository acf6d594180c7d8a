#include "gpp/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "binio.hpp"
#include "gpp/errors.hpp"
#include "gpp/prng.hpp"

namespace gpp {

MeasurementOperator make_operator(int m, int n, std::uint64_t seed) {
  if (m < 1 || n < 1) throw DimensionMismatch("make_operator: m and n must be >= 1");
  MeasurementOperator op;
  op.m = m;
  op.n = n;
  op.seed = seed;
  op.entries.resize(static_cast<std::size_t>(m) * n);
  NormalStream normals(seed);
  for (auto& e : op.entries) e = normals.next();
  return op;
}

std::vector<std::uint32_t> make_mask(int n, double keep_fraction, std::uint64_t seed) {
  if (n < 1) throw DimensionMismatch("make_mask: n must be >= 1");
  if (keep_fraction < 0.0 || keep_fraction > 1.0) {
    throw DimensionMismatch("make_mask: keep_fraction must be in [0,1]");
  }
  const auto k = static_cast<std::uint32_t>(std::floor(keep_fraction * n));
  Splitmix64 rng(seed);
  auto idx = partial_shuffle_indices(rng, static_cast<std::uint32_t>(n), k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<double> forward_linear(const MeasurementOperator& op, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(op.n)) {
    throw DimensionMismatch("forward_linear: x length != n");
  }
  std::vector<double> y(static_cast<std::size_t>(op.m));
  for (int i = 0; i < op.m; ++i) {
    const double* row = op.entries.data() + static_cast<std::size_t>(i) * op.n;
    double acc = 0.0;
    for (int j = 0; j < op.n; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

std::vector<double> forward_calibrated(const MeasurementOperator& op, CalibrationParams cal,
                                       std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(op.n)) {
    throw DimensionMismatch("forward_calibrated: x length != n");
  }
  double sum_x = 0.0;
  for (const double v : x) sum_x += v;
  const double shift = cal.b * sum_x;
  std::vector<double> y(static_cast<std::size_t>(op.m));
  for (int i = 0; i < op.m; ++i) {
    const double* row = op.entries.data() + static_cast<std::size_t>(i) * op.n;
    double acc = 0.0;
    for (int j = 0; j < op.n; ++j) acc += row[j] * x[j];
    y[i] = cal.a * acc + shift;
  }
  return y;
}

std::vector<double> forward_phase(const MeasurementOperator& op, std::span<const double> x) {
  auto y = forward_linear(op, x);
  for (auto& v : y) v = std::abs(v);
  return y;
}

std::vector<double> forward_mask(const std::vector<std::uint32_t>& mask,
                                 std::span<const double> x) {
  std::vector<double> y;
  y.reserve(mask.size());
  for (const std::uint32_t idx : mask) {
    if (idx >= x.size()) throw IndexOutOfRange("forward_mask: index exceeds signal length");
    y.push_back(x[idx]);
  }
  return y;
}

std::vector<double> adjoint_linear(const MeasurementOperator& op, std::span<const double> r) {
  if (r.size() != static_cast<std::size_t>(op.m)) {
    throw DimensionMismatch("adjoint_linear: r length != m");
  }
  std::vector<double> out(static_cast<std::size_t>(op.n), 0.0);
  for (int i = 0; i < op.m; ++i) {
    const double ri = r[i];
    const double* row = op.entries.data() + static_cast<std::size_t>(i) * op.n;
    for (int j = 0; j < op.n; ++j) out[j] += row[j] * ri;
  }
  return out;
}

MeasurementBundle measure_image(const Image& img, int tau, const MeasureParams& params) {
  const PatchSet ps = patch_transform(img, tau, params.pad);
  const int n = ps.patch_len();

  MeasurementBundle bundle;
  bundle.model = params.model;
  bundle.n = n;
  bundle.tau = tau;
  bundle.grid_rows = ps.grid_rows;
  bundle.grid_cols = ps.grid_cols;
  bundle.seed = params.seed;

  if (params.model == SensingModel::PixelMask) {
    bundle.mask = make_mask(n, params.keep_fraction, params.seed);
    bundle.m = static_cast<int>(bundle.mask.size());
  } else {
    int m = params.m;
    if (m <= 0) {
      if (params.mr <= 0.0 || params.mr > 1.0) {
        throw DimensionMismatch("measure_image: measurement rate must be in (0,1]");
      }
      m = static_cast<int>(std::floor(params.mr * n));
    }
    if (m < 1) throw DimensionMismatch("measure_image: m must be >= 1");
    bundle.op = make_operator(m, n, params.seed);
    bundle.m = m;
  }

  bundle.per_patch_y.reserve(ps.patches.size());
  for (const auto& patch : ps.patches) {
    switch (params.model) {
      case SensingModel::Linear:
        bundle.per_patch_y.push_back(forward_linear(bundle.op, patch));
        break;
      case SensingModel::Calibrated:
        bundle.per_patch_y.push_back(forward_calibrated(bundle.op, params.cal, patch));
        break;
      case SensingModel::PhaseMagnitude:
        bundle.per_patch_y.push_back(forward_phase(bundle.op, patch));
        break;
      case SensingModel::PixelMask:
        bundle.per_patch_y.push_back(forward_mask(bundle.mask, patch));
        break;
    }
  }
  if (params.model == SensingModel::Calibrated) bundle.true_calibration = params.cal;
  return bundle;
}

void write_gppm(const MeasurementBundle& bundle, const std::string& path) {
  if (bundle.per_patch_y.size() != static_cast<std::size_t>(bundle.patch_count())) {
    throw IoError("write_gppm: patch count does not match grid");
  }
  if (bundle.explicit_operator && bundle.model == SensingModel::PixelMask) {
    throw IoError("write_gppm: pixel masks are always seed-derived");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write("GPPM", 4);
  binio::write_u32(os, 1);
  binio::write_u8(os, static_cast<std::uint8_t>(bundle.model));
  binio::write_u32(os, static_cast<std::uint32_t>(bundle.m));
  binio::write_u32(os, static_cast<std::uint32_t>(bundle.n));
  binio::write_u32(os, static_cast<std::uint32_t>(bundle.tau));
  binio::write_u32(os, static_cast<std::uint32_t>(bundle.grid_rows));
  binio::write_u32(os, static_cast<std::uint32_t>(bundle.grid_cols));
  binio::write_u64(os, bundle.seed);
  binio::write_u8(os, bundle.explicit_operator ? 1 : 0);
  if (bundle.explicit_operator) {
    for (const double e : bundle.op.entries) binio::write_f32(os, static_cast<float>(e));
  }
  binio::write_u8(os, bundle.true_calibration ? 1 : 0);
  if (bundle.true_calibration) {
    binio::write_f64(os, bundle.true_calibration->a);
    binio::write_f64(os, bundle.true_calibration->b);
  }
  for (const auto& y : bundle.per_patch_y) {
    if (y.size() != static_cast<std::size_t>(bundle.m)) {
      throw IoError("write_gppm: measurement vector has wrong length");
    }
    for (const double v : y) binio::write_f32(os, static_cast<float>(v));
  }
  if (!os) throw IoError("short write to " + path);
}

MeasurementBundle read_gppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "GPPM", 4) != 0) throw IoError(path + ": not a GPPM file");
  const std::uint32_t version = binio::read_u32(is);
  if (version != 1) throw IoError(path + ": unsupported GPPM version");

  MeasurementBundle bundle;
  const std::uint8_t tag = binio::read_u8(is);
  if (tag > 3) throw IoError(path + ": unknown sensing model tag");
  bundle.model = static_cast<SensingModel>(tag);
  bundle.m = static_cast<int>(binio::read_u32(is));
  bundle.n = static_cast<int>(binio::read_u32(is));
  bundle.tau = static_cast<int>(binio::read_u32(is));
  bundle.grid_rows = static_cast<int>(binio::read_u32(is));
  bundle.grid_cols = static_cast<int>(binio::read_u32(is));
  bundle.seed = binio::read_u64(is);
  const int min_m = bundle.model == SensingModel::PixelMask ? 0 : 1;  // empty masks are legal
  if (bundle.tau < 1 || bundle.tau > 4096 || bundle.n < 1 || bundle.m < min_m ||
      bundle.m > (1 << 24) || bundle.grid_rows < 1 || bundle.grid_cols < 1 ||
      bundle.tau * bundle.tau != bundle.n ||
      (bundle.model == SensingModel::PixelMask && bundle.m > bundle.n)) {
    throw IoError(path + ": inconsistent GPPM geometry");
  }

  bundle.explicit_operator = binio::read_u8(is) != 0;
  if (bundle.model == SensingModel::PixelMask) {
    if (bundle.explicit_operator) throw IoError(path + ": explicit operator with mask model");
    Splitmix64 rng(bundle.seed);
    auto idx = partial_shuffle_indices(rng, static_cast<std::uint32_t>(bundle.n),
                                       static_cast<std::uint32_t>(bundle.m));
    std::sort(idx.begin(), idx.end());
    bundle.mask = std::move(idx);
  } else if (bundle.explicit_operator) {
    bundle.op.m = bundle.m;
    bundle.op.n = bundle.n;
    bundle.op.seed = bundle.seed;
    bundle.op.entries.resize(static_cast<std::size_t>(bundle.m) * bundle.n);
    for (auto& e : bundle.op.entries) e = static_cast<double>(binio::read_f32(is));
  } else {
    bundle.op = make_operator(bundle.m, bundle.n, bundle.seed);
  }

  if (binio::read_u8(is) != 0) {
    CalibrationParams cal;
    cal.a = binio::read_f64(is);
    cal.b = binio::read_f64(is);
    bundle.true_calibration = cal;
  }

  bundle.per_patch_y.resize(static_cast<std::size_t>(bundle.patch_count()));
  for (auto& y : bundle.per_patch_y) {
    y.resize(static_cast<std::size_t>(bundle.m));
    for (auto& v : y) v = static_cast<double>(binio::read_f32(is));
  }
  return bundle;
}

}  // namespace gpp
