#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpp/image.hpp"

namespace gpp {

// Dense Gaussian operator. Entries are i.i.d. N(0,1), filled row-major from
// the splitmix64/Box-Muller stream of `seed`, so (m, n, seed) pins the
// matrix bit-for-bit.
struct MeasurementOperator {
  int m = 0;
  int n = 0;
  std::uint64_t seed = 0;
  std::vector<double> entries;  // m x n, row-major

  double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * n + j]; }
};

struct CalibrationParams {
  double a = 1.0;
  double b = 0.0;
};

enum class SensingModel : std::uint8_t {
  Linear = 0,
  Calibrated = 1,
  PhaseMagnitude = 2,
  PixelMask = 3,
};

// Per-patch observations plus everything needed to re-apply the forward
// model: one shared operator (or pixel mask) for all patches.
struct MeasurementBundle {
  SensingModel model = SensingModel::Linear;
  MeasurementOperator op;            // unused for PixelMask
  std::vector<std::uint32_t> mask;   // ascending pixel indices, PixelMask only
  int m = 0;
  int n = 0;
  int tau = 0;
  int grid_rows = 0;
  int grid_cols = 0;
  std::uint64_t seed = 0;
  bool explicit_operator = false;    // GPPM stores entries instead of the seed
  std::vector<std::vector<double>> per_patch_y;
  std::optional<CalibrationParams> true_calibration;

  int patch_count() const { return grid_rows * grid_cols; }
};

MeasurementOperator make_operator(int m, int n, std::uint64_t seed);

// floor(keep_fraction * n) indices without replacement, sorted ascending.
std::vector<std::uint32_t> make_mask(int n, double keep_fraction, std::uint64_t seed);

// y = Phi x
std::vector<double> forward_linear(const MeasurementOperator& op, std::span<const double> x);

// y = (a Phi + b 1) x. The ones matrix is never materialized; its action is
// sum(x) broadcast to every row.
std::vector<double> forward_calibrated(const MeasurementOperator& op, CalibrationParams cal,
                                       std::span<const double> x);

// y = |Phi x|
std::vector<double> forward_phase(const MeasurementOperator& op, std::span<const double> x);

// y = x restricted to the mask indices, ascending.
std::vector<double> forward_mask(const std::vector<std::uint32_t>& mask, std::span<const double> x);

// Phi^T r; the workhorse of every recovery gradient.
std::vector<double> adjoint_linear(const MeasurementOperator& op, std::span<const double> r);

struct MeasureParams {
  SensingModel model = SensingModel::Linear;
  int m = 0;                    // takes precedence when > 0
  double mr = 0.10;             // otherwise m = floor(mr * tau^2)
  double keep_fraction = 1.0;   // PixelMask only
  CalibrationParams cal{};      // Calibrated only; recorded as true_calibration
  std::uint64_t seed = 0;
  PadMode pad = PadMode::None;
};

// Applies the chosen forward model patch by patch with one shared operator.
MeasurementBundle measure_image(const Image& img, int tau, const MeasureParams& params);

// GPPM container (see README for the byte layout).
void write_gppm(const MeasurementBundle& bundle, const std::string& path);
MeasurementBundle read_gppm(const std::string& path);

}  // namespace gpp
