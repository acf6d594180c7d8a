#pragma once

#include <span>
#include <vector>

#include "gpp/sensing.hpp"

namespace gpp {

// Scalar statistics of one (y, x) pair under the gain/shift model
//   c_phi   = y' (Phi x)
//   c_one   = y' (1 x)      = sum(x) * sum(y)
//   theta_phi = |Phi x|^2
//   theta_one = |1 x|^2     = m * sum(x)^2
//   lambda  = (Phi x)' (1 x) = sum(x) * sum(Phi x)
struct CalibStats {
  double c_phi = 0.0;
  double c_one = 0.0;
  double theta_phi = 0.0;
  double theta_one = 0.0;
  double lambda = 0.0;
};

CalibStats calib_stats(const MeasurementOperator& op, std::span<const double> y,
                       std::span<const double> x);

// Variant for callers that already hold Phi x.
CalibStats calib_stats_from_product(std::span<const double> phi_x, std::span<const double> y,
                                    std::span<const double> x);

struct CalibrationSolve {
  CalibrationParams params;
  bool degenerate = false;  // fell back to (1, 0)
};

// Closed-form minimizer of |y - (a Phi + b 1) x|^2 over (a, b):
//   a* = (c_one*lambda - c_phi*theta_one) / (lambda^2 - theta_phi*theta_one)
//   b* = (c_one - a* lambda) / theta_one
// Returns the (1,0) fallback, flagged, when theta_one ~ 0 or the denominator
// vanishes relative to theta_phi*theta_one (Cauchy-Schwarz equality case).
CalibrationSolve solve_calibration(const CalibStats& stats);

// |y - (a Phi + b 1) x|^2
double calibration_loss(const MeasurementOperator& op, std::span<const double> y,
                        std::span<const double> x, CalibrationParams cal);

// Arithmetic means in ascending patch-index order.
CalibrationParams average_params(const std::vector<CalibrationParams>& per_patch);

}  // namespace gpp
