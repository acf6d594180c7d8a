#include "gpp/calibrate.hpp"

#include <cmath>

#include "gpp/errors.hpp"

namespace gpp {

namespace {

constexpr double kEpsDen = 1e-12;  // relative, against theta_phi * theta_one
constexpr double kEpsAbs = 1e-12;  // absolute floor for theta_one

}  // namespace

CalibStats calib_stats_from_product(std::span<const double> phi_x, std::span<const double> y,
                                    std::span<const double> x) {
  if (phi_x.size() != y.size()) throw DimensionMismatch("calib_stats: y length != m");
  double sum_x = 0.0;
  for (const double v : x) sum_x += v;
  double sum_y = 0.0, c_phi = 0.0, theta_phi = 0.0, sum_phi_x = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sum_y += y[i];
    c_phi += y[i] * phi_x[i];
    theta_phi += phi_x[i] * phi_x[i];
    sum_phi_x += phi_x[i];
  }
  CalibStats s;
  s.c_phi = c_phi;
  s.c_one = sum_x * sum_y;
  s.theta_phi = theta_phi;
  s.theta_one = static_cast<double>(y.size()) * sum_x * sum_x;
  s.lambda = sum_x * sum_phi_x;
  return s;
}

CalibStats calib_stats(const MeasurementOperator& op, std::span<const double> y,
                       std::span<const double> x) {
  if (y.size() != static_cast<std::size_t>(op.m)) throw DimensionMismatch("calib_stats: y length != m");
  if (x.size() != static_cast<std::size_t>(op.n)) throw DimensionMismatch("calib_stats: x length != n");
  const auto phi_x = forward_linear(op, x);
  return calib_stats_from_product(phi_x, y, x);
}

CalibrationSolve solve_calibration(const CalibStats& stats) {
  const double den = stats.lambda * stats.lambda - stats.theta_phi * stats.theta_one;
  const double scale = stats.theta_phi * stats.theta_one;
  if (stats.theta_one < kEpsAbs || std::abs(den) < kEpsDen * scale) {
    return {CalibrationParams{1.0, 0.0}, true};
  }
  CalibrationSolve out;
  out.params.a = (stats.c_one * stats.lambda - stats.c_phi * stats.theta_one) / den;
  out.params.b = (stats.c_one - out.params.a * stats.lambda) / stats.theta_one;
  out.degenerate = false;
  return out;
}

double calibration_loss(const MeasurementOperator& op, std::span<const double> y,
                        std::span<const double> x, CalibrationParams cal) {
  const auto model = forward_calibrated(op, cal, x);
  if (y.size() != model.size()) throw DimensionMismatch("calibration_loss: y length != m");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - model[i];
    acc += r * r;
  }
  return acc;
}

CalibrationParams average_params(const std::vector<CalibrationParams>& per_patch) {
  if (per_patch.empty()) throw EmptyInput("average_params: empty list");
  double a = 0.0, b = 0.0;
  for (const auto& p : per_patch) {
    a += p.a;
    b += p.b;
  }
  const double inv = 1.0 / static_cast<double>(per_patch.size());
  return {a * inv, b * inv};
}

}  // namespace gpp
