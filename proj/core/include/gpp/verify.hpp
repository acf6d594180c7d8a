#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "gpp/sensing.hpp"

namespace gpp::verify {

// Independent oracles backing the test suites and the `check` CLI command.
// Deliberately naive: materialized ones-matrices, dense elimination,
// exhaustive grids. They share no code with the implementations they check.

// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h per coordinate.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double h);

// Exhaustive minimizer of |y - (a Phi + b 1) x|^2 over the grid
// a in [a_range], b in [b_range] at the given resolution. Ties break to the
// lowest scan index (a-major, then b).
CalibrationParams grid_search_calibration(const MeasurementOperator& op,
                                          std::span<const double> y, std::span<const double> x,
                                          std::pair<double, double> a_range,
                                          std::pair<double, double> b_range, double resolution);

// Solves (Phi W)'(Phi W) z = (Phi W)' y by Gaussian elimination with partial
// pivoting. W is n x d row-major (the linear generator matrix). Throws
// SingularSystem below the 1e-10 pivot tolerance.
std::vector<double> least_squares_oracle(const MeasurementOperator& op, std::span<const double> y,
                                         const std::vector<double>& w, int d);

// (|dL/da|, |dL/db|) of the calibrated loss at (a, b), computed from the
// analytic partials with a materialized ones matrix.
std::pair<double, double> stationarity_residual(const MeasurementOperator& op,
                                                std::span<const double> y,
                                                std::span<const double> x, CalibrationParams cal);

// Runs the full oracle suite at toy sizes, one pass/fail line per property.
bool run_check_suite(std::ostream& out);

}  // namespace gpp::verify
