#include "gpp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "gpp/calibrate.hpp"
#include "gpp/errors.hpp"
#include "gpp/prng.hpp"
#include "gpp/tensornet.hpp"

namespace gpp::verify {

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double h) {
  if (h <= 0.0) throw ConfigError("finite_diff_grad: h must be positive");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double fp = f(probe);
    probe[i] = saved - h;
    const double fm = f(probe);
    probe[i] = saved;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

CalibrationParams grid_search_calibration(const MeasurementOperator& op,
                                          std::span<const double> y, std::span<const double> x,
                                          std::pair<double, double> a_range,
                                          std::pair<double, double> b_range, double resolution) {
  if (resolution <= 0.0) throw ConfigError("grid_search_calibration: resolution must be positive");
  const int m = op.m, n = op.n;
  if (y.size() != static_cast<std::size_t>(m) || x.size() != static_cast<std::size_t>(n)) {
    throw DimensionMismatch("grid_search_calibration: shape mismatch");
  }
  // Naive materialized products.
  std::vector<double> v(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += op.at(i, j) * x[j];
    v[i] = acc;
  }
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += x[j];

  const int na = static_cast<int>(std::floor((a_range.second - a_range.first) / resolution + 0.5)) + 1;
  const int nb = static_cast<int>(std::floor((b_range.second - b_range.first) / resolution + 0.5)) + 1;

  double best_loss = std::numeric_limits<double>::infinity();
  CalibrationParams best{a_range.first, b_range.first};
  std::vector<double> r(static_cast<std::size_t>(m), 0.0);
  for (int ia = 0; ia < na; ++ia) {
    const double a = a_range.first + ia * resolution;
    // Residual against the a-part once per row of the scan; the b grid then
    // shifts every entry by the same b*s, so the exhaustive loss reduces to
    // sum((r_i - b*s)^2) = A - 2*b*s*B + m*(b*s)^2 with A = sum r^2, B = sum r.
    double A = 0.0, B = 0.0;
    for (int i = 0; i < m; ++i) {
      r[i] = y[i] - a * v[i];
      A += r[i] * r[i];
      B += r[i];
    }
    for (int ib = 0; ib < nb; ++ib) {
      const double b = b_range.first + ib * resolution;
      const double bs = b * s;
      const double loss = A - 2.0 * bs * B + static_cast<double>(m) * bs * bs;
      if (loss < best_loss) {
        best_loss = loss;
        best = {a, b};
      }
    }
  }
  return best;
}

std::vector<double> least_squares_oracle(const MeasurementOperator& op, std::span<const double> y,
                                         const std::vector<double>& w, int d) {
  const int m = op.m, n = op.n;
  if (d < 1 || w.size() != static_cast<std::size_t>(n) * d) {
    throw DimensionMismatch("least_squares_oracle: W must be n x d");
  }
  if (y.size() != static_cast<std::size_t>(m)) {
    throw DimensionMismatch("least_squares_oracle: y length != m");
  }
  std::vector<double> a(static_cast<std::size_t>(m) * d, 0.0);  // Phi W
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < d; ++k) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += op.at(i, j) * w[static_cast<std::size_t>(j) * d + k];
      a[static_cast<std::size_t>(i) * d + k] = acc;
    }
  }
  // Normal equations, dense elimination with partial pivoting.
  std::vector<double> g(static_cast<std::size_t>(d) * (d + 1), 0.0);  // [G | rhs]
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      double acc = 0.0;
      for (int i = 0; i < m; ++i) {
        acc += a[static_cast<std::size_t>(i) * d + r] * a[static_cast<std::size_t>(i) * d + c];
      }
      g[static_cast<std::size_t>(r) * (d + 1) + c] = acc;
    }
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += a[static_cast<std::size_t>(i) * d + r] * y[i];
    g[static_cast<std::size_t>(r) * (d + 1) + d] = acc;
  }
  double scale = 0.0;
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      scale = std::max(scale, std::abs(g[static_cast<std::size_t>(r) * (d + 1) + c]));
    }
  }
  const double tol = 1e-10 * std::max(1.0, scale);
  for (int col = 0; col < d; ++col) {
    int pivot = col;
    for (int r = col + 1; r < d; ++r) {
      if (std::abs(g[static_cast<std::size_t>(r) * (d + 1) + col]) >
          std::abs(g[static_cast<std::size_t>(pivot) * (d + 1) + col])) {
        pivot = r;
      }
    }
    if (std::abs(g[static_cast<std::size_t>(pivot) * (d + 1) + col]) < tol) {
      throw SingularSystem("least_squares_oracle: rank-deficient normal equations");
    }
    if (pivot != col) {
      for (int c = 0; c <= d; ++c) {
        std::swap(g[static_cast<std::size_t>(pivot) * (d + 1) + c],
                  g[static_cast<std::size_t>(col) * (d + 1) + c]);
      }
    }
    for (int r = col + 1; r < d; ++r) {
      const double f = g[static_cast<std::size_t>(r) * (d + 1) + col] /
                       g[static_cast<std::size_t>(col) * (d + 1) + col];
      for (int c = col; c <= d; ++c) {
        g[static_cast<std::size_t>(r) * (d + 1) + c] -=
            f * g[static_cast<std::size_t>(col) * (d + 1) + c];
      }
    }
  }
  std::vector<double> z(static_cast<std::size_t>(d), 0.0);
  for (int r = d - 1; r >= 0; --r) {
    double acc = g[static_cast<std::size_t>(r) * (d + 1) + d];
    for (int c = r + 1; c < d; ++c) acc -= g[static_cast<std::size_t>(r) * (d + 1) + c] * z[c];
    z[r] = acc / g[static_cast<std::size_t>(r) * (d + 1) + r];
  }
  return z;
}

std::pair<double, double> stationarity_residual(const MeasurementOperator& op,
                                                std::span<const double> y,
                                                std::span<const double> x, CalibrationParams cal) {
  const int m = op.m, n = op.n;
  if (y.size() != static_cast<std::size_t>(m) || x.size() != static_cast<std::size_t>(n)) {
    throw DimensionMismatch("stationarity_residual: shape mismatch");
  }
  // Materialized ones matrix, on purpose.
  const std::vector<double> ones(static_cast<std::size_t>(m) * n, 1.0);
  std::vector<double> v(static_cast<std::size_t>(m), 0.0);  // Phi x
  std::vector<double> u(static_cast<std::size_t>(m), 0.0);  // Ones x
  for (int i = 0; i < m; ++i) {
    double av = 0.0, au = 0.0;
    for (int j = 0; j < n; ++j) {
      av += op.at(i, j) * x[j];
      au += ones[static_cast<std::size_t>(i) * n + j] * x[j];
    }
    v[i] = av;
    u[i] = au;
  }
  auto dot = [m](std::span<const double> p, std::span<const double> q) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += p[i] * q[i];
    return acc;
  };
  const double da = -dot(y, v) - dot(v, y) + 2.0 * cal.a * dot(v, v) + cal.b * dot(v, u) +
                    cal.b * dot(u, v);
  const double db = -dot(y, u) - dot(u, y) + cal.a * dot(v, u) + cal.a * dot(u, v) +
                    2.0 * cal.b * dot(u, u);
  return {std::abs(da), std::abs(db)};
}

namespace {

struct CheckContext {
  std::ostream& out;
  bool all_ok = true;

  void report(const char* name, bool ok) {
    out << (ok ? "ok   " : "FAIL ") << name << "\n";
    all_ok = all_ok && ok;
  }
};

GeneratorNet small_check_net(std::uint64_t seed) {
  std::vector<LayerSpec> layers{DenseSpec{6, 18}, ReluSpec{}, DenseSpec{18, 16}, TanhSpec{}};
  auto net = make_net(6, 4, std::move(layers));
  init_weights_fanin(net, seed, 1.2);
  return net;
}

bool grads_close(std::span<const double> fd, std::span<const double> an, double tol) {
  if (fd.size() != an.size()) return false;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    if (std::abs(fd[i] - an[i]) > tol * std::max(1.0, std::abs(an[i]))) return false;
  }
  return true;
}

void check_latent_gradient(CheckContext& ctx) {
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 3 && ok; ++seed) {
    auto net = small_check_net(seed);
    Splitmix64 rng(seed * 97 + 5);
    std::vector<double> z(6), target(16);
    for (auto& v : z) v = rng.next_unit();
    for (auto& v : target) v = rng.next_unit();
    auto loss = [&](std::span<const double> probe) {
      const auto patch = generate(net, probe);
      double acc = 0.0;
      for (std::size_t i = 0; i < patch.size(); ++i) {
        const double r = patch[i] - target[i];
        acc += r * r;
      }
      return acc;
    };
    const auto patch = generate(net, z);
    std::vector<double> upstream(patch.size());
    for (std::size_t i = 0; i < patch.size(); ++i) upstream[i] = 2.0 * (patch[i] - target[i]);
    const auto analytic = grad_wrt_latent(net, z, upstream);
    const auto fd = finite_diff_grad(loss, z, 1e-5);
    ok = grads_close(fd, analytic, 1e-4);
  }
  ctx.report("latent gradient matches central finite differences", ok);
}

void check_weight_gradient(CheckContext& ctx) {
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 2 && ok; ++seed) {
    auto net = small_check_net(seed + 11);
    Splitmix64 rng(seed * 131 + 7);
    std::vector<double> z(6), target(16);
    for (auto& v : z) v = rng.next_unit();
    for (auto& v : target) v = rng.next_unit();
    auto loss_at = [&](std::span<const double> params) {
      GeneratorNet probe = net;
      probe.params.assign(params.begin(), params.end());
      const auto patch = generate(probe, z);
      double acc = 0.0;
      for (std::size_t i = 0; i < patch.size(); ++i) {
        const double r = patch[i] - target[i];
        acc += r * r;
      }
      return acc;
    };
    const auto patch = generate(net, z);
    std::vector<double> upstream(patch.size());
    for (std::size_t i = 0; i < patch.size(); ++i) upstream[i] = 2.0 * (patch[i] - target[i]);
    const auto analytic = grad_wrt_weights(net, z, upstream);
    const auto fd = finite_diff_grad(loss_at, net.params, 1e-5);
    ok = grads_close(fd, analytic, 1e-4);
  }
  ctx.report("weight gradient matches central finite differences", ok);
}

struct RandomInstance {
  MeasurementOperator op;
  std::vector<double> x;
  std::vector<double> y;
};

RandomInstance random_instance(std::uint64_t seed, int m, int n) {
  RandomInstance inst;
  inst.op = make_operator(m, n, seed);
  Splitmix64 rng(seed ^ 0xabcdef12345ULL);
  inst.x.resize(static_cast<std::size_t>(n));
  for (auto& v : inst.x) v = rng.next_unit();
  NormalStream noise(seed ^ 0x5a5a5a5aULL);
  inst.y.resize(static_cast<std::size_t>(m));
  for (auto& v : inst.y) v = noise.next() * 4.0;
  return inst;
}

void check_stationarity_at_solution(CheckContext& ctx) {
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 10 && ok; ++seed) {
    const auto inst = random_instance(seed, 12, 32);
    const auto solve = solve_calibration(calib_stats(inst.op, inst.y, inst.x));
    if (solve.degenerate) continue;
    double ynorm2 = 0.0;
    for (const double v : inst.y) ynorm2 += v * v;
    const auto [da, db] = stationarity_residual(inst.op, inst.y, inst.x, solve.params);
    const double tol = 1e-8 * std::max(1.0, ynorm2);
    ok = da <= tol && db <= tol;
  }
  ctx.report("closed-form solve zeroes the analytic partials", ok);
}

void check_stationarity_vs_fd(CheckContext& ctx) {
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 5 && ok; ++seed) {
    const auto inst = random_instance(seed, 10, 24);
    Splitmix64 rng(seed * 7919);
    const CalibrationParams cal{rng.next_unit() * 4.0 - 2.0, rng.next_unit() * 4.0 - 2.0};
    auto loss_ab = [&](std::span<const double> p) {
      return calibration_loss(inst.op, inst.y, inst.x, {p[0], p[1]});
    };
    const double p0[2] = {cal.a, cal.b};
    const auto fd = finite_diff_grad(loss_ab, std::span<const double>(p0, 2), 1e-6);
    const auto [da, db] = stationarity_residual(inst.op, inst.y, inst.x, cal);
    const double scale = std::max({1.0, std::abs(fd[0]), std::abs(fd[1])});
    ok = std::abs(std::abs(fd[0]) - da) <= 1e-6 * scale &&
         std::abs(std::abs(fd[1]) - db) <= 1e-6 * scale;
  }
  ctx.report("analytic partials agree with finite differences", ok);
}

void check_grid_vs_solve(CheckContext& ctx) {
  bool ok = true;
  const double res = 1e-2;
  for (std::uint64_t seed = 1; seed <= 3 && ok; ++seed) {
    auto inst = random_instance(seed, 16, 32);
    inst.y = forward_calibrated(inst.op, {0.85, 0.5}, inst.x);
    const auto solve = solve_calibration(calib_stats(inst.op, inst.y, inst.x));
    const auto grid = grid_search_calibration(inst.op, inst.y, inst.x, {-2.0, 2.0}, {-2.0, 2.0}, res);
    ok = !solve.degenerate && std::abs(grid.a - solve.params.a) <= res + 1e-9 &&
         std::abs(grid.b - solve.params.b) <= res + 1e-9;
  }
  ctx.report("grid search lands within one cell of the closed form", ok);
}

void check_ideal_identity(CheckContext& ctx) {
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 10 && ok; ++seed) {
    auto inst = random_instance(seed, 16, 48);
    inst.y = forward_linear(inst.op, inst.x);
    const auto solve = solve_calibration(calib_stats(inst.op, inst.y, inst.x));
    ok = !solve.degenerate && std::abs(solve.params.a - 1.0) <= 1e-9 &&
         std::abs(solve.params.b) <= 1e-9;
  }
  ctx.report("ideal measurements solve to gain 1, shift 0", ok);
}

void check_planted_identity(CheckContext& ctx) {
  bool ok = true;
  const CalibrationParams planted[] = {{0.85, 0.5}, {0.3, -0.25}};
  for (const auto& truth : planted) {
    for (std::uint64_t seed = 1; seed <= 5 && ok; ++seed) {
      auto inst = random_instance(seed + 100, 16, 48);
      inst.y = forward_calibrated(inst.op, truth, inst.x);
      const auto solve = solve_calibration(calib_stats(inst.op, inst.y, inst.x));
      ok = !solve.degenerate && std::abs(solve.params.a - truth.a) <= 1e-9 &&
           std::abs(solve.params.b - truth.b) <= 1e-9;
    }
  }
  ctx.report("planted gain/shift pairs are recovered exactly", ok);
}

void check_least_squares(CheckContext& ctx) {
  bool ok = true;
  const int m = 20, n = 32, d = 6;
  for (std::uint64_t seed = 1; seed <= 3 && ok; ++seed) {
    const auto op = make_operator(m, n, seed + 41);
    NormalStream wstream(seed * 17 + 3);
    std::vector<double> w(static_cast<std::size_t>(n) * d);
    for (auto& v : w) v = 0.2 * wstream.next();
    Splitmix64 rng(seed + 999);
    std::vector<double> z0(d);
    for (auto& v : z0) v = rng.next_unit();
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < d; ++k) x[j] += w[static_cast<std::size_t>(j) * d + k] * z0[k];
    }
    const auto y = forward_linear(op, x);
    const auto z = least_squares_oracle(op, y, w, d);
    for (int k = 0; k < d && ok; ++k) ok = std::abs(z[k] - z0[k]) <= 1e-10;
  }
  ctx.report("normal-equations oracle recovers planted latents", ok);
}

}  // namespace

bool run_check_suite(std::ostream& out) {
  CheckContext ctx{out};
  check_latent_gradient(ctx);
  check_weight_gradient(ctx);
  check_stationarity_at_solution(ctx);
  check_stationarity_vs_fd(ctx);
  check_grid_vs_solve(ctx);
  check_ideal_identity(ctx);
  check_planted_identity(ctx);
  check_least_squares(ctx);
  return ctx.all_ok;
}

}  // namespace gpp::verify
