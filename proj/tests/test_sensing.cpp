#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gpp/errors.hpp"
#include "gpp/prng.hpp"
#include "gpp/sensing.hpp"
#include "test_support.hpp"

using namespace gpp;

namespace {

// Independent reference for the stream contract, kept deliberately separate
// from prng.hpp.
std::uint64_t ref_splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<double> random_patch(int n, std::uint64_t seed) {
  Splitmix64 rng(seed);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = rng.next_unit();
  return x;
}

MeasurementOperator identity_operator(int n) {
  MeasurementOperator op;
  op.m = n;
  op.n = n;
  op.entries.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) op.entries[static_cast<std::size_t>(i) * n + i] = 1.0;
  return op;
}

}  // namespace

TEST_CASE("splitmix64 stream matches the reference sequence") {
  // frozen from an independent implementation
  Splitmix64 a(0);
  CHECK(a.next() == 0xe220a8397b1dcdafULL);
  CHECK(a.next() == 0x6e789e6aa1b965f4ULL);
  CHECK(a.next() == 0x06c45d188009454fULL);
  Splitmix64 b(42);
  CHECK(b.next() == 0xbdd732262feb6e95ULL);

  std::uint64_t state = 0x123456789abcdefULL;
  Splitmix64 c(state);
  for (int i = 0; i < 5; ++i) CHECK(c.next() == ref_splitmix(state));
}

TEST_CASE("box-muller normals follow the documented pairing") {
  NormalStream normals(42);
  CHECK(normals.next() == doctest::Approx(0.41471975043153037).epsilon(1e-15));
  CHECK(normals.next() == doctest::Approx(0.6526812221519428).epsilon(1e-15));
}

TEST_CASE("operator generation is deterministic and row-major from the stream") {
  const auto op1 = make_operator(7, 13, 99);
  const auto op2 = make_operator(7, 13, 99);
  CHECK(op1.entries == op2.entries);
  CHECK(make_operator(7, 13, 100).entries != op1.entries);

  NormalStream normals(99);
  for (int i = 0; i < 7 * 13; ++i) CHECK(op1.entries[static_cast<std::size_t>(i)] == normals.next());
}

TEST_CASE("operator entries pass a first-two-moment sanity check") {
  const auto op = make_operator(320, 320, 7);  // 102400 entries
  const double count = static_cast<double>(op.entries.size());
  double mean = 0.0;
  for (const double v : op.entries) mean += v;
  mean /= count;
  double var = 0.0;
  for (const double v : op.entries) var += (v - mean) * (v - mean);
  var /= count - 1;
  CHECK(std::abs(mean) <= 3.0 / std::sqrt(count));
  CHECK(std::abs(var - 1.0) <= 3.0 * std::sqrt(2.0 / (count - 1)));
}

TEST_CASE("forward_linear against a naive double loop") {
  const auto op = make_operator(3, 5, 11);
  const auto x = random_patch(5, 12);
  const auto y = forward_linear(op, x);
  for (int i = 0; i < 3; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 5; ++j) acc += op.at(i, j) * x[j];
    CHECK(std::abs(y[i] - acc) <= 1e-12);
  }
  CHECK(forward_linear(op, std::vector<double>(5, 0.0)) == std::vector<double>(3, 0.0));
  const auto id = identity_operator(4);
  const auto v = random_patch(4, 13);
  CHECK(forward_linear(id, v) == v);
  CHECK_THROWS_AS(forward_linear(op, v), DimensionMismatch);
}

TEST_CASE("forward_calibrated against a materialized ones matrix") {
  const auto op = make_operator(6, 10, 21);
  const auto x = random_patch(10, 22);
  const CalibrationParams cal{0.85, 0.5};
  const auto y = forward_calibrated(op, cal, x);
  for (int i = 0; i < op.m; ++i) {
    double acc = 0.0;
    for (int j = 0; j < op.n; ++j) acc += (cal.a * op.at(i, j) + cal.b * 1.0) * x[j];
    CHECK(std::abs(y[i] - acc) <= 1e-12);
  }

  CHECK(forward_calibrated(op, {1.0, 0.0}, x) == forward_linear(op, x));

  const auto shift_only = forward_calibrated(op, {0.0, 1.0}, x);
  double sum_x = 0.0;
  for (const double v : x) sum_x += v;
  for (const double v : shift_only) CHECK(v == doctest::Approx(sum_x).epsilon(1e-14));
}

TEST_CASE("forward_calibrated is linear in (a, b)") {
  const auto op = make_operator(5, 9, 31);
  const auto x = random_patch(9, 32);
  const CalibrationParams p1{0.7, -0.2}, p2{0.4, 0.9};
  const auto y12 = forward_calibrated(op, {p1.a + p2.a, p1.b + p2.b}, x);
  const auto y1 = forward_calibrated(op, p1, x);
  const auto y2 = forward_calibrated(op, p2, x);
  const auto y0 = forward_calibrated(op, {0.0, 0.0}, x);
  for (int i = 0; i < op.m; ++i) {
    CHECK(std::abs(y12[i] - (y1[i] + y2[i] - y0[i])) <= 1e-12);
  }
}

TEST_CASE("forward_phase") {
  const auto op = make_operator(6, 8, 41);
  auto x = random_patch(8, 42);
  for (auto& v : x) v -= 0.5;
  const auto y = forward_phase(op, x);
  const auto lin = forward_linear(op, x);
  for (int i = 0; i < op.m; ++i) CHECK(y[i] == std::abs(lin[i]));

  auto neg = x;
  for (auto& v : neg) v = -v;
  CHECK(forward_phase(op, neg) == y);
  CHECK(forward_phase(op, std::vector<double>(8, 0.0)) == std::vector<double>(6, 0.0));
}

TEST_CASE("forward_mask") {
  const auto x = random_patch(10, 51);
  std::vector<std::uint32_t> all(10);
  for (std::uint32_t i = 0; i < 10; ++i) all[i] = i;
  CHECK(forward_mask(all, x) == x);
  CHECK(forward_mask({}, x).empty());
  CHECK_THROWS_AS(forward_mask({3, 10}, x), IndexOutOfRange);

  const auto mask = make_mask(1024, 0.005, 9);
  CHECK(mask.size() == 5);  // floor(0.005 * 1024)
  for (std::size_t i = 1; i < mask.size(); ++i) CHECK(mask[i - 1] < mask[i]);
}

TEST_CASE("make_mask is a partial shuffle of the seeded stream") {
  Splitmix64 rng(77);
  auto expect = partial_shuffle_indices(rng, 64, 16);
  std::sort(expect.begin(), expect.end());
  CHECK(make_mask(64, 0.25, 77) == expect);
}

TEST_CASE("measure_image matches the experiment geometry") {
  const Image img = testing::random_image(256, 256, 61);
  MeasureParams p;
  p.model = SensingModel::Linear;
  p.mr = 0.10;
  p.seed = 5;
  const auto bundle = measure_image(img, 32, p);
  CHECK(bundle.m == 102);  // floor(0.10 * 1024)
  CHECK(bundle.n == 1024);
  CHECK(bundle.per_patch_y.size() == 64);
  for (const auto& y : bundle.per_patch_y) CHECK(y.size() == 102);

  p.mr = 0.01;
  CHECK(measure_image(img, 32, p).m == 10);
}

TEST_CASE("calibrated bundle at (1,0) equals the linear bundle") {
  const Image img = testing::random_image(16, 16, 62);
  MeasureParams lin;
  lin.model = SensingModel::Linear;
  lin.m = 12;
  lin.seed = 9;
  MeasureParams cal = lin;
  cal.model = SensingModel::Calibrated;
  cal.cal = {1.0, 0.0};
  const auto b1 = measure_image(img, 8, lin);
  const auto b2 = measure_image(img, 8, cal);
  CHECK(b1.per_patch_y == b2.per_patch_y);
  CHECK(b2.true_calibration.has_value());
}

TEST_CASE("phase bundle entries are nonnegative") {
  const Image img = testing::random_image(16, 16, 63);
  MeasureParams p;
  p.model = SensingModel::PhaseMagnitude;
  p.m = 16;
  p.seed = 3;
  const auto bundle = measure_image(img, 8, p);
  for (const auto& y : bundle.per_patch_y) {
    for (const double v : y) CHECK(v >= 0.0);
  }
}

TEST_CASE("gppm roundtrip, seed-only and explicit") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "gpp_test_gppm";
  fs::create_directories(dir);

  const Image img = testing::random_image(16, 16, 71);
  MeasureParams p;
  p.model = SensingModel::Calibrated;
  p.cal = {0.85, 0.5};
  p.m = 12;
  p.seed = 31;
  auto bundle = measure_image(img, 8, p);

  const auto path = (dir / "m.gppm").string();
  write_gppm(bundle, path);
  const auto back = read_gppm(path);
  CHECK(back.model == SensingModel::Calibrated);
  CHECK(back.m == 12);
  CHECK(back.n == 64);
  CHECK(back.tau == 8);
  CHECK(back.grid_rows == 2);
  CHECK(back.op.entries == bundle.op.entries);  // regenerated from the seed
  REQUIRE(back.true_calibration.has_value());
  CHECK(back.true_calibration->a == 0.85);
  CHECK(back.true_calibration->b == 0.5);
  for (std::size_t i = 0; i < bundle.per_patch_y.size(); ++i) {
    for (std::size_t j = 0; j < bundle.per_patch_y[i].size(); ++j) {
      CHECK(back.per_patch_y[i][j] ==
            static_cast<double>(static_cast<float>(bundle.per_patch_y[i][j])));
    }
  }

  // explicit operator: rewrite of a reread file is byte-identical
  bundle.explicit_operator = true;
  const auto path2 = (dir / "m2.gppm").string();
  write_gppm(bundle, path2);
  const auto back2 = read_gppm(path2);
  const auto path3 = (dir / "m3.gppm").string();
  write_gppm(back2, path3);
  std::ifstream f2(path2, std::ios::binary), f3(path3, std::ios::binary);
  const std::string bytes2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  const std::string bytes3((std::istreambuf_iterator<char>(f3)), std::istreambuf_iterator<char>());
  CHECK(bytes2 == bytes3);

  // pixel-mask bundles rebuild the mask from the seed
  MeasureParams mp;
  mp.model = SensingModel::PixelMask;
  mp.keep_fraction = 0.5;
  mp.seed = 17;
  const auto mb = measure_image(img, 8, mp);
  const auto mpath = (dir / "mask.gppm").string();
  write_gppm(mb, mpath);
  const auto mback = read_gppm(mpath);
  CHECK(mback.mask == mb.mask);
  CHECK(mback.m == static_cast<int>(mb.mask.size()));

  fs::remove_all(dir);
}
