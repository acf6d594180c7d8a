#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "gpp/errors.hpp"
#include "gpp/image.hpp"
#include "gpp/image_io.hpp"
#include "gpp/prng.hpp"
#include "test_support.hpp"

using namespace gpp;

TEST_CASE("patch transform geometry") {
  const Image img = testing::random_image(256, 256, 1);
  const auto ps = patch_transform(img, 32);
  CHECK(ps.count() == 64);
  CHECK(ps.patch_len() == 1024);
  CHECK(ps.grid_rows == 8);
  CHECK(ps.grid_cols == 8);
}

TEST_CASE("single-patch transform is the vectorized image") {
  const Image img = testing::random_image(16, 16, 2);
  const auto ps = patch_transform(img, 16);
  REQUIRE(ps.count() == 1);
  CHECK(ps.patches[0] == img.data);
}

TEST_CASE("non-divisible size without padding is rejected") {
  const Image img = testing::random_image(33, 33, 3);
  CHECK_THROWS_AS(patch_transform(img, 32), DimensionMismatch);
  CHECK_NOTHROW(patch_transform(img, 32, PadMode::Replicate));
}

TEST_CASE("roundtrip identity, exact") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Splitmix64 rng(seed);
    const int tau = 1 + static_cast<int>(rng.next() % 8);
    const int gr = 1 + static_cast<int>(rng.next() % 4);
    const int gc = 1 + static_cast<int>(rng.next() % 4);
    const Image img = testing::random_image(gr * tau, gc * tau, seed + 100);
    const Image back = inverse_patch_transform(patch_transform(img, tau), img.height, img.width);
    CHECK(back.data == img.data);  // bit-for-bit
  }
}

TEST_CASE("replicate-padded roundtrip recovers the unpadded region") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Image img = testing::random_image(30, 30, seed + 40);
    const auto ps = patch_transform(img, 8, PadMode::Replicate);
    CHECK(ps.grid_rows == 4);
    const Image back = inverse_patch_transform(ps, 30, 30);
    CHECK(back.data == img.data);
  }
}

TEST_CASE("all-zero patches invert to the zero image") {
  PatchSet ps;
  ps.tau = 4;
  ps.grid_rows = 2;
  ps.grid_cols = 3;
  ps.patches.assign(6, std::vector<double>(16, 0.0));
  const Image img = inverse_patch_transform(ps, 8, 12);
  for (const double v : img.data) CHECK(v == 0.0);
}

TEST_CASE("inverse rejects inconsistent output sizes") {
  const auto ps = patch_transform(testing::random_image(16, 16, 9), 8);
  CHECK_THROWS_AS(inverse_patch_transform(ps, 17, 16), DimensionMismatch);
  CHECK_THROWS_AS(inverse_patch_transform(ps, 8, 16), DimensionMismatch);
}

TEST_CASE("permuting patches permutes image blocks") {
  const Image img = testing::random_image(8, 16, 11);
  auto ps = patch_transform(img, 8);
  REQUIRE(ps.count() == 2);
  std::swap(ps.patches[0], ps.patches[1]);
  const Image swapped = inverse_patch_transform(ps, 8, 16);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      CHECK(swapped.at(r, c) == img.at(r, c + 8));
      CHECK(swapped.at(r, c + 8) == img.at(r, c));
    }
  }
}

TEST_CASE("psnr values") {
  const Image a = testing::random_image(8, 8, 21);
  CHECK(std::isinf(psnr(a, a)));

  Image b = a;  // constant offset 0.1 -> MSE 0.01 -> 20 dB
  for (auto& v : b.data) v += 0.1;
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));

  Image zeros(4, 4), halves(4, 4);
  for (auto& v : halves.data) v = 0.5;
  CHECK(psnr(zeros, halves) == doctest::Approx(10.0 * std::log10(1.0 / 0.25)).epsilon(1e-12));
}

TEST_CASE("psnr is symmetric and scale covariant") {
  const Image a = testing::random_image(6, 9, 22);
  const Image b = testing::random_image(6, 9, 23);
  CHECK(psnr(a, b) == psnr(b, a));
  const double s = 3.7;
  Image as = a, bs = b;
  for (auto& v : as.data) v *= s;
  for (auto& v : bs.data) v *= s;
  CHECK(psnr(as, bs, s) == doctest::Approx(psnr(a, b, 1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(psnr(a, testing::random_image(9, 6, 24)), DimensionMismatch);
}

TEST_CASE("resize_patch basics") {
  Splitmix64 rng(31);
  std::vector<double> p(25);
  for (auto& v : p) v = rng.next_unit();
  CHECK(resize_patch(p, 5, 5) == p);

  std::vector<double> flat(9, 0.42);
  const auto up = resize_patch(flat, 3, 7);
  for (const double v : up) CHECK(v == doctest::Approx(0.42).epsilon(1e-15));

  // hand-computed bilinear: 2x2 [0 1; 0 1] -> 3x3 middle column 0.5
  const std::vector<double> corners{0.0, 1.0, 0.0, 1.0};
  const auto mid = resize_patch(corners, 2, 3);
  CHECK(mid[1] == doctest::Approx(0.5));
  CHECK(mid[4] == doctest::Approx(0.5));
  CHECK(mid[7] == doctest::Approx(0.5));
  CHECK(mid[0] == doctest::Approx(0.0));
  CHECK(mid[2] == doctest::Approx(1.0));
}

TEST_CASE("resize adjoint satisfies the inner-product identity") {
  Splitmix64 rng(33);
  const int from = 5, to = 9;
  std::vector<double> x(from * from), g(to * to);
  for (auto& v : x) v = rng.next_unit();
  for (auto& v : g) v = rng.next_unit() - 0.5;
  const auto rx = resize_patch(x, from, to);
  const auto rtg = resize_patch_adjoint(g, from, to);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) lhs += rx[i] * g[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * rtg[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("pgm roundtrip with quantization") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "gpp_test_pgm";
  fs::create_directories(dir);
  const auto path = (dir / "img.pgm").string();

  const Image img = testing::random_image(11, 7, 51);
  write_pgm(img, path);
  const Image back = read_pgm(path);
  REQUIRE(back.height == 11);
  REQUIRE(back.width == 7);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5 / 255.0 + 1e-12);
  }
  // writing the quantized image again is a fixed point
  const auto path2 = (dir / "img2.pgm").string();
  write_pgm(back, path2);
  CHECK(read_pgm(path2).data == back.data);
  fs::remove_all(dir);
}

TEST_CASE("gppi roundtrip is f32 exact") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "gpp_test_gppi";
  fs::create_directories(dir);
  const auto path = (dir / "img.gppi").string();

  Image img = testing::random_image(5, 13, 52);
  for (auto& v : img.data) v = static_cast<double>(static_cast<float>(v));
  write_gppi(img, path);
  const Image back = read_image(path);  // sniffs the magic
  CHECK(back.data == img.data);
  fs::remove_all(dir);
}
