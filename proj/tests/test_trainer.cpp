#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "gpp/errors.hpp"
#include "gpp/image_io.hpp"
#include "gpp/prng.hpp"
#include "gpp/tensornet.hpp"
#include "gpp/trainer.hpp"
#include "test_support.hpp"

using namespace gpp;

namespace {

GeneratorNet tiny8_arch() {
  std::vector<LayerSpec> layers{DenseSpec{8, 64},        ReshapeSpec{4, 4, 4},
                                UpsampleSpec{2},         Conv2dSpec{4, 4, 3, 1, 1},
                                ReluSpec{},              Conv2dSpec{4, 1, 3, 1, 1},
                                TanhSpec{}};
  return make_net(8, 8, std::move(layers));
}

double moment_distance(const GeneratorNet& gen, const PatchDataset& ds) {
  Splitmix64 rng(123);
  double gm = 0.0, gs = 0.0;
  int count = 0;
  for (int s = 0; s < 32; ++s) {
    std::vector<double> z(static_cast<std::size_t>(gen.latent_dim));
    for (auto& v : z) v = rng.next_unit();
    for (const double v : generate(gen, z)) {
      gm += v;
      gs += v * v;
      ++count;
    }
  }
  gm /= count;
  gs = std::sqrt(std::max(0.0, gs / count - gm * gm));
  double dm = 0.0, dsd = 0.0;
  int dc = 0;
  for (const auto& p : ds.patches) {
    for (const double v : p) {
      dm += v;
      dsd += v * v;
      ++dc;
    }
  }
  dm /= dc;
  dsd = std::sqrt(std::max(0.0, dsd / dc - dm * dm));
  return (gm - dm) * (gm - dm) + (gs - dsd) * (gs - dsd);
}

}  // namespace

TEST_CASE("build_dataset geometry and determinism") {
  const Image img = testing::random_image(32, 32, 201);
  const auto one = build_dataset({testing::random_image(32, 32, 202)}, 32, 0, 1);
  CHECK(one.patches.size() == 1);

  const auto big = build_dataset({testing::random_image(256, 256, 203)}, 32, 64, 2);
  CHECK(big.patches.size() == 64);

  const auto a = build_dataset({img}, 8, 10, 7);
  const auto b = build_dataset({img}, 8, 10, 7);
  CHECK(a.patches == b.patches);

  // replicate padding keeps odd sizes usable
  const auto padded = build_dataset({testing::random_image(30, 30, 204)}, 8, 0, 3);
  CHECK(padded.patches.size() == 16);
}

TEST_CASE("synthetic corpus is deterministic and in range") {
  const auto a = synthetic_corpus(64, 16, 7);
  const auto b = synthetic_corpus(64, 16, 7);
  CHECK(a.patches == b.patches);
  CHECK(a.patches.size() == 64);
  for (const auto& p : a.patches) {
    for (const double v : p) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("decoder overfits a single patch") {
  const auto ds = synthetic_corpus(1, 16, 5);
  const auto arch = make_generator_arch(16, 16);
  std::vector<double> losses;
  train_decoder(ds, arch, 500, 7e-4, 33, &losses);
  REQUIRE(losses.size() == 500);
  CHECK(losses.back() < 1e-3);
}

TEST_CASE("decoder fits the 64-patch synthetic corpus") {
  const auto ds = synthetic_corpus(64, 16, 7);
  const auto arch = make_generator_arch(16, 16);
  std::vector<double> losses;
  const auto net = train_decoder(ds, arch, 2000, 7e-4, 44, &losses);
  CHECK(losses.back() < 0.01);

  // per-epoch loss non-increasing over any 10-epoch window, 5% jitter allowed
  for (std::size_t t = 10; t < losses.size(); ++t) {
    CHECK(losses[t] <= losses[t - 10] * 1.05);
  }

  // outputs stay in range at the end of training
  Splitmix64 rng(45);
  for (int s = 0; s < 8; ++s) {
    const auto z = testing::interior_latent(net.latent_dim, rng, 0.0, 1.0);
    for (const double v : generate(net, z)) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("decoder training is deterministic and lr 0 freezes weights") {
  const auto ds = synthetic_corpus(4, 8, 9);
  const auto arch = tiny8_arch();
  const auto n1 = train_decoder(ds, arch, 20, 1e-3, 11);
  const auto n2 = train_decoder(ds, arch, 20, 1e-3, 11);
  CHECK(n1.params == n2.params);

  const auto frozen = train_decoder(ds, arch, 20, 0.0, 11);
  auto reference = arch;
  Splitmix64 seeder(11);
  init_weights(reference, seeder.next(), 0.02);
  CHECK(frozen.params == reference.params);
}

TEST_CASE("decoder rejects empty datasets") {
  PatchDataset empty;
  empty.tau = 8;
  CHECK_THROWS_AS(train_decoder(empty, tiny8_arch(), 10, 1e-3, 1), EmptyDataset);
  CHECK_THROWS_AS(train_gan(empty, tiny8_arch(), 10, 1e-3, 1e-3, 1), EmptyDataset);
}

TEST_CASE("gan run keeps outputs in range with finite losses") {
  auto ds = synthetic_corpus(64, 8, 9);
  for (auto& p : ds.patches) {
    for (auto& v : p) v *= 0.6;
  }
  const auto arch = tiny8_arch();
  GanReport report;
  const auto gen = train_gan(ds, arch, 50, 2e-3, 2e-3, 77, &report);
  REQUIRE(report.d_loss.size() == 50);
  for (const double v : report.d_loss) CHECK(std::isfinite(v));
  for (const double v : report.g_loss) CHECK(std::isfinite(v));
  Splitmix64 rng(78);
  for (int s = 0; s < 8; ++s) {
    const auto z = testing::interior_latent(8, rng, 0.0, 1.0);
    for (const double v : generate(gen, z)) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("gan with zero iterations returns the initialized net") {
  const auto ds = synthetic_corpus(8, 8, 10);
  const auto arch = tiny8_arch();
  const auto gen = train_gan(ds, arch, 0, 1e-3, 1e-3, 13);
  auto reference = arch;
  Splitmix64 seeder(13);
  init_weights(reference, seeder.next(), 0.02);
  CHECK(gen.params == reference.params);
}

TEST_CASE("gan moment distance shrinks on a fixed tiny run") {
  auto ds = synthetic_corpus(64, 8, 9);
  for (auto& p : ds.patches) {
    for (auto& v : p) v *= 0.6;
  }
  const auto arch = tiny8_arch();
  auto init = arch;
  Splitmix64 seeder(77);
  init_weights(init, seeder.next(), 0.02);
  const auto gen = train_gan(ds, arch, 300, 2e-3, 2e-3, 77);
  CHECK(moment_distance(gen, ds) < moment_distance(init, ds));
}

TEST_CASE("dataset directory ingestion") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "gpp_test_ds";
  fs::create_directories(dir);
  write_pgm(testing::random_image(16, 16, 301), (dir / "a.pgm").string());
  write_gppi(testing::random_image(16, 16, 302), (dir / "b.gppi").string());
  const auto ds = load_dataset_dir(dir.string(), 8, 0, 1);
  CHECK(ds.patches.size() == 8);
  CHECK_THROWS_AS(load_dataset_dir((dir / "missing").string(), 8, 0, 1), std::exception);
  fs::remove_all(dir);
}
