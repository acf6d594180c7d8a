// Exercises the installed command surface end to end through the binary.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "gpp/image_io.hpp"
#include "gpp/sensing.hpp"
#include "test_support.hpp"

#ifndef GPP_CLI_BIN
#error "GPP_CLI_BIN must point at the gpp executable"
#endif

namespace fs = std::filesystem;
using namespace gpp;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

RunResult run_cli(const fs::path& dir, const std::string& args) {
  const fs::path out = dir / "stdout.txt";
  const std::string cmd =
      std::string(GPP_CLI_BIN) + " " + args + " > " + out.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(rc);
  r.out = slurp(out);
  return r;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("cli: measure writes the protocol geometry into the header") {
  TempDir tmp("gpp_cli_measure");
  const auto img = testing::random_image(256, 256, 1);
  write_pgm(img, (tmp.path / "img.pgm").string());

  const auto r = run_cli(tmp.path, "measure --image " + (tmp.path / "img.pgm").string() +
                                       " --tau 32 --mr 0.10 --seed 7 --out " +
                                       (tmp.path / "m.gppm").string());
  REQUIRE(r.exit_code == 0);
  const auto bundle = read_gppm((tmp.path / "m.gppm").string());
  CHECK(bundle.m == 102);
  CHECK(bundle.n == 1024);
  CHECK(fs::exists(tmp.path / "m.gppm.manifest.json"));
}

TEST_CASE("cli: calibrated (1,0) payload matches linear byte for byte") {
  TempDir tmp("gpp_cli_calpayload");
  const auto img = testing::random_image(16, 16, 2);
  write_pgm(img, (tmp.path / "img.pgm").string());
  const std::string base = " --image " + (tmp.path / "img.pgm").string() +
                           " --tau 8 --mr 0.5 --seed 11 --out ";
  REQUIRE(run_cli(tmp.path, "measure" + base + (tmp.path / "lin.gppm").string() +
                                " --model linear")
              .exit_code == 0);
  REQUIRE(run_cli(tmp.path, "measure" + base + (tmp.path / "cal.gppm").string() +
                                " --model calibrated --a 1 --b 0")
              .exit_code == 0);
  const auto lin = read_gppm((tmp.path / "lin.gppm").string());
  const auto cal = read_gppm((tmp.path / "cal.gppm").string());
  CHECK(lin.per_patch_y == cal.per_patch_y);

  // the raw measurement payload is the file tail in both layouts
  const auto lin_bytes = slurp(tmp.path / "lin.gppm");
  const auto cal_bytes = slurp(tmp.path / "cal.gppm");
  const std::size_t payload = static_cast<std::size_t>(lin.m) * lin.patch_count() * 4;
  CHECK(lin_bytes.substr(lin_bytes.size() - payload) ==
        cal_bytes.substr(cal_bytes.size() - payload));
}

TEST_CASE("cli: mask measurement counts follow floor(keep * n)") {
  TempDir tmp("gpp_cli_mask");
  const auto img = testing::random_image(32, 32, 3);
  write_pgm(img, (tmp.path / "img.pgm").string());
  const auto r = run_cli(tmp.path, "measure --image " + (tmp.path / "img.pgm").string() +
                                       " --tau 32 --model mask --keep-fraction 0.005 --seed 5 " +
                                       "--out " + (tmp.path / "m.gppm").string());
  REQUIRE(r.exit_code == 0);
  const auto bundle = read_gppm((tmp.path / "m.gppm").string());
  CHECK(bundle.m == 5);  // floor(0.005 * 1024)
  CHECK(bundle.mask.size() == 5);
}

TEST_CASE("cli: psnr output format") {
  TempDir tmp("gpp_cli_psnr");
  const auto img = testing::random_image(8, 8, 4);
  write_gppi(img, (tmp.path / "a.gppi").string());
  write_gppi(img, (tmp.path / "b.gppi").string());
  auto r = run_cli(tmp.path,
                   (tmp.path / "a.gppi").string() + " " + (tmp.path / "b.gppi").string());
  // missing subcommand is a usage error
  CHECK(r.exit_code == 2);
  r = run_cli(tmp.path, "psnr " + (tmp.path / "a.gppi").string() + " " +
                            (tmp.path / "b.gppi").string());
  CHECK(r.exit_code == 0);
  CHECK(r.out == "inf\n");

  // zeros vs constant 0.1: MSE 0.01, 20 dB (both values exact in f32)
  Image zeros(8, 8), tenth(8, 8);
  for (auto& v : tenth.data) v = 0.1;
  write_gppi(zeros, (tmp.path / "z.gppi").string());
  write_gppi(tenth, (tmp.path / "c.gppi").string());
  r = run_cli(tmp.path, "psnr " + (tmp.path / "z.gppi").string() + " " +
                            (tmp.path / "c.gppi").string());
  CHECK(r.exit_code == 0);
  CHECK(r.out == "20.000000\n");

  // sign-ambiguous evaluation prefers the flipped candidate when it is closer;
  // dyadic intensities keep both orientations exact in f32
  Image dyadic(8, 8), flipped(8, 8);
  for (std::size_t i = 0; i < dyadic.data.size(); ++i) {
    dyadic.data[i] = static_cast<double>(i % 257) / 256.0;
    flipped.data[i] = 1.0 - dyadic.data[i];
  }
  write_gppi(dyadic, (tmp.path / "s.gppi").string());
  write_gppi(flipped, (tmp.path / "f.gppi").string());
  r = run_cli(tmp.path, "psnr " + (tmp.path / "s.gppi").string() + " " +
                            (tmp.path / "f.gppi").string() + " --sign-ambiguous");
  CHECK(r.exit_code == 0);
  CHECK(r.out == "inf\n");
}

TEST_CASE("cli: empty sweep list produces a header-only csv") {
  TempDir tmp("gpp_cli_sweep0");
  const auto img = testing::random_image(16, 16, 5);
  write_pgm(img, (tmp.path / "img.pgm").string());
  const auto net = testing::tiny_net8(6);
  write_gppw(net, (tmp.path / "net.gppw").string());
  const auto r = run_cli(tmp.path, "sweep-calibration --image " +
                                       (tmp.path / "img.pgm").string() + " --weights " +
                                       (tmp.path / "net.gppw").string() + " --tau 8 --out " +
                                       (tmp.path / "sweep.csv").string());
  REQUIRE(r.exit_code == 0);
  CHECK(slurp(tmp.path / "sweep.csv") == "a,b,psnr_gpp,psnr_gpp_sc,a_hat,b_hat\n");
}

TEST_CASE("cli: exit code contract") {
  TempDir tmp("gpp_cli_exits");
  const auto img = testing::random_image(16, 16, 7);
  write_pgm(img, (tmp.path / "img.pgm").string());
  const auto net = testing::tiny_net8(8);
  write_gppw(net, (tmp.path / "net.gppw").string());
  REQUIRE(run_cli(tmp.path, "measure --image " + (tmp.path / "img.pgm").string() +
                                " --tau 8 --mr 0.5 --seed 1 --model phase --out " +
                                (tmp.path / "m.gppm").string())
              .exit_code == 0);

  // 4: measurement/engine model mismatch
  CHECK(run_cli(tmp.path, "recover --meas " + (tmp.path / "m.gppm").string() + " --weights " +
                              (tmp.path / "net.gppw").string() + " --mode gpp --iters 5 --out " +
                              (tmp.path / "r.pgm").string())
            .exit_code == 4);
  // 3: missing input file
  CHECK(run_cli(tmp.path, "psnr missing.pgm also-missing.pgm").exit_code == 3);
  // 2: malformed flags
  CHECK(run_cli(tmp.path, "recover --meas " + (tmp.path / "m.gppm").string() + " --weights " +
                              (tmp.path / "net.gppw").string() +
                              " --mode phase --lr-schedule bogus --out " +
                              (tmp.path / "r.pgm").string())
            .exit_code == 2);
  CHECK(run_cli(tmp.path, "measure --nonsense").exit_code == 2);
}

TEST_CASE("cli: default schedules follow the mode") {
  TempDir tmp("gpp_cli_defaults");
  const auto net = testing::tiny_net8(9);
  const auto img = testing::planted_image(net, 1, 1, 99);
  write_gppi(img, (tmp.path / "img.gppi").string());
  write_gppw(net, (tmp.path / "net.gppw").string());
  REQUIRE(run_cli(tmp.path, "measure --image " + (tmp.path / "img.gppi").string() +
                                " --tau 8 --mr 0.5 --seed 1 --out " +
                                (tmp.path / "m.gppm").string())
              .exit_code == 0);

  // no --iters / --lr-schedule: gpp runs 1500 steps at 5e-3
  auto r = run_cli(tmp.path, "recover --meas " + (tmp.path / "m.gppm").string() +
                                 " --weights " + (tmp.path / "net.gppw").string() +
                                 " --mode gpp --seed 2 --out " + (tmp.path / "g.gppi").string());
  REQUIRE(r.exit_code == 0);
  auto manifest = slurp(tmp.path / "g.gppi.manifest.json");
  CHECK(manifest.find("\"iters\": 1500") != std::string::npos);
  CHECK(manifest.find("0:1500:0.005") != std::string::npos);

  // gpp-sc defaults to the two-phase 2000-step schedule
  r = run_cli(tmp.path, "recover --meas " + (tmp.path / "m.gppm").string() + " --weights " +
                            (tmp.path / "net.gppw").string() + " --mode gpp-sc --seed 2 --out " +
                            (tmp.path / "s.gppi").string());
  REQUIRE(r.exit_code == 0);
  manifest = slurp(tmp.path / "s.gppi.manifest.json");
  CHECK(manifest.find("\"iters\": 2000") != std::string::npos);
  CHECK(manifest.find("0:200:0.05") != std::string::npos);
  CHECK(manifest.find("200:2000:0.005") != std::string::npos);
}

TEST_CASE("cli: recover runs phase bundles end to end") {
  TempDir tmp("gpp_cli_phase");
  const auto net = testing::tiny_net8(7);
  const auto img = testing::planted_image(net, 1, 1, 77);
  write_gppi(img, (tmp.path / "img.gppi").string());
  write_gppw(net, (tmp.path / "net.gppw").string());
  REQUIRE(run_cli(tmp.path, "measure --image " + (tmp.path / "img.gppi").string() +
                                " --tau 8 --mr 0.5 --seed 3 --model phase --out " +
                                (tmp.path / "m.gppm").string())
              .exit_code == 0);
  const auto r = run_cli(tmp.path, "recover --meas " + (tmp.path / "m.gppm").string() +
                                       " --weights " + (tmp.path / "net.gppw").string() +
                                       " --mode phase --iters 400 --lr-schedule " +
                                       "0:100:5e-2,100:400:5e-3 --seed 2 --out " +
                                       (tmp.path / "rec.gppi").string());
  REQUIRE(r.exit_code == 0);
  const auto p =
      run_cli(tmp.path, "psnr " + (tmp.path / "img.gppi").string() + " " +
                            (tmp.path / "rec.gppi").string() + " --sign-ambiguous");
  CHECK(p.exit_code == 0);
  CHECK(std::stod(p.out) > 35.0);
}
