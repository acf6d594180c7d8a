// gpp: patch-generator compressive recovery toolkit.
//
// Subcommands: measure, recover, train, psnr, sweep-calibration, check.
// Exit codes: 0 success, 2 usage, 3 I/O failure, 4 model mismatch.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gpp/errors.hpp"
#include "gpp/image.hpp"
#include "gpp/image_io.hpp"
#include "gpp/recovery.hpp"
#include "gpp/sensing.hpp"
#include "gpp/tensornet.hpp"
#include "gpp/trainer.hpp"
#include "gpp/verify.hpp"
#include "gpp/version.hpp"

namespace {

using json = nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_manifest(const std::string& out_path, json manifest) {
  manifest["tool"] = "gpp";
  manifest["version"] = gpp::kVersion;
  std::ofstream os(out_path + ".manifest.json", std::ios::binary);
  if (!os) throw gpp::IoError("cannot write manifest for " + out_path);
  os << manifest.dump(2) << "\n";
}

gpp::SensingModel parse_model(const std::string& name) {
  if (name == "linear") return gpp::SensingModel::Linear;
  if (name == "calibrated") return gpp::SensingModel::Calibrated;
  if (name == "phase") return gpp::SensingModel::PhaseMagnitude;
  if (name == "mask") return gpp::SensingModel::PixelMask;
  throw gpp::ConfigError("unknown sensing model: " + name);
}

gpp::RecoveryMode parse_mode(const std::string& name) {
  if (name == "gpp") return gpp::RecoveryMode::Gpp;
  if (name == "gpp-sc") return gpp::RecoveryMode::GppSc;
  if (name == "phase") return gpp::RecoveryMode::Phase;
  if (name == "mask") return gpp::RecoveryMode::Mask;
  throw gpp::ConfigError("unknown recovery mode: " + name);
}

// "start:end:rate[,start:end:rate...]"
std::vector<gpp::LrRange> parse_schedule(const std::string& text) {
  std::vector<gpp::LrRange> ranges;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    const std::string item = text.substr(pos, next - pos);
    gpp::LrRange r;
    int consumed = 0;
    if (std::sscanf(item.c_str(), "%d:%d:%lf%n", &r.begin, &r.end, &r.lr, &consumed) != 3 ||
        consumed != static_cast<int>(item.size())) {
      throw gpp::ConfigError("bad schedule entry: '" + item + "' (want start:end:rate)");
    }
    ranges.push_back(r);
    pos = next + 1;
  }
  if (ranges.empty()) throw gpp::ConfigError("empty learning-rate schedule");
  return ranges;
}

std::string schedule_string(const std::vector<gpp::LrRange>& ranges) {
  std::string out;
  for (const auto& r : ranges) {
    if (!out.empty()) out += ",";
    out += std::to_string(r.begin) + ":" + std::to_string(r.end) + ":" + format_double(r.lr);
  }
  return out;
}

gpp::RecoveryConfig build_config(gpp::RecoveryMode mode, int iters, const std::string& schedule,
                                 std::uint64_t seed, int restarts, int trace_every,
                                 bool early_stop, unsigned threads) {
  gpp::RecoveryConfig cfg = gpp::default_config(mode);
  if (!schedule.empty()) {
    cfg.lr_schedule = parse_schedule(schedule);
    int max_end = 0;
    for (const auto& r : cfg.lr_schedule) max_end = std::max(max_end, r.end);
    cfg.iters = iters > 0 ? iters : max_end;
  } else if (iters > 0) {
    cfg.iters = iters;
    if (mode == gpp::RecoveryMode::GppSc && iters > 200) {
      cfg.lr_schedule = {{0, 200, 5e-2}, {200, iters, 5e-3}};
    } else if (mode == gpp::RecoveryMode::GppSc) {
      cfg.lr_schedule = {{0, iters, 5e-2}};
    } else {
      cfg.lr_schedule = {{0, iters, 5e-3}};
    }
  }
  cfg.seed = seed;
  cfg.restarts = restarts;
  if (trace_every > 0) cfg.trace_every = trace_every;
  cfg.early_stop = early_stop;
  cfg.threads = threads;
  gpp::validate_schedule(cfg);
  return cfg;
}

double sign_ambiguous_psnr(const gpp::Image& rec, const gpp::Image& ref, double peak) {
  gpp::Image flipped = rec;
  for (auto& v : flipped.data) v = 1.0 - v;
  return std::max(gpp::psnr(rec, ref, peak), gpp::psnr(flipped, ref, peak));
}

struct MeasureArgs {
  std::string image, model = "linear", out;
  int tau = 32;
  double mr = 0.10;
  int m = 0;
  std::uint64_t seed = 0;
  double a = 1.0, b = 0.0;
  double keep_fraction = 0.1;
  std::string pad = "none";
};

int run_measure(const MeasureArgs& args) {
  const gpp::Image img = gpp::read_image(args.image);
  gpp::MeasureParams params;
  params.model = parse_model(args.model);
  params.m = args.m;
  params.mr = args.mr;
  params.keep_fraction = args.keep_fraction;
  params.cal = {args.a, args.b};
  params.seed = args.seed;
  params.pad = args.pad == "replicate" ? gpp::PadMode::Replicate : gpp::PadMode::None;
  const auto bundle = gpp::measure_image(img, args.tau, params);
  gpp::write_gppm(bundle, args.out);

  json manifest;
  manifest["command"] = "measure";
  manifest["parameters"] = {{"image", args.image},
                            {"tau", args.tau},
                            {"model", args.model},
                            {"m", bundle.m},
                            {"mr", args.mr},
                            {"seed", args.seed},
                            {"a", args.a},
                            {"b", args.b},
                            {"keep_fraction", args.keep_fraction},
                            {"pad", args.pad}};
  manifest["outputs"] = {{"bundle", args.out}};
  write_manifest(args.out, std::move(manifest));
  std::printf("wrote %s (m=%d n=%d patches=%d)\n", args.out.c_str(), bundle.m, bundle.n,
              bundle.patch_count());
  return 0;
}

struct RecoverArgs {
  std::string meas, weights, mode = "gpp", out, trace, schedule, crop;
  int iters = 0;
  std::uint64_t seed = 0;
  int restarts = 1;
  int trace_every = 0;
  bool early_stop = false;
  unsigned threads = 0;
};

int run_recover(const RecoverArgs& args) {
  const auto bundle = gpp::read_gppm(args.meas);
  const auto net = gpp::read_gppw(args.weights);
  const auto mode = parse_mode(args.mode);
  const auto cfg = build_config(mode, args.iters, args.schedule, args.seed, args.restarts,
                                args.trace_every, args.early_stop, args.threads);
  auto result = gpp::recover(bundle, net, cfg);

  if (!args.crop.empty()) {
    int ch = 0, cw = 0;
    if (std::sscanf(args.crop.c_str(), "%dx%d", &ch, &cw) != 2 || ch < 1 || cw < 1 ||
        ch > result.image.height || cw > result.image.width) {
      throw gpp::ConfigError("bad --crop (want HxW within the recovered size)");
    }
    gpp::Image cropped(ch, cw);
    for (int r = 0; r < ch; ++r) {
      for (int c = 0; c < cw; ++c) cropped.at(r, c) = result.image.at(r, c);
    }
    result.image = std::move(cropped);
  }

  gpp::write_image(result.image, args.out);
  if (!args.trace.empty()) gpp::write_trace_csv(result.trace, args.trace);

  json manifest;
  manifest["command"] = "recover";
  manifest["parameters"] = {{"meas", args.meas},
                            {"weights", args.weights},
                            {"mode", args.mode},
                            {"iters", cfg.iters},
                            {"lr_schedule", schedule_string(cfg.lr_schedule)},
                            {"seed", cfg.seed},
                            {"restarts", cfg.restarts},
                            {"trace_every", cfg.trace_every},
                            {"early_stop", cfg.early_stop},
                            {"crop", args.crop}};
  manifest["outputs"] = {{"image", args.out}, {"trace", args.trace}};
  manifest["result"] = {{"final_loss", result.final_loss},
                        {"a", result.calibration.a},
                        {"b", result.calibration.b}};
  write_manifest(args.out, std::move(manifest));
  std::printf("final_loss=%s a=%s b=%s\n", format_double(result.final_loss).c_str(),
              format_double(result.calibration.a).c_str(),
              format_double(result.calibration.b).c_str());
  return 0;
}

struct TrainArgs {
  std::string patches_dir, mode = "decoder", out;
  int tau = 16;
  int latent_dim = 64;
  int epochs = 2000;
  int iterations = 1000;
  double lr = 7e-4;
  double lr_d = 0.0;  // defaults to lr
  std::uint64_t seed = 0;
  std::size_t max_patches = 0;
};

int run_train(const TrainArgs& args) {
  const auto ds = gpp::load_dataset_dir(args.patches_dir, args.tau, args.max_patches, args.seed);
  auto arch = gpp::make_generator_arch(args.latent_dim, args.tau);

  json manifest;
  manifest["command"] = "train";
  manifest["parameters"] = {{"patches_dir", args.patches_dir},
                            {"tau", args.tau},
                            {"latent_dim", args.latent_dim},
                            {"mode", args.mode},
                            {"lr", args.lr},
                            {"seed", args.seed},
                            {"max_patches", args.max_patches},
                            {"patches", ds.patches.size()}};

  gpp::GeneratorNet net;
  if (args.mode == "decoder") {
    std::vector<double> losses;
    net = gpp::train_decoder(ds, arch, args.epochs, args.lr, args.seed, &losses);
    manifest["parameters"]["epochs"] = args.epochs;
    manifest["result"] = {{"final_mse", losses.empty() ? 0.0 : losses.back()}};
    std::printf("final_mse=%s\n", format_double(losses.empty() ? 0.0 : losses.back()).c_str());
  } else if (args.mode == "gan") {
    const double lr_d = args.lr_d > 0.0 ? args.lr_d : args.lr;
    gpp::GanReport report;
    net = gpp::train_gan(ds, arch, args.iterations, args.lr, lr_d, args.seed, &report);
    manifest["parameters"]["iterations"] = args.iterations;
    manifest["parameters"]["lr_d"] = lr_d;
    const double last_d = report.d_loss.empty() ? 0.0 : report.d_loss.back();
    const double last_g = report.g_loss.empty() ? 0.0 : report.g_loss.back();
    manifest["result"] = {{"d_loss", last_d}, {"g_loss", last_g}};
    std::printf("d_loss=%s g_loss=%s\n", format_double(last_d).c_str(),
                format_double(last_g).c_str());
  } else {
    throw gpp::ConfigError("unknown train mode: " + args.mode);
  }

  gpp::write_gppw(net, args.out);
  manifest["outputs"] = {{"weights", args.out}};
  write_manifest(args.out, std::move(manifest));
  return 0;
}

struct PsnrArgs {
  std::string reference, candidate;
  double peak = 1.0;
  bool sign_ambiguous = false;
};

int run_psnr(const PsnrArgs& args) {
  const auto ref = gpp::read_image(args.reference);
  const auto rec = gpp::read_image(args.candidate);
  const double value = args.sign_ambiguous ? sign_ambiguous_psnr(rec, ref, args.peak)
                                           : gpp::psnr(rec, ref, args.peak);
  if (std::isinf(value)) {
    std::printf("inf\n");
  } else {
    std::printf("%.6f\n", value);
  }
  return 0;
}

struct SweepArgs {
  std::string image, weights, points, out;
  int tau = 16;
  double mr = 0.5;
  int m = 0;
  std::uint64_t seed = 0;
  int gpp_iters = 1500;
  int sc_iters = 2000;
  int restarts = 1;
  unsigned threads = 0;
};

std::vector<gpp::CalibrationParams> parse_points(const std::string& text) {
  std::vector<gpp::CalibrationParams> points;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    const std::string item = text.substr(pos, next - pos);
    gpp::CalibrationParams p;
    int consumed = 0;
    if (std::sscanf(item.c_str(), "%lf:%lf%n", &p.a, &p.b, &consumed) != 2 ||
        consumed != static_cast<int>(item.size())) {
      throw gpp::ConfigError("bad sweep point: '" + item + "' (want a:b)");
    }
    points.push_back(p);
    pos = next + 1;
  }
  return points;
}

int run_sweep(const SweepArgs& args) {
  const auto img = gpp::read_image(args.image);
  const auto net = gpp::read_gppw(args.weights);
  const auto points = parse_points(args.points);

  std::ofstream os(args.out, std::ios::binary);
  if (!os) throw gpp::IoError("cannot open " + args.out + " for writing");
  os << "a,b,psnr_gpp,psnr_gpp_sc,a_hat,b_hat\n";

  for (const auto& pt : points) {
    gpp::MeasureParams mp;
    mp.model = gpp::SensingModel::Calibrated;
    mp.cal = pt;
    mp.m = args.m;
    mp.mr = args.mr;
    mp.seed = args.seed;
    auto bundle = gpp::measure_image(img, args.tau, mp);

    auto as_linear = bundle;
    as_linear.model = gpp::SensingModel::Linear;
    as_linear.true_calibration.reset();

    const auto gpp_cfg = build_config(gpp::RecoveryMode::Gpp, args.gpp_iters, "", args.seed,
                                      args.restarts, 0, false, args.threads);
    const auto sc_cfg = build_config(gpp::RecoveryMode::GppSc, args.sc_iters, "", args.seed,
                                     args.restarts, 0, false, args.threads);
    const auto rg = gpp::recover_gpp(as_linear, net, gpp_cfg);
    const auto rs = gpp::recover_gpp_sc(bundle, net, sc_cfg);

    os << format_double(pt.a) << "," << format_double(pt.b) << ","
       << format_double(gpp::psnr(rg.image, img)) << "," << format_double(gpp::psnr(rs.image, img))
       << "," << format_double(rs.calibration.a) << "," << format_double(rs.calibration.b) << "\n";
  }
  if (!os) throw gpp::IoError("short write to " + args.out);
  os.close();

  json manifest;
  manifest["command"] = "sweep-calibration";
  manifest["parameters"] = {{"image", args.image},
                            {"weights", args.weights},
                            {"tau", args.tau},
                            {"mr", args.mr},
                            {"m", args.m},
                            {"seed", args.seed},
                            {"points", args.points},
                            {"gpp_iters", args.gpp_iters},
                            {"sc_iters", args.sc_iters},
                            {"restarts", args.restarts}};
  manifest["outputs"] = {{"csv", args.out}};
  write_manifest(args.out, std::move(manifest));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"patch-generator compressive recovery toolkit"};
  app.set_version_flag("--version", gpp::kVersion);
  app.require_subcommand(1);

  MeasureArgs measure;
  auto* cmd_measure = app.add_subcommand("measure", "simulate compressive measurements");
  cmd_measure->add_option("--image", measure.image, "input image (.pgm/.gppi)")->required();
  cmd_measure->add_option("--tau", measure.tau, "patch side length");
  cmd_measure->add_option("--mr", measure.mr, "measurement rate m/n");
  cmd_measure->add_option("--m", measure.m, "explicit measurement count (overrides --mr)");
  cmd_measure->add_option("--seed", measure.seed, "operator seed");
  cmd_measure->add_option("--model", measure.model, "linear|calibrated|phase|mask");
  cmd_measure->add_option("--a", measure.a, "gain for --model calibrated");
  cmd_measure->add_option("--b", measure.b, "shift for --model calibrated");
  cmd_measure->add_option("--keep-fraction", measure.keep_fraction, "kept pixels for --model mask");
  cmd_measure->add_option("--pad", measure.pad, "none|replicate");
  cmd_measure->add_option("--out", measure.out, "output GPPM path")->required();

  RecoverArgs recover;
  auto* cmd_recover = app.add_subcommand("recover", "reconstruct an image from measurements");
  cmd_recover->add_option("--meas", recover.meas, "GPPM bundle")->required();
  cmd_recover->add_option("--weights", recover.weights, "GPPW generator weights")->required();
  cmd_recover->add_option("--mode", recover.mode, "gpp|gpp-sc|phase|mask");
  cmd_recover->add_option("--iters", recover.iters, "iteration count");
  cmd_recover->add_option("--lr-schedule", recover.schedule, "start:end:rate[,...]");
  cmd_recover->add_option("--seed", recover.seed, "latent-init seed");
  cmd_recover->add_option("--restarts", recover.restarts, "latent restarts, keep best");
  cmd_recover->add_option("--trace-every", recover.trace_every, "steps between trace rows");
  cmd_recover->add_flag("--early-stop", recover.early_stop, "stop on loss stall");
  cmd_recover->add_option("--threads", recover.threads, "worker threads (0 = auto)");
  cmd_recover->add_option("--crop", recover.crop, "crop output to HxW (undo padding)");
  cmd_recover->add_option("--out", recover.out, "output image path")->required();
  cmd_recover->add_option("--trace", recover.trace, "trace CSV path");

  TrainArgs train;
  auto* cmd_train = app.add_subcommand("train", "train a patch generator");
  cmd_train->add_option("--patches-dir", train.patches_dir, "directory of .pgm/.gppi images")
      ->required();
  cmd_train->add_option("--tau", train.tau, "patch side length (16 or 32)");
  cmd_train->add_option("--latent-dim", train.latent_dim, "latent dimension");
  cmd_train->add_option("--mode", train.mode, "decoder|gan");
  cmd_train->add_option("--epochs", train.epochs, "decoder epochs");
  cmd_train->add_option("--iterations", train.iterations, "gan iterations");
  cmd_train->add_option("--lr", train.lr, "learning rate (generator side for gan)");
  cmd_train->add_option("--lr-d", train.lr_d, "gan discriminator learning rate");
  cmd_train->add_option("--seed", train.seed, "training seed");
  cmd_train->add_option("--max-patches", train.max_patches, "dataset size cap (0 = all)");
  cmd_train->add_option("--out", train.out, "output GPPW path")->required();

  PsnrArgs psnr_args;
  auto* cmd_psnr = app.add_subcommand("psnr", "peak signal-to-noise ratio of two images");
  cmd_psnr->add_option("reference", psnr_args.reference, "reference image")->required();
  cmd_psnr->add_option("candidate", psnr_args.candidate, "image under test")->required();
  cmd_psnr->add_option("--peak", psnr_args.peak, "peak intensity");
  cmd_psnr->add_flag("--sign-ambiguous", psnr_args.sign_ambiguous,
                     "best of x and 1-x (phase results)");

  SweepArgs sweep;
  auto* cmd_sweep = app.add_subcommand("sweep-calibration",
                                       "paired gpp / gpp-sc runs over gain-shift corruptions");
  cmd_sweep->add_option("--image", sweep.image, "ground-truth image")->required();
  cmd_sweep->add_option("--weights", sweep.weights, "GPPW generator weights")->required();
  cmd_sweep->add_option("--tau", sweep.tau, "patch side length");
  cmd_sweep->add_option("--mr", sweep.mr, "measurement rate");
  cmd_sweep->add_option("--m", sweep.m, "explicit measurement count");
  cmd_sweep->add_option("--seed", sweep.seed, "operator and latent seed");
  cmd_sweep->add_option("--points", sweep.points, "a:b[,a:b...] corruption list");
  cmd_sweep->add_option("--gpp-iters", sweep.gpp_iters, "plain descent iterations");
  cmd_sweep->add_option("--sc-iters", sweep.sc_iters, "self-calibration iterations");
  cmd_sweep->add_option("--restarts", sweep.restarts, "latent restarts");
  cmd_sweep->add_option("--threads", sweep.threads, "worker threads (0 = auto)");
  cmd_sweep->add_option("--out", sweep.out, "output CSV path")->required();

  auto* cmd_check = app.add_subcommand("check", "run the independent oracle suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(cmd_measure)) return run_measure(measure);
    if (app.got_subcommand(cmd_recover)) return run_recover(recover);
    if (app.got_subcommand(cmd_train)) return run_train(train);
    if (app.got_subcommand(cmd_psnr)) return run_psnr(psnr_args);
    if (app.got_subcommand(cmd_sweep)) return run_sweep(sweep);
    if (app.got_subcommand(cmd_check)) return gpp::verify::run_check_suite(std::cout) ? 0 : 1;
  } catch (const gpp::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const gpp::ModelMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
