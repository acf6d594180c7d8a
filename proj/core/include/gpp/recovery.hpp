#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpp/calibrate.hpp"
#include "gpp/image.hpp"
#include "gpp/sensing.hpp"
#include "gpp/tensornet.hpp"

namespace gpp {

enum class RecoveryMode { Gpp, GppSc, Phase, Mask };

struct LrRange {
  int begin = 0;
  int end = 0;  // exclusive
  double lr = 0.0;
};

struct RecoveryConfig {
  RecoveryMode mode = RecoveryMode::Gpp;
  int iters = 1500;
  std::vector<LrRange> lr_schedule;  // must cover [0, iters) without overlap
  std::uint64_t seed = 0;
  int trace_every = 50;
  int restarts = 1;       // keep the lowest-loss restart
  bool early_stop = false;  // stop when relative loss change < 1e-8 over 50 steps
  unsigned threads = 0;     // 0 = hardware concurrency; result is thread-count invariant
};

// Mode defaults: plain descent runs 1500 steps at 5e-3; the self-calibrating
// loop warms up at 5e-2 for 200 steps then drops to 5e-3 for 1800 more.
RecoveryConfig default_config(RecoveryMode mode);

double lr_at(const RecoveryConfig& cfg, int step);
void validate_schedule(const RecoveryConfig& cfg);

struct TraceRow {
  int step = 0;
  double loss = 0.0;
  double a = 1.0;
  double b = 0.0;
};

struct RecoveryResult {
  Image image;
  double final_loss = 0.0;
  CalibrationParams calibration{};  // stays (1,0) for modes without self-calibration
  std::vector<TraceRow> trace;
  LatentBatch latents;
};

// Per-patch projected Adam descent on |y_i - Phi G(z_i)|^2.
RecoveryResult recover_gpp(const MeasurementBundle& bundle, const GeneratorNet& net,
                           const RecoveryConfig& cfg);

// Alternating loop: generate patches, closed-form per-patch (a_i, b_i),
// average, one projected Adam step on the calibrated loss per latent.
RecoveryResult recover_gpp_sc(const MeasurementBundle& bundle, const GeneratorNet& net,
                              const RecoveryConfig& cfg);

// Alternating phase projected gradient descent: fix the sign pattern of
// Phi G(z), regress against magnitude times sign, repeat. sign(0) = +1.
RecoveryResult recover_phase(const MeasurementBundle& bundle, const GeneratorNet& net,
                             const RecoveryConfig& cfg);

// Descent on the observed pixels only; the rest comes from the generator.
RecoveryResult recover_mask(const MeasurementBundle& bundle, const GeneratorNet& net,
                            const RecoveryConfig& cfg);

// Dispatch on cfg.mode.
RecoveryResult recover(const MeasurementBundle& bundle, const GeneratorNet& net,
                       const RecoveryConfig& cfg);

// CSV `step,loss,a,b`, one row per trace record, LF endings.
void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path);

}  // namespace gpp
