#include "gpp/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "gpp/errors.hpp"
#include "gpp/parallel.hpp"
#include "gpp/prng.hpp"

namespace gpp {

RecoveryConfig default_config(RecoveryMode mode) {
  RecoveryConfig cfg;
  cfg.mode = mode;
  if (mode == RecoveryMode::GppSc) {
    cfg.iters = 2000;
    cfg.lr_schedule = {{0, 200, 5e-2}, {200, 2000, 5e-3}};
  } else {
    cfg.iters = 1500;
    cfg.lr_schedule = {{0, 1500, 5e-3}};
  }
  return cfg;
}

void validate_schedule(const RecoveryConfig& cfg) {
  if (cfg.iters < 1) throw ConfigError("recovery: iters must be >= 1");
  if (cfg.lr_schedule.empty()) throw ConfigError("recovery: empty learning-rate schedule");
  auto ranges = cfg.lr_schedule;
  std::sort(ranges.begin(), ranges.end(),
            [](const LrRange& a, const LrRange& b) { return a.begin < b.begin; });
  int expect = 0;
  for (const auto& r : ranges) {
    if (r.begin != expect || r.end <= r.begin || !std::isfinite(r.lr)) {
      throw ConfigError("recovery: schedule must cover [0, iters) without gaps or overlap");
    }
    expect = r.end;
  }
  if (expect < cfg.iters) {
    throw ConfigError("recovery: schedule does not cover all iterations");
  }
}

double lr_at(const RecoveryConfig& cfg, int step) {
  for (const auto& r : cfg.lr_schedule) {
    if (step >= r.begin && step < r.end) return r.lr;
  }
  throw ConfigError("recovery: step outside schedule");
}

namespace {

constexpr double kEarlyStopRel = 1e-8;
constexpr int kEarlyStopWindow = 50;

std::vector<int> traced_steps(const RecoveryConfig& cfg) {
  const int every = cfg.trace_every > 0 ? cfg.trace_every : cfg.iters;
  std::vector<int> steps;
  for (int t = 0; t < cfg.iters; ++t) {
    if (t % every == 0 || t == cfg.iters - 1) steps.push_back(t);
  }
  return steps;
}

std::vector<std::uint64_t> patch_seeds(const RecoveryConfig& cfg, int count) {
  Splitmix64 master(cfg.seed);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(count));
  for (auto& s : seeds) s = master.next();
  return seeds;
}

// Loss-change test over a sliding window; Adam is not monotone, so this
// compares against the value kEarlyStopWindow steps back rather than the
// previous step.
class StallDetector {
 public:
  bool update(int step, double loss) {
    const bool ready = step >= kEarlyStopWindow;
    const double old =
        ready ? history_[(step - kEarlyStopWindow) % (kEarlyStopWindow + 1)] : 0.0;
    history_[step % (kEarlyStopWindow + 1)] = loss;
    if (!ready) return false;
    return std::abs(loss - old) < kEarlyStopRel * std::max(1.0, std::abs(old));
  }

 private:
  double history_[kEarlyStopWindow + 1] = {};
};

struct PatchOutcome {
  std::vector<double> z;
  std::vector<double> traced;  // aligned with traced_steps()
  double final_loss = std::numeric_limits<double>::infinity();
};

// One patch, full projected-Adam run with restarts. loss_grad evaluates the
// per-patch objective at `patch` and fills `upstream` with its gradient.
template <typename LossGrad>
PatchOutcome optimize_patch(const GeneratorNet& net, const RecoveryConfig& cfg, int tau,
                            std::uint64_t seed, const std::vector<int>& steps,
                            const LossGrad& loss_grad) {
  const int d = net.latent_dim;
  const bool resize = net.tau_out != tau;
  Splitmix64 stream(seed);
  PatchOutcome best;
  const int restarts = std::max(1, cfg.restarts);
  for (int restart = 0; restart < restarts; ++restart) {
    std::vector<double> z(static_cast<std::size_t>(d));
    for (auto& v : z) v = stream.next_unit();
    AdamState adam = make_adam(z.size());
    StallDetector stall;
    std::vector<double> traced(steps.size(), 0.0);
    std::size_t trace_pos = 0;
    double loss = 0.0;
    for (int t = 0; t < cfg.iters; ++t) {
      const auto fwd = forward_traced(net, z);
      std::vector<double> patch =
          resize ? resize_patch(fwd.output, net.tau_out, tau) : fwd.output;
      std::vector<double> upstream(patch.size(), 0.0);
      loss = loss_grad(patch, upstream);
      const std::vector<double> up_net =
          resize ? resize_patch_adjoint(upstream, net.tau_out, tau) : std::move(upstream);
      const auto grads = backward(net, fwd, up_net, true, false);
      adam_step(adam, z, grads.latent, lr_at(cfg, t));
      project_box(z);
      while (trace_pos < steps.size() && steps[trace_pos] == t) {
        traced[trace_pos++] = loss;
      }
      if (cfg.early_stop && stall.update(t, loss)) break;
    }
    // carry the last loss into any un-reached trace slots (early stop)
    for (; trace_pos < steps.size(); ++trace_pos) traced[trace_pos] = loss;
    if (loss < best.final_loss) {
      best.z = std::move(z);
      best.traced = std::move(traced);
      best.final_loss = loss;
    }
  }
  return best;
}

Image assemble_image(const MeasurementBundle& bundle, const GeneratorNet& net,
                     const LatentBatch& latents) {
  PatchSet ps;
  ps.tau = bundle.tau;
  ps.grid_rows = bundle.grid_rows;
  ps.grid_cols = bundle.grid_cols;
  ps.patches.resize(static_cast<std::size_t>(bundle.patch_count()));
  for (int i = 0; i < bundle.patch_count(); ++i) {
    auto patch = generate(net, latents.row(i));
    if (net.tau_out != bundle.tau) patch = resize_patch(patch, net.tau_out, bundle.tau);
    for (auto& v : patch) v = std::clamp(v, 0.0, 1.0);
    ps.patches[static_cast<std::size_t>(i)] = std::move(patch);
  }
  return inverse_patch_transform(ps, bundle.grid_rows * bundle.tau,
                                 bundle.grid_cols * bundle.tau);
}

void check_bundle(const MeasurementBundle& bundle, const GeneratorNet& net) {
  if (bundle.per_patch_y.size() != static_cast<std::size_t>(bundle.patch_count())) {
    throw DimensionMismatch("recovery: bundle patch count mismatch");
  }
  if (bundle.tau * bundle.tau != bundle.n) {
    throw DimensionMismatch("recovery: bundle n != tau^2");
  }
  if (net.latent_dim < 1) throw ShapeMismatch("recovery: net has no latent input");
}

// Shared skeleton of the three per-patch-independent engines.
template <typename MakeLossGrad>
RecoveryResult run_independent(const MeasurementBundle& bundle, const GeneratorNet& net,
                               const RecoveryConfig& cfg, const MakeLossGrad& make_loss_grad) {
  validate_schedule(cfg);
  check_bundle(bundle, net);
  const int np = bundle.patch_count();
  const auto steps = traced_steps(cfg);
  const auto seeds = patch_seeds(cfg, np);

  std::vector<PatchOutcome> outcomes(static_cast<std::size_t>(np));
  parallel_for(
      static_cast<std::size_t>(np),
      [&](std::size_t i) {
        const auto loss_grad = make_loss_grad(static_cast<int>(i));
        outcomes[i] = optimize_patch(net, cfg, bundle.tau, seeds[i], steps, loss_grad);
      },
      cfg.threads);

  RecoveryResult result;
  result.latents.count = np;
  result.latents.dim = net.latent_dim;
  result.latents.values.resize(static_cast<std::size_t>(np) * net.latent_dim);
  result.final_loss = 0.0;
  for (int i = 0; i < np; ++i) {
    std::copy(outcomes[i].z.begin(), outcomes[i].z.end(),
              result.latents.row(i).begin());
    result.final_loss += outcomes[i].final_loss;
  }
  result.trace.reserve(steps.size());
  for (std::size_t k = 0; k < steps.size(); ++k) {
    double total = 0.0;
    for (int i = 0; i < np; ++i) total += outcomes[static_cast<std::size_t>(i)].traced[k];
    result.trace.push_back({steps[k], total, 1.0, 0.0});
  }
  result.image = assemble_image(bundle, net, result.latents);
  return result;
}

}  // namespace

RecoveryResult recover_gpp(const MeasurementBundle& bundle, const GeneratorNet& net,
                           const RecoveryConfig& cfg) {
  if (bundle.model != SensingModel::Linear) {
    throw ModelMismatch("recover_gpp: bundle model must be Linear");
  }
  return run_independent(bundle, net, cfg, [&](int i) {
    const auto& y = bundle.per_patch_y[static_cast<std::size_t>(i)];
    return [&bundle, &y](const std::vector<double>& patch, std::vector<double>& upstream) {
      const auto v = forward_linear(bundle.op, patch);
      std::vector<double> r(v.size());
      double loss = 0.0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        r[j] = v[j] - y[j];
        loss += r[j] * r[j];
      }
      const auto g = adjoint_linear(bundle.op, r);
      for (std::size_t j = 0; j < g.size(); ++j) upstream[j] = 2.0 * g[j];
      return loss;
    };
  });
}

RecoveryResult recover_phase(const MeasurementBundle& bundle, const GeneratorNet& net,
                             const RecoveryConfig& cfg) {
  if (bundle.model != SensingModel::PhaseMagnitude) {
    throw ModelMismatch("recover_phase: bundle model must be PhaseMagnitude");
  }
  return run_independent(bundle, net, cfg, [&](int i) {
    const auto& y = bundle.per_patch_y[static_cast<std::size_t>(i)];
    return [&bundle, &y](const std::vector<double>& patch, std::vector<double>& upstream) {
      const auto v = forward_linear(bundle.op, patch);
      std::vector<double> r(v.size());
      double loss = 0.0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        const double sign = v[j] < 0.0 ? -1.0 : 1.0;  // sign(0) = +1
        r[j] = v[j] - y[j] * sign;
        loss += r[j] * r[j];
      }
      const auto g = adjoint_linear(bundle.op, r);
      for (std::size_t j = 0; j < g.size(); ++j) upstream[j] = 2.0 * g[j];
      return loss;
    };
  });
}

RecoveryResult recover_mask(const MeasurementBundle& bundle, const GeneratorNet& net,
                            const RecoveryConfig& cfg) {
  if (bundle.model != SensingModel::PixelMask) {
    throw ModelMismatch("recover_mask: bundle model must be PixelMask");
  }
  return run_independent(bundle, net, cfg, [&](int i) {
    const auto& y = bundle.per_patch_y[static_cast<std::size_t>(i)];
    return [&bundle, &y](const std::vector<double>& patch, std::vector<double>& upstream) {
      double loss = 0.0;
      for (std::size_t j = 0; j < bundle.mask.size(); ++j) {
        const double r = patch[bundle.mask[j]] - y[j];
        loss += r * r;
        upstream[bundle.mask[j]] = 2.0 * r;
      }
      return loss;
    };
  });
}

RecoveryResult recover_gpp_sc(const MeasurementBundle& bundle, const GeneratorNet& net,
                              const RecoveryConfig& cfg) {
  if (bundle.model != SensingModel::Linear && bundle.model != SensingModel::Calibrated) {
    throw ModelMismatch("recover_gpp_sc: bundle model must be Linear or Calibrated");
  }
  validate_schedule(cfg);
  check_bundle(bundle, net);

  const int np = bundle.patch_count();
  const int d = net.latent_dim;
  const bool resize = net.tau_out != bundle.tau;
  const auto steps = traced_steps(cfg);
  const auto seeds = patch_seeds(cfg, np);

  struct ScRun {
    std::vector<double> latents;  // np x d
    std::vector<TraceRow> trace;
    double final_loss = std::numeric_limits<double>::infinity();
    CalibrationParams calibration{};
  };

  std::vector<Splitmix64> streams;
  streams.reserve(static_cast<std::size_t>(np));
  for (int i = 0; i < np; ++i) streams.emplace_back(seeds[static_cast<std::size_t>(i)]);

  ScRun best;
  const int restarts = std::max(1, cfg.restarts);
  for (int restart = 0; restart < restarts; ++restart) {
    std::vector<double> latents(static_cast<std::size_t>(np) * d);
    for (int i = 0; i < np; ++i) {
      for (int k = 0; k < d; ++k) {
        latents[static_cast<std::size_t>(i) * d + k] = streams[static_cast<std::size_t>(i)].next_unit();
      }
    }
    std::vector<AdamState> adams(static_cast<std::size_t>(np));
    for (auto& a : adams) a = make_adam(static_cast<std::size_t>(d));

    // Per-iteration slots; each patch touches only its own index.
    std::vector<ForwardTrace> fwds(static_cast<std::size_t>(np));
    std::vector<std::vector<double>> patches(static_cast<std::size_t>(np));
    std::vector<std::vector<double>> products(static_cast<std::size_t>(np));
    std::vector<double> patch_sums(static_cast<std::size_t>(np), 0.0);
    std::vector<CalibrationParams> per_patch(static_cast<std::size_t>(np));
    std::vector<double> losses(static_cast<std::size_t>(np), 0.0);

    std::vector<TraceRow> trace;
    trace.reserve(steps.size());
    std::size_t trace_pos = 0;
    StallDetector stall;
    CalibrationParams avg{1.0, 0.0};
    double total_loss = 0.0;

    for (int t = 0; t < cfg.iters; ++t) {
      const double lr = lr_at(cfg, t);

      parallel_for(
          static_cast<std::size_t>(np),
          [&](std::size_t i) {
            std::span<const double> z(latents.data() + i * d, static_cast<std::size_t>(d));
            fwds[i] = forward_traced(net, z);
            patches[i] = resize ? resize_patch(fwds[i].output, net.tau_out, bundle.tau)
                                : fwds[i].output;
            products[i] = forward_linear(bundle.op, patches[i]);
            double s = 0.0;
            for (const double v : patches[i]) s += v;
            patch_sums[i] = s;
            const auto stats = calib_stats_from_product(
                products[i], bundle.per_patch_y[i], patches[i]);
            per_patch[i] = solve_calibration(stats).params;
          },
          cfg.threads);

      avg = average_params(per_patch);

      parallel_for(
          static_cast<std::size_t>(np),
          [&](std::size_t i) {
            const auto& y = bundle.per_patch_y[i];
            const std::size_t m = y.size();
            std::vector<double> r(m);
            double loss = 0.0;
            double r_sum = 0.0;
            const double shift = avg.b * patch_sums[i];
            for (std::size_t j = 0; j < m; ++j) {
              r[j] = avg.a * products[i][j] + shift - y[j];
              loss += r[j] * r[j];
              r_sum += r[j];
            }
            losses[i] = loss;
            auto g = adjoint_linear(bundle.op, r);
            std::vector<double> upstream(patches[i].size());
            for (std::size_t j = 0; j < upstream.size(); ++j) {
              upstream[j] = 2.0 * (avg.a * g[j] + avg.b * r_sum);
            }
            const std::vector<double> up_net =
                resize ? resize_patch_adjoint(upstream, net.tau_out, bundle.tau)
                       : std::move(upstream);
            const auto grads = backward(net, fwds[i], up_net, true, false);
            std::span<double> z(latents.data() + i * d, static_cast<std::size_t>(d));
            adam_step(adams[i], z, grads.latent, lr);
            project_box(z);
          },
          cfg.threads);

      total_loss = 0.0;
      for (int i = 0; i < np; ++i) total_loss += losses[static_cast<std::size_t>(i)];
      while (trace_pos < steps.size() && steps[trace_pos] == t) {
        trace.push_back({t, total_loss, avg.a, avg.b});
        ++trace_pos;
      }
      if (cfg.early_stop && stall.update(t, total_loss)) break;
    }
    for (; trace_pos < steps.size(); ++trace_pos) {
      trace.push_back({steps[trace_pos], total_loss, avg.a, avg.b});
    }
    if (total_loss < best.final_loss) {
      best.latents = std::move(latents);
      best.trace = std::move(trace);
      best.final_loss = total_loss;
      best.calibration = avg;
    }
  }

  RecoveryResult result;
  result.latents.count = np;
  result.latents.dim = d;
  result.latents.values = std::move(best.latents);
  result.final_loss = best.final_loss;
  result.calibration = best.calibration;
  result.trace = std::move(best.trace);
  result.image = assemble_image(bundle, net, result.latents);
  return result;
}

RecoveryResult recover(const MeasurementBundle& bundle, const GeneratorNet& net,
                       const RecoveryConfig& cfg) {
  switch (cfg.mode) {
    case RecoveryMode::Gpp:
      return recover_gpp(bundle, net, cfg);
    case RecoveryMode::GppSc:
      return recover_gpp_sc(bundle, net, cfg);
    case RecoveryMode::Phase:
      return recover_phase(bundle, net, cfg);
    case RecoveryMode::Mask:
      return recover_mask(bundle, net, cfg);
  }
  throw ConfigError("recover: unknown mode");
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "step,loss,a,b\n";
  char line[128];
  for (const auto& row : trace) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g\n", row.step, row.loss, row.a, row.b);
    os << line;
  }
  if (!os) throw IoError("short write to " + path);
}

}  // namespace gpp
