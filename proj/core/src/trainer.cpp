#include "gpp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "gpp/errors.hpp"
#include "gpp/image_io.hpp"
#include "gpp/parallel.hpp"
#include "gpp/prng.hpp"

namespace gpp {

PatchDataset build_dataset(const std::vector<Image>& images, int tau, std::size_t max_patches,
                           std::uint64_t seed) {
  PatchDataset ds;
  ds.tau = tau;
  for (const auto& img : images) {
    auto ps = patch_transform(img, tau, PadMode::Replicate);
    for (auto& patch : ps.patches) {
      for (auto& v : patch) v = std::clamp(v, 0.0, 1.0);
      ds.patches.push_back(std::move(patch));
    }
  }
  if (max_patches > 0 && ds.patches.size() > max_patches) {
    Splitmix64 rng(seed);
    const auto pick = partial_shuffle_indices(rng, static_cast<std::uint32_t>(ds.patches.size()),
                                              static_cast<std::uint32_t>(max_patches));
    std::vector<std::vector<double>> kept;
    kept.reserve(pick.size());
    for (const auto idx : pick) kept.push_back(std::move(ds.patches[idx]));
    ds.patches = std::move(kept);
  }
  return ds;
}

PatchDataset load_dataset_dir(const std::string& dir, int tau, std::size_t max_patches,
                              std::uint64_t seed) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".pgm" || ext == ".gppi") files.push_back(entry.path());
  }
  if (ec) throw IoError("cannot read directory " + dir);
  std::sort(files.begin(), files.end());
  std::vector<Image> images;
  images.reserve(files.size());
  for (const auto& f : files) images.push_back(read_image(f.string()));
  if (images.empty()) throw EmptyDataset("no .pgm/.gppi files under " + dir);
  auto ds = build_dataset(images, tau, max_patches, seed);
  ds.source = dir;
  return ds;
}

PatchDataset synthetic_corpus(int count, int tau, std::uint64_t seed) {
  if (count < 1 || tau < 1) throw EmptyDataset("synthetic_corpus: count and tau must be >= 1");
  PatchDataset ds;
  ds.tau = tau;
  ds.source = "synthetic";
  Splitmix64 rng(seed);
  const double denom = tau > 1 ? tau - 1.0 : 1.0;
  for (int p = 0; p < count; ++p) {
    std::vector<double> patch(static_cast<std::size_t>(tau) * tau, 0.0);
    const double angle = rng.next_unit() * 2.0 * 3.14159265358979323846;
    const double amp = 0.3 + 0.6 * rng.next_unit();
    const double cx = std::cos(angle), sx = std::sin(angle);
    for (int r = 0; r < tau; ++r) {
      for (int c = 0; c < tau; ++c) {
        const double u = c / denom - 0.5, v = r / denom - 0.5;
        patch[static_cast<std::size_t>(r) * tau + c] = 0.5 + amp * (cx * u + sx * v);
      }
    }
    const int rects = 1 + static_cast<int>(rng.next() % 2);
    for (int k = 0; k < rects; ++k) {
      const int r0 = static_cast<int>(rng.next() % static_cast<std::uint64_t>(tau));
      const int c0 = static_cast<int>(rng.next() % static_cast<std::uint64_t>(tau));
      const int rh = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(std::max(1, tau / 2)));
      const int cw = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(std::max(1, tau / 2)));
      const double fill = rng.next_unit();
      for (int r = r0; r < std::min(tau, r0 + rh); ++r) {
        for (int c = c0; c < std::min(tau, c0 + cw); ++c) {
          patch[static_cast<std::size_t>(r) * tau + c] = fill;
        }
      }
    }
    for (auto& v : patch) v = std::clamp(v, 0.0, 1.0);
    ds.patches.push_back(std::move(patch));
  }
  return ds;
}

namespace {

// Tiny dense encoder: patch -> relu hidden -> tanh-remapped latent in [0,1].
// Kept private to the trainer; the public generator container insists on
// square outputs, which a latent is not.
struct Encoder {
  int in = 0, hidden = 0, out = 0;
  std::vector<double> params;  // W1 | b1 | W2 | b2

  static Encoder make(int in, int hidden, int out, NormalStream& normals, double stddev) {
    Encoder e;
    e.in = in;
    e.hidden = hidden;
    e.out = out;
    e.params.assign(static_cast<std::size_t>(hidden) * in + hidden +
                        static_cast<std::size_t>(out) * hidden + out,
                    0.0);
    double* w1 = e.params.data();
    for (int i = 0; i < hidden * in; ++i) w1[i] = stddev * normals.next();
    double* w2 = e.params.data() + static_cast<std::size_t>(hidden) * in + hidden;
    for (int i = 0; i < out * hidden; ++i) w2[i] = stddev * normals.next();
    return e;
  }

  std::size_t w1_off() const { return 0; }
  std::size_t b1_off() const { return static_cast<std::size_t>(hidden) * in; }
  std::size_t w2_off() const { return b1_off() + hidden; }
  std::size_t b2_off() const { return w2_off() + static_cast<std::size_t>(out) * hidden; }

  struct Trace {
    std::vector<double> input, h_pre, h, u, z;
  };

  Trace forward(std::span<const double> patch) const {
    Trace t;
    t.input.assign(patch.begin(), patch.end());
    t.h_pre.assign(static_cast<std::size_t>(hidden), 0.0);
    const double* w1 = params.data() + w1_off();
    const double* b1 = params.data() + b1_off();
    for (int o = 0; o < hidden; ++o) {
      double acc = b1[o];
      const double* row = w1 + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += row[i] * patch[i];
      t.h_pre[o] = acc;
    }
    t.h.resize(t.h_pre.size());
    for (std::size_t i = 0; i < t.h.size(); ++i) t.h[i] = t.h_pre[i] > 0.0 ? t.h_pre[i] : 0.0;
    t.u.assign(static_cast<std::size_t>(out), 0.0);
    const double* w2 = params.data() + w2_off();
    const double* b2 = params.data() + b2_off();
    for (int o = 0; o < out; ++o) {
      double acc = b2[o];
      const double* row = w2 + static_cast<std::size_t>(o) * hidden;
      for (int i = 0; i < hidden; ++i) acc += row[i] * t.h[i];
      t.u[o] = acc;
    }
    t.z.resize(t.u.size());
    for (std::size_t i = 0; i < t.z.size(); ++i) t.z[i] = (std::tanh(t.u[i]) + 1.0) * 0.5;
    return t;
  }

  // d_z is the gradient at the remapped latent; accumulates into d_params.
  void backward(const Trace& t, std::span<const double> d_z, std::span<double> d_params) const {
    std::vector<double> d_u(static_cast<std::size_t>(out));
    for (int o = 0; o < out; ++o) {
      const double th = 2.0 * t.z[o] - 1.0;  // tanh(u)
      d_u[o] = d_z[o] * 0.5 * (1.0 - th * th);
    }
    const double* w2 = params.data() + w2_off();
    double* dw2 = d_params.data() + w2_off();
    double* db2 = d_params.data() + b2_off();
    std::vector<double> d_h(static_cast<std::size_t>(hidden), 0.0);
    for (int o = 0; o < out; ++o) {
      const double g = d_u[o];
      const double* row = w2 + static_cast<std::size_t>(o) * hidden;
      double* drow = dw2 + static_cast<std::size_t>(o) * hidden;
      for (int i = 0; i < hidden; ++i) {
        d_h[i] += row[i] * g;
        drow[i] += t.h[i] * g;
      }
      db2[o] += g;
    }
    double* dw1 = d_params.data() + w1_off();
    double* db1 = d_params.data() + b1_off();
    for (int o = 0; o < hidden; ++o) {
      if (t.h_pre[o] <= 0.0) continue;
      const double g = d_h[o];
      double* drow = dw1 + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) drow[i] += t.input[i] * g;
      db1[o] += g;
    }
  }
};

constexpr int kGradChunk = 16;  // fixed sample chunking keeps sums thread-count invariant

}  // namespace

GeneratorNet train_decoder(const PatchDataset& ds, const GeneratorNet& arch, int epochs,
                           double lr, std::uint64_t seed, std::vector<double>* epoch_loss) {
  if (ds.patches.empty()) throw EmptyDataset("train_decoder: empty dataset");
  const int n = ds.tau * ds.tau;
  for (const auto& p : ds.patches) {
    if (p.size() != static_cast<std::size_t>(n)) {
      throw DimensionMismatch("train_decoder: patch length != tau^2");
    }
  }
  if (arch.tau_out != ds.tau) {
    throw ShapeMismatch("train_decoder: arch tau_out must match dataset tau");
  }

  Splitmix64 seeder(seed);
  const std::uint64_t dec_seed = seeder.next();
  const std::uint64_t enc_seed = seeder.next();

  GeneratorNet dec = arch;
  init_weights(dec, dec_seed, 0.02);
  NormalStream enc_normals(enc_seed);
  Encoder enc = Encoder::make(n, 128, dec.latent_dim, enc_normals, 0.02);

  AdamState dec_adam = make_adam(dec.params.size());
  AdamState enc_adam = make_adam(enc.params.size());

  const std::size_t count = ds.patches.size();
  const std::size_t chunks = (count + kGradChunk - 1) / kGradChunk;
  std::vector<std::vector<double>> dec_partial(chunks), enc_partial(chunks);
  std::vector<double> loss_partial(chunks, 0.0);

  if (epoch_loss) epoch_loss->clear();
  for (int epoch = 0; epoch < epochs; ++epoch) {
    parallel_for(chunks, [&](std::size_t ch) {
      auto& dgrad = dec_partial[ch];
      auto& egrad = enc_partial[ch];
      dgrad.assign(dec.params.size(), 0.0);
      egrad.assign(enc.params.size(), 0.0);
      double loss_acc = 0.0;
      const std::size_t lo = ch * kGradChunk;
      const std::size_t hi = std::min(count, lo + kGradChunk);
      for (std::size_t s = lo; s < hi; ++s) {
        const auto& patch = ds.patches[s];
        const auto et = enc.forward(patch);
        const auto dt = forward_traced(dec, et.z);
        std::vector<double> upstream(dt.output.size());
        double loss = 0.0;
        for (std::size_t i = 0; i < dt.output.size(); ++i) {
          const double r = dt.output[i] - patch[i];
          loss += r * r;
          upstream[i] = 2.0 * r / n;
        }
        loss_acc += loss / n;
        const auto grads = backward(dec, dt, upstream, true, true);
        for (std::size_t i = 0; i < dgrad.size(); ++i) dgrad[i] += grads.weights[i];
        enc.backward(et, grads.latent, egrad);
      }
      loss_partial[ch] = loss_acc;
    });

    std::vector<double> dgrad(dec.params.size(), 0.0), egrad(enc.params.size(), 0.0);
    double total_loss = 0.0;
    for (std::size_t ch = 0; ch < chunks; ++ch) {
      for (std::size_t i = 0; i < dgrad.size(); ++i) dgrad[i] += dec_partial[ch][i];
      for (std::size_t i = 0; i < egrad.size(); ++i) egrad[i] += enc_partial[ch][i];
      total_loss += loss_partial[ch];
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (auto& g : dgrad) g *= inv;
    for (auto& g : egrad) g *= inv;
    adam_step(dec_adam, dec.params, dgrad, lr);
    adam_step(enc_adam, enc.params, egrad, lr);
    if (epoch_loss) epoch_loss->push_back(total_loss * inv);
  }
  return dec;
}

namespace {

GeneratorNet make_discriminator(int tau) {
  const int h1 = (tau + 2 - 3) / 2 + 1;
  const int h2 = (h1 + 2 - 3) / 2 + 1;
  std::vector<LayerSpec> layers{
      ReshapeSpec{1, tau, tau},  Conv2dSpec{1, 4, 3, 2, 1}, ReluSpec{},
      Conv2dSpec{4, 8, 3, 2, 1}, ReluSpec{},               DenseSpec{8 * h2 * h2, 1},
      IdentitySpec{},
  };
  return make_net(tau * tau, 1, std::move(layers));
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double softplus(double t) { return t > 30.0 ? t : std::log1p(std::exp(t)); }

}  // namespace

GeneratorNet train_gan(const PatchDataset& ds, const GeneratorNet& arch, int iterations,
                       double lr_g, double lr_d, std::uint64_t seed, GanReport* report) {
  if (ds.patches.empty()) throw EmptyDataset("train_gan: empty dataset");
  if (arch.tau_out != ds.tau) throw ShapeMismatch("train_gan: arch tau_out must match dataset tau");

  Splitmix64 seeder(seed);
  const std::uint64_t g_seed = seeder.next();
  const std::uint64_t d_seed = seeder.next();
  Splitmix64 rng(seeder.next());

  GeneratorNet gen = arch;
  init_weights(gen, g_seed, 0.02);
  GeneratorNet disc = make_discriminator(ds.tau);
  init_weights(disc, d_seed, 0.02);

  AdamState g_adam = make_adam(gen.params.size());
  AdamState d_adam = make_adam(disc.params.size());

  constexpr int kBatch = 8;
  const int d = gen.latent_dim;
  std::vector<double> z(static_cast<std::size_t>(d));

  for (int it = 0; it < iterations; ++it) {
    // Discriminator: push real logits up, fake logits down.
    std::vector<double> d_grad(disc.params.size(), 0.0);
    double d_loss = 0.0;
    for (int b = 0; b < kBatch; ++b) {
      const auto& real = ds.patches[rng.next() % ds.patches.size()];
      const auto dt = forward_traced(disc, real);
      const double logit = dt.output[0];
      d_loss += softplus(-logit);
      const double up = (sigmoid(logit) - 1.0) / kBatch;
      const auto g = backward(disc, dt, std::span<const double>(&up, 1), false, true);
      for (std::size_t i = 0; i < d_grad.size(); ++i) d_grad[i] += g.weights[i];
    }
    for (int b = 0; b < kBatch; ++b) {
      for (auto& v : z) v = rng.next_unit();
      const auto fake = generate(gen, z);
      const auto dt = forward_traced(disc, fake);
      const double logit = dt.output[0];
      d_loss += softplus(logit);
      const double up = sigmoid(logit) / kBatch;
      const auto g = backward(disc, dt, std::span<const double>(&up, 1), false, true);
      for (std::size_t i = 0; i < d_grad.size(); ++i) d_grad[i] += g.weights[i];
    }
    adam_step(d_adam, disc.params, d_grad, lr_d);

    // Generator: non-saturating update through the discriminator.
    std::vector<double> g_grad(gen.params.size(), 0.0);
    double g_loss = 0.0;
    for (int b = 0; b < kBatch; ++b) {
      for (auto& v : z) v = rng.next_unit();
      const auto gt = forward_traced(gen, z);
      const auto dt = forward_traced(disc, gt.output);
      const double logit = dt.output[0];
      g_loss += softplus(-logit);
      const double up = (sigmoid(logit) - 1.0) / kBatch;
      const auto d_patch = backward(disc, dt, std::span<const double>(&up, 1), true, false);
      const auto g = backward(gen, gt, d_patch.latent, false, true);
      for (std::size_t i = 0; i < g_grad.size(); ++i) g_grad[i] += g.weights[i];
    }
    adam_step(g_adam, gen.params, g_grad, lr_g);

    if (report) {
      report->d_loss.push_back(d_loss / (2 * kBatch));
      report->g_loss.push_back(g_loss / kBatch);
    }
  }
  return gen;
}

}  // namespace gpp
