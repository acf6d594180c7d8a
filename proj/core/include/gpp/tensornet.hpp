#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace gpp {

struct DenseSpec {
  int in = 0;
  int out = 0;
};
struct ReshapeSpec {
  int c = 0;
  int h = 0;
  int w = 0;
};
struct UpsampleSpec {
  int factor = 2;  // nearest neighbor
};
struct Conv2dSpec {
  int in_ch = 0;
  int out_ch = 0;
  int k = 3;
  int stride = 1;
  int pad = 0;  // zero padding, cross-correlation convention
};
struct ReluSpec {};
struct TanhSpec {};
struct IdentitySpec {};  // passthrough; lets tests build nets without the tanh remap

using LayerSpec =
    std::variant<DenseSpec, ReshapeSpec, UpsampleSpec, Conv2dSpec, ReluSpec, TanhSpec, IdentitySpec>;

std::size_t layer_param_count(const LayerSpec& layer);

// Small differentiable patch generator over a fixed layer graph. All
// parameters live in one flat vector, laid out layer by layer (Dense:
// row-major W then bias; Conv: [out_ch][in_ch][k][k] then bias).
//
// When the final layer is Tanh the raw output g in [-1,1] is remapped to
// intensities (g+1)/2, so generated patches always land in [0,1].
struct GeneratorNet {
  int latent_dim = 0;
  int tau_out = 0;
  std::vector<LayerSpec> layers;
  std::vector<double> params;
  std::vector<std::size_t> offsets;  // params offset per layer

  bool remap_output() const {
    return !layers.empty() && std::holds_alternative<TanhSpec>(layers.back());
  }

  std::span<double> layer_params(std::size_t i) {
    return std::span<double>(params).subspan(offsets[i], layer_param_count(layers[i]));
  }
  std::span<const double> layer_params(std::size_t i) const {
    return std::span<const double>(params).subspan(offsets[i], layer_param_count(layers[i]));
  }
};

// Validates shape chaining and allocates zeroed parameters.
GeneratorNet make_net(int latent_dim, int tau_out, std::vector<LayerSpec> layers);

// Default generator family: tau_out 16 or 32, dense stem into a stack of
// nearest-neighbor upsample + 3x3 conv stages, tanh output.
GeneratorNet make_generator_arch(int latent_dim, int tau_out);

// Dense/Conv weights ~ N(0, stddev^2) from the seeded stream, biases zero.
void init_weights(GeneratorNet& net, std::uint64_t seed, double stddev = 0.02);

// Per-layer stddev gain/sqrt(fan_in); used for expressive fixture nets.
void init_weights_fanin(GeneratorNet& net, std::uint64_t seed, double gain);

// Deterministic forward pass; returns the (remapped) patch of tau_out^2
// intensities.
std::vector<double> generate(const GeneratorNet& net, std::span<const double> z);

// Forward pass that keeps per-layer activations for a reverse sweep.
struct ForwardTrace {
  std::vector<std::vector<double>> acts;  // acts[i] = input of layer i; back() = raw output
  std::vector<double> output;             // remapped patch
};
ForwardTrace forward_traced(const GeneratorNet& net, std::span<const double> z);

struct Gradients {
  std::vector<double> latent;
  std::vector<double> weights;
};

// Reverse-mode sweep. `upstream` is the loss gradient with respect to the
// remapped patch returned by generate/forward_traced.
Gradients backward(const GeneratorNet& net, const ForwardTrace& trace,
                   std::span<const double> upstream, bool want_latent, bool want_weights);

std::vector<double> grad_wrt_latent(const GeneratorNet& net, std::span<const double> z,
                                    std::span<const double> upstream);
std::vector<double> grad_wrt_weights(const GeneratorNet& net, std::span<const double> z,
                                     std::span<const double> upstream);

// One latent row per patch, constrained to the unit box.
struct LatentBatch {
  int count = 0;
  int dim = 0;
  std::vector<double> values;  // count x dim, row-major

  std::span<double> row(int i) {
    return std::span<double>(values).subspan(static_cast<std::size_t>(i) * dim, dim);
  }
  std::span<const double> row(int i) const {
    return std::span<const double>(values).subspan(static_cast<std::size_t>(i) * dim, dim);
  }
};

// Elementwise clamp to [0,1]; idempotent.
void project_box(std::span<double> z);
void project_box(LatentBatch& batch);

struct AdamState {
  std::int64_t t = 0;
  std::vector<double> m;
  std::vector<double> v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(std::size_t dim);

// Standard Adam update with bias correction, in place. lr = 0 is a no-op.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr);

// GPPW weight container (see README for the byte layout).
void write_gppw(const GeneratorNet& net, const std::string& path);
GeneratorNet read_gppw(const std::string& path);

}  // namespace gpp
