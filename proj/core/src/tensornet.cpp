#include "gpp/tensornet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>

#include "binio.hpp"
#include "gpp/errors.hpp"
#include "gpp/prng.hpp"

namespace gpp {

namespace {

struct Shape {
  int c = 0, h = 0, w = 0;
  bool spatial = false;
  int total = 0;
};

// Walks the layer chain, checking compatibility. Returns the shape after
// every layer (index 0 = latent input).
std::vector<Shape> walk_shapes(const GeneratorNet& net) {
  std::vector<Shape> shapes;
  shapes.reserve(net.layers.size() + 1);
  shapes.push_back({0, 0, 0, false, net.latent_dim});
  Shape cur = shapes[0];
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& layer = net.layers[i];
    if (const auto* d = std::get_if<DenseSpec>(&layer)) {
      if (d->in < 1 || d->out < 1 || cur.total != d->in) {
        throw ShapeMismatch("dense layer input size mismatch");
      }
      cur = {0, 0, 0, false, d->out};
    } else if (const auto* r = std::get_if<ReshapeSpec>(&layer)) {
      if (r->c < 1 || r->h < 1 || r->w < 1 || cur.total != r->c * r->h * r->w) {
        throw ShapeMismatch("reshape does not preserve element count");
      }
      cur = {r->c, r->h, r->w, true, cur.total};
    } else if (const auto* u = std::get_if<UpsampleSpec>(&layer)) {
      if (!cur.spatial || u->factor < 1) throw ShapeMismatch("upsample needs a spatial input");
      cur = {cur.c, cur.h * u->factor, cur.w * u->factor, true,
             cur.c * cur.h * u->factor * cur.w * u->factor};
    } else if (const auto* cv = std::get_if<Conv2dSpec>(&layer)) {
      if (!cur.spatial || cur.c != cv->in_ch) throw ShapeMismatch("conv input channels mismatch");
      if (cv->k < 1 || cv->stride < 1 || cv->pad < 0 || cv->out_ch < 1) {
        throw ShapeMismatch("bad conv geometry");
      }
      const int oh = (cur.h + 2 * cv->pad - cv->k) / cv->stride + 1;
      const int ow = (cur.w + 2 * cv->pad - cv->k) / cv->stride + 1;
      if (oh < 1 || ow < 1) throw ShapeMismatch("conv output collapses to nothing");
      cur = {cv->out_ch, oh, ow, true, cv->out_ch * oh * ow};
    }
    // ReLU/Tanh/Identity keep the shape.
    shapes.push_back(cur);
  }
  if (cur.total != net.tau_out * net.tau_out) {
    throw ShapeMismatch("net output size does not match tau_out^2");
  }
  return shapes;
}

void dense_forward(const DenseSpec& d, std::span<const double> p, const std::vector<double>& in,
                   std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(d.out), 0.0);
  const double* bias = p.data() + static_cast<std::size_t>(d.out) * d.in;
  for (int o = 0; o < d.out; ++o) {
    const double* row = p.data() + static_cast<std::size_t>(o) * d.in;
    double acc = bias[o];
    for (int i = 0; i < d.in; ++i) acc += row[i] * in[i];
    out[o] = acc;
  }
}

void dense_backward(const DenseSpec& d, std::span<const double> p, const std::vector<double>& in,
                    const std::vector<double>& d_out, std::vector<double>& d_in,
                    std::span<double> d_p, bool want_params) {
  d_in.assign(static_cast<std::size_t>(d.in), 0.0);
  for (int o = 0; o < d.out; ++o) {
    const double g = d_out[o];
    const double* row = p.data() + static_cast<std::size_t>(o) * d.in;
    for (int i = 0; i < d.in; ++i) d_in[i] += row[i] * g;
  }
  if (want_params) {
    double* dw = d_p.data();
    double* db = d_p.data() + static_cast<std::size_t>(d.out) * d.in;
    for (int o = 0; o < d.out; ++o) {
      const double g = d_out[o];
      double* row = dw + static_cast<std::size_t>(o) * d.in;
      for (int i = 0; i < d.in; ++i) row[i] += g * in[i];
      db[o] += g;
    }
  }
}

void upsample_forward(const UpsampleSpec& u, const Shape& s_in, const std::vector<double>& in,
                      std::vector<double>& out) {
  const int f = u.factor;
  const int oh = s_in.h * f, ow = s_in.w * f;
  out.assign(static_cast<std::size_t>(s_in.c) * oh * ow, 0.0);
  for (int c = 0; c < s_in.c; ++c) {
    const double* ip = in.data() + static_cast<std::size_t>(c) * s_in.h * s_in.w;
    double* op = out.data() + static_cast<std::size_t>(c) * oh * ow;
    for (int y = 0; y < oh; ++y) {
      const double* irow = ip + static_cast<std::size_t>(y / f) * s_in.w;
      double* orow = op + static_cast<std::size_t>(y) * ow;
      for (int x = 0; x < ow; ++x) orow[x] = irow[x / f];
    }
  }
}

void upsample_backward(const UpsampleSpec& u, const Shape& s_in, const std::vector<double>& d_out,
                       std::vector<double>& d_in) {
  const int f = u.factor;
  const int oh = s_in.h * f, ow = s_in.w * f;
  d_in.assign(static_cast<std::size_t>(s_in.c) * s_in.h * s_in.w, 0.0);
  for (int c = 0; c < s_in.c; ++c) {
    const double* gp = d_out.data() + static_cast<std::size_t>(c) * oh * ow;
    double* dp = d_in.data() + static_cast<std::size_t>(c) * s_in.h * s_in.w;
    for (int y = 0; y < oh; ++y) {
      const double* grow = gp + static_cast<std::size_t>(y) * ow;
      double* drow = dp + static_cast<std::size_t>(y / f) * s_in.w;
      for (int x = 0; x < ow; ++x) drow[x / f] += grow[x];
    }
  }
}

void conv_forward(const Conv2dSpec& cv, const Shape& s_in, std::span<const double> p,
                  const std::vector<double>& in, std::vector<double>& out) {
  const int oh = (s_in.h + 2 * cv.pad - cv.k) / cv.stride + 1;
  const int ow = (s_in.w + 2 * cv.pad - cv.k) / cv.stride + 1;
  const std::size_t wcount =
      static_cast<std::size_t>(cv.out_ch) * cv.in_ch * cv.k * cv.k;
  const double* bias = p.data() + wcount;
  out.assign(static_cast<std::size_t>(cv.out_ch) * oh * ow, 0.0);
  for (int oc = 0; oc < cv.out_ch; ++oc) {
    double* oplane = out.data() + static_cast<std::size_t>(oc) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias[oc];
        for (int ic = 0; ic < cv.in_ch; ++ic) {
          const double* iplane = in.data() + static_cast<std::size_t>(ic) * s_in.h * s_in.w;
          const double* kw = p.data() + ((static_cast<std::size_t>(oc) * cv.in_ch + ic) * cv.k) * cv.k;
          for (int ky = 0; ky < cv.k; ++ky) {
            const int iy = oy * cv.stride - cv.pad + ky;
            if (iy < 0 || iy >= s_in.h) continue;
            for (int kx = 0; kx < cv.k; ++kx) {
              const int ix = ox * cv.stride - cv.pad + kx;
              if (ix < 0 || ix >= s_in.w) continue;
              acc += kw[static_cast<std::size_t>(ky) * cv.k + kx] *
                     iplane[static_cast<std::size_t>(iy) * s_in.w + ix];
            }
          }
        }
        oplane[static_cast<std::size_t>(oy) * ow + ox] = acc;
      }
    }
  }
}

void conv_backward(const Conv2dSpec& cv, const Shape& s_in, std::span<const double> p,
                   const std::vector<double>& in, const std::vector<double>& d_out,
                   std::vector<double>& d_in, std::span<double> d_p, bool want_params) {
  const int oh = (s_in.h + 2 * cv.pad - cv.k) / cv.stride + 1;
  const int ow = (s_in.w + 2 * cv.pad - cv.k) / cv.stride + 1;
  const std::size_t wcount =
      static_cast<std::size_t>(cv.out_ch) * cv.in_ch * cv.k * cv.k;
  d_in.assign(in.size(), 0.0);
  double* dbias = want_params ? d_p.data() + wcount : nullptr;
  for (int oc = 0; oc < cv.out_ch; ++oc) {
    const double* gplane = d_out.data() + static_cast<std::size_t>(oc) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const double g = gplane[static_cast<std::size_t>(oy) * ow + ox];
        if (want_params) dbias[oc] += g;
        for (int ic = 0; ic < cv.in_ch; ++ic) {
          const double* iplane = in.data() + static_cast<std::size_t>(ic) * s_in.h * s_in.w;
          double* diplane = d_in.data() + static_cast<std::size_t>(ic) * s_in.h * s_in.w;
          const std::size_t kbase = ((static_cast<std::size_t>(oc) * cv.in_ch + ic) * cv.k) * cv.k;
          const double* kw = p.data() + kbase;
          double* dkw = want_params ? d_p.data() + kbase : nullptr;
          for (int ky = 0; ky < cv.k; ++ky) {
            const int iy = oy * cv.stride - cv.pad + ky;
            if (iy < 0 || iy >= s_in.h) continue;
            for (int kx = 0; kx < cv.k; ++kx) {
              const int ix = ox * cv.stride - cv.pad + kx;
              if (ix < 0 || ix >= s_in.w) continue;
              const std::size_t ipos = static_cast<std::size_t>(iy) * s_in.w + ix;
              diplane[ipos] += kw[static_cast<std::size_t>(ky) * cv.k + kx] * g;
              if (want_params) dkw[static_cast<std::size_t>(ky) * cv.k + kx] += iplane[ipos] * g;
            }
          }
        }
      }
    }
  }
}

}  // namespace

std::size_t layer_param_count(const LayerSpec& layer) {
  if (const auto* d = std::get_if<DenseSpec>(&layer)) {
    return static_cast<std::size_t>(d->out) * d->in + d->out;
  }
  if (const auto* cv = std::get_if<Conv2dSpec>(&layer)) {
    return static_cast<std::size_t>(cv->out_ch) * cv->in_ch * cv->k * cv->k + cv->out_ch;
  }
  return 0;
}

GeneratorNet make_net(int latent_dim, int tau_out, std::vector<LayerSpec> layers) {
  if (latent_dim < 1 || tau_out < 1) throw ShapeMismatch("make_net: bad latent_dim or tau_out");
  GeneratorNet net;
  net.latent_dim = latent_dim;
  net.tau_out = tau_out;
  net.layers = std::move(layers);
  net.offsets.resize(net.layers.size(), 0);
  std::size_t total = 0;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    net.offsets[i] = total;
    total += layer_param_count(net.layers[i]);
  }
  net.params.assign(total, 0.0);
  walk_shapes(net);
  return net;
}

GeneratorNet make_generator_arch(int latent_dim, int tau_out) {
  std::vector<LayerSpec> layers;
  layers.push_back(DenseSpec{latent_dim, 256});
  layers.push_back(ReshapeSpec{16, 4, 4});
  layers.push_back(UpsampleSpec{2});
  layers.push_back(Conv2dSpec{16, 8, 3, 1, 1});
  layers.push_back(ReluSpec{});
  if (tau_out == 16) {
    layers.push_back(UpsampleSpec{2});
    layers.push_back(Conv2dSpec{8, 1, 3, 1, 1});
  } else if (tau_out == 32) {
    layers.push_back(UpsampleSpec{2});
    layers.push_back(Conv2dSpec{8, 8, 3, 1, 1});
    layers.push_back(ReluSpec{});
    layers.push_back(UpsampleSpec{2});
    layers.push_back(Conv2dSpec{8, 1, 3, 1, 1});
  } else {
    throw ShapeMismatch("make_generator_arch: tau_out must be 16 or 32");
  }
  layers.push_back(TanhSpec{});
  return make_net(latent_dim, tau_out, std::move(layers));
}

namespace {

void fill_layer_weights(GeneratorNet& net, NormalStream& normals,
                        const std::function<double(const LayerSpec&)>& stddev_of) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const std::size_t count = layer_param_count(net.layers[i]);
    if (count == 0) continue;
    auto p = net.layer_params(i);
    const double sd = stddev_of(net.layers[i]);
    std::size_t weight_count = 0;
    if (const auto* d = std::get_if<DenseSpec>(&net.layers[i])) {
      weight_count = static_cast<std::size_t>(d->out) * d->in;
    } else if (const auto* cv = std::get_if<Conv2dSpec>(&net.layers[i])) {
      weight_count = static_cast<std::size_t>(cv->out_ch) * cv->in_ch * cv->k * cv->k;
    }
    for (std::size_t j = 0; j < weight_count; ++j) p[j] = sd * normals.next();
    for (std::size_t j = weight_count; j < count; ++j) p[j] = 0.0;
  }
}

}  // namespace

void init_weights(GeneratorNet& net, std::uint64_t seed, double stddev) {
  NormalStream normals(seed);
  fill_layer_weights(net, normals, [stddev](const LayerSpec&) { return stddev; });
}

void init_weights_fanin(GeneratorNet& net, std::uint64_t seed, double gain) {
  NormalStream normals(seed);
  fill_layer_weights(net, normals, [gain](const LayerSpec& layer) {
    if (const auto* d = std::get_if<DenseSpec>(&layer)) return gain / std::sqrt(double(d->in));
    if (const auto* cv = std::get_if<Conv2dSpec>(&layer)) {
      return gain / std::sqrt(double(cv->in_ch) * cv->k * cv->k);
    }
    return gain;
  });
}

ForwardTrace forward_traced(const GeneratorNet& net, std::span<const double> z) {
  if (z.size() != static_cast<std::size_t>(net.latent_dim)) {
    throw ShapeMismatch("forward: latent length != latent_dim");
  }
  const auto shapes = walk_shapes(net);
  ForwardTrace trace;
  trace.acts.resize(net.layers.size() + 1);
  trace.acts[0].assign(z.begin(), z.end());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& layer = net.layers[i];
    const std::vector<double>& in = trace.acts[i];
    std::vector<double>& out = trace.acts[i + 1];
    if (const auto* d = std::get_if<DenseSpec>(&layer)) {
      dense_forward(*d, net.layer_params(i), in, out);
    } else if (std::holds_alternative<ReshapeSpec>(layer)) {
      out = in;
    } else if (const auto* u = std::get_if<UpsampleSpec>(&layer)) {
      upsample_forward(*u, shapes[i], in, out);
    } else if (const auto* cv = std::get_if<Conv2dSpec>(&layer)) {
      conv_forward(*cv, shapes[i], net.layer_params(i), in, out);
    } else if (std::holds_alternative<ReluSpec>(layer)) {
      out.resize(in.size());
      for (std::size_t j = 0; j < in.size(); ++j) out[j] = in[j] > 0.0 ? in[j] : 0.0;
    } else if (std::holds_alternative<TanhSpec>(layer)) {
      out.resize(in.size());
      for (std::size_t j = 0; j < in.size(); ++j) out[j] = std::tanh(in[j]);
    } else {
      out = in;  // Identity
    }
  }
  if (net.remap_output()) {
    trace.output.resize(trace.acts.back().size());
    for (std::size_t j = 0; j < trace.output.size(); ++j) {
      trace.output[j] = (trace.acts.back()[j] + 1.0) * 0.5;
    }
  } else {
    trace.output = trace.acts.back();
  }
  return trace;
}

std::vector<double> generate(const GeneratorNet& net, std::span<const double> z) {
  return forward_traced(net, z).output;
}

Gradients backward(const GeneratorNet& net, const ForwardTrace& trace,
                   std::span<const double> upstream, bool want_latent, bool want_weights) {
  if (upstream.size() != trace.output.size()) {
    throw ShapeMismatch("backward: upstream length != output length");
  }
  const auto shapes = walk_shapes(net);
  Gradients grads;
  if (want_weights) grads.weights.assign(net.params.size(), 0.0);

  std::vector<double> d(upstream.begin(), upstream.end());
  if (net.remap_output()) {
    for (auto& v : d) v *= 0.5;  // d patch / d raw tanh output
  }
  std::vector<double> d_prev;
  for (std::size_t idx = net.layers.size(); idx-- > 0;) {
    const LayerSpec& layer = net.layers[idx];
    const std::vector<double>& in = trace.acts[idx];
    const std::vector<double>& out = trace.acts[idx + 1];
    std::span<double> d_p;
    if (want_weights) {
      d_p = std::span<double>(grads.weights)
                .subspan(net.offsets[idx], layer_param_count(layer));
    }
    if (const auto* dn = std::get_if<DenseSpec>(&layer)) {
      dense_backward(*dn, net.layer_params(idx), in, d, d_prev, d_p, want_weights);
    } else if (std::holds_alternative<ReshapeSpec>(layer)) {
      d_prev = d;
    } else if (const auto* u = std::get_if<UpsampleSpec>(&layer)) {
      upsample_backward(*u, shapes[idx], d, d_prev);
    } else if (const auto* cv = std::get_if<Conv2dSpec>(&layer)) {
      conv_backward(*cv, shapes[idx], net.layer_params(idx), in, d, d_prev, d_p, want_weights);
    } else if (std::holds_alternative<ReluSpec>(layer)) {
      d_prev.resize(in.size());
      for (std::size_t j = 0; j < in.size(); ++j) d_prev[j] = in[j] > 0.0 ? d[j] : 0.0;
    } else if (std::holds_alternative<TanhSpec>(layer)) {
      d_prev.resize(in.size());
      for (std::size_t j = 0; j < in.size(); ++j) d_prev[j] = (1.0 - out[j] * out[j]) * d[j];
    } else {
      d_prev = d;  // Identity
    }
    std::swap(d, d_prev);
  }
  if (want_latent) grads.latent = std::move(d);
  return grads;
}

std::vector<double> grad_wrt_latent(const GeneratorNet& net, std::span<const double> z,
                                    std::span<const double> upstream) {
  const auto trace = forward_traced(net, z);
  return backward(net, trace, upstream, true, false).latent;
}

std::vector<double> grad_wrt_weights(const GeneratorNet& net, std::span<const double> z,
                                     std::span<const double> upstream) {
  const auto trace = forward_traced(net, z);
  return backward(net, trace, upstream, false, true).weights;
}

void project_box(std::span<double> z) {
  for (auto& v : z) v = std::clamp(v, 0.0, 1.0);
}

void project_box(LatentBatch& batch) {
  project_box(std::span<double>(batch.values));
}

AdamState make_adam(std::size_t dim) {
  AdamState s;
  s.m.assign(dim, 0.0);
  s.v.assign(dim, 0.0);
  return s;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeMismatch("adam_step: size mismatch");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

namespace {

constexpr std::uint8_t kTagDense = 0;
constexpr std::uint8_t kTagReshape = 1;
constexpr std::uint8_t kTagUpsample = 2;
constexpr std::uint8_t kTagConv = 3;
constexpr std::uint8_t kTagRelu = 4;
constexpr std::uint8_t kTagTanh = 5;
constexpr std::uint8_t kTagIdentity = 6;

}  // namespace

void write_gppw(const GeneratorNet& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write("GPPW", 4);
  binio::write_u32(os, 1);
  binio::write_u32(os, static_cast<std::uint32_t>(net.latent_dim));
  binio::write_u32(os, static_cast<std::uint32_t>(net.tau_out));
  binio::write_u32(os, static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& layer : net.layers) {
    if (const auto* d = std::get_if<DenseSpec>(&layer)) {
      binio::write_u8(os, kTagDense);
      binio::write_u32(os, static_cast<std::uint32_t>(d->in));
      binio::write_u32(os, static_cast<std::uint32_t>(d->out));
    } else if (const auto* r = std::get_if<ReshapeSpec>(&layer)) {
      binio::write_u8(os, kTagReshape);
      binio::write_u32(os, static_cast<std::uint32_t>(r->c));
      binio::write_u32(os, static_cast<std::uint32_t>(r->h));
      binio::write_u32(os, static_cast<std::uint32_t>(r->w));
    } else if (const auto* u = std::get_if<UpsampleSpec>(&layer)) {
      binio::write_u8(os, kTagUpsample);
      binio::write_u32(os, static_cast<std::uint32_t>(u->factor));
    } else if (const auto* cv = std::get_if<Conv2dSpec>(&layer)) {
      binio::write_u8(os, kTagConv);
      binio::write_u32(os, static_cast<std::uint32_t>(cv->in_ch));
      binio::write_u32(os, static_cast<std::uint32_t>(cv->out_ch));
      binio::write_u32(os, static_cast<std::uint32_t>(cv->k));
      binio::write_u32(os, static_cast<std::uint32_t>(cv->stride));
      binio::write_u32(os, static_cast<std::uint32_t>(cv->pad));
    } else if (std::holds_alternative<ReluSpec>(layer)) {
      binio::write_u8(os, kTagRelu);
    } else if (std::holds_alternative<TanhSpec>(layer)) {
      binio::write_u8(os, kTagTanh);
    } else {
      binio::write_u8(os, kTagIdentity);
    }
  }
  for (const double v : net.params) binio::write_f32(os, static_cast<float>(v));
  if (!os) throw IoError("short write to " + path);
}

GeneratorNet read_gppw(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "GPPW", 4) != 0) throw IoError(path + ": not a GPPW file");
  if (binio::read_u32(is) != 1) throw IoError(path + ": unsupported GPPW version");
  const int latent_dim = static_cast<int>(binio::read_u32(is));
  const int tau_out = static_cast<int>(binio::read_u32(is));
  const std::uint32_t layer_count = binio::read_u32(is);
  if (layer_count > 1024) throw IoError(path + ": implausible layer count");
  std::vector<LayerSpec> layers;
  layers.reserve(layer_count);
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    switch (binio::read_u8(is)) {
      case kTagDense: {
        const int in = static_cast<int>(binio::read_u32(is));
        const int out = static_cast<int>(binio::read_u32(is));
        layers.push_back(DenseSpec{in, out});
        break;
      }
      case kTagReshape: {
        const int c = static_cast<int>(binio::read_u32(is));
        const int h = static_cast<int>(binio::read_u32(is));
        const int w = static_cast<int>(binio::read_u32(is));
        layers.push_back(ReshapeSpec{c, h, w});
        break;
      }
      case kTagUpsample:
        layers.push_back(UpsampleSpec{static_cast<int>(binio::read_u32(is))});
        break;
      case kTagConv: {
        Conv2dSpec cv;
        cv.in_ch = static_cast<int>(binio::read_u32(is));
        cv.out_ch = static_cast<int>(binio::read_u32(is));
        cv.k = static_cast<int>(binio::read_u32(is));
        cv.stride = static_cast<int>(binio::read_u32(is));
        cv.pad = static_cast<int>(binio::read_u32(is));
        layers.push_back(cv);
        break;
      }
      case kTagRelu:
        layers.push_back(ReluSpec{});
        break;
      case kTagTanh:
        layers.push_back(TanhSpec{});
        break;
      case kTagIdentity:
        layers.push_back(IdentitySpec{});
        break;
      default:
        throw IoError(path + ": unknown layer tag");
    }
  }
  GeneratorNet net;
  try {
    net = make_net(latent_dim, tau_out, std::move(layers));
  } catch (const ShapeMismatch& e) {
    throw IoError(path + ": " + e.what());
  }
  for (auto& v : net.params) v = static_cast<double>(binio::read_f32(is));
  return net;
}

}  // namespace gpp
