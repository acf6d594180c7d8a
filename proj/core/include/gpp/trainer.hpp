#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpp/image.hpp"
#include "gpp/tensornet.hpp"

namespace gpp {

struct PatchDataset {
  int tau = 0;
  std::vector<std::vector<double>> patches;  // each tau^2, values in [0,1]
  std::string source;
};

// All non-overlapping patches of the inputs (replicate-padded when needed),
// subsampled to max_patches via a seeded partial shuffle. max_patches = 0
// keeps everything.
PatchDataset build_dataset(const std::vector<Image>& images, int tau, std::size_t max_patches,
                           std::uint64_t seed);

// Reads every .pgm/.gppi file under dir (sorted by filename) and builds a
// dataset from them.
PatchDataset load_dataset_dir(const std::string& dir, int tau, std::size_t max_patches,
                              std::uint64_t seed);

// Smooth oriented gradients with random constant rectangles burned in; the
// fixed desk-scale training corpus.
PatchDataset synthetic_corpus(int count, int tau, std::uint64_t seed);

// Trains an encoder-decoder pair on full-batch reconstruction MSE with Adam,
// then discards the encoder. The decoder is the given arch; the encoder maps
// patches to [0,1]^d so training latents match the recovery-time box.
// epoch_loss, when given, receives the mean per-patch MSE of every epoch.
GeneratorNet train_decoder(const PatchDataset& ds, const GeneratorNet& arch, int epochs,
                           double lr, std::uint64_t seed,
                           std::vector<double>* epoch_loss = nullptr);

struct GanReport {
  std::vector<double> d_loss;
  std::vector<double> g_loss;
};

// Non-saturating GAN: one discriminator step then one generator step per
// iteration, minibatch of 8, small conv discriminator.
GeneratorNet train_gan(const PatchDataset& ds, const GeneratorNet& arch, int iterations,
                       double lr_g, double lr_d, std::uint64_t seed,
                       GanReport* report = nullptr);

}  // namespace gpp
