#pragma once

#include <functional>
#include <string>
#include <vector>

#include "archstyle/image.hpp"
#include "archstyle/losses.hpp"
#include "archstyle/network.hpp"

namespace archstyle {

struct Batch {
  std::vector<Image> domain1;
  std::vector<Image> domain2;
};

/// One discriminator update followed by one generator update, both
/// translation directions. Terms whose weight is zero are not evaluated and
/// report exactly 0. Throws NonFiniteLossError naming the offending term.
LossReport train_step(TranslatorBundle& bundle, const Batch& batch, const LossWeights& w,
                      const nn::AdamParams& opt, nn::Rng& rng);

/// Resize to size * 286 / 256, random crop to size, random horizontal flip.
Image augment(const Image& img, int size, nn::Rng& rng);

/// Draws `batch_size` augmented images per domain, uniformly with replacement.
Batch sample_batch(const std::vector<Image>& domain1, const std::vector<Image>& domain2, int batch_size,
                   int size, nn::Rng& rng);

/// Square centre crop resized to size x size.
Image fit_square(const Image& img, int size);

struct TrainOptions {
  int iterations = 1000;
  int batch_size = 2;
  nn::AdamParams adam;
  LossWeights weights;
  std::uint64_t seed = 0;
};

/// Runs the training loop; `on_step(iteration, report)` is called after each
/// step with a 1-based iteration index.
void train(TranslatorBundle& bundle, const std::vector<Image>& domain1, const std::vector<Image>& domain2,
           const TrainOptions& opts, const std::function<void(int, const LossReport&)>& on_step);

/// Synthetic two-domain corpus: domain 1 is bright squares on a dark
/// ground, domain 2 dark squares on a bright warm-tinted ground.
struct ToyCorpus {
  std::vector<Image> domain1;
  std::vector<Image> domain2;
};
ToyCorpus make_toy_corpus(int count, int size, std::uint64_t seed);

double corpus_mean_luminance(const std::vector<Image>& images);

}  // namespace archstyle
