#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "archstyle/network.hpp"
#include "archstyle/nn/ops.hpp"
#include "archstyle/trainer.hpp"

using namespace archstyle;

namespace {

// Mean |E^s(G(z, r)) - r| over both directions with fixed images and codes.
double style_recon_error(const TranslatorBundle& b, const ToyCorpus& corpus) {
  nn::NoGradGuard guard;
  nn::Rng rng(99);
  const int n = 16;
  double acc = 0.0;
  for (Domain src : {Domain::kOne, Domain::kTwo}) {
    const Domain dst = src == Domain::kOne ? Domain::kTwo : Domain::kOne;
    const auto& images = src == Domain::kOne ? corpus.domain1 : corpus.domain2;
    const std::vector<Image> batch(images.begin(), images.begin() + n);
    std::vector<StyleCode> codes;
    for (int i = 0; i < n; ++i) codes.push_back(sample_style(rng, b.config().style_dim));
    const nn::Var r = style_to_var(codes);
    const DomainNets& from = b.nets(src);
    const DomainNets& to = b.nets(dst);
    const nn::Var z = to.mapper(from.content(nn::Var::constant(nn::images_to_tensor(batch))));
    acc += nn::l1(to.style(to.generator(z, r)), r).value()[0];
  }
  return acc / 2.0;
}

}  // namespace

TEST_CASE("random-style reconstruction improves on the untrained network by half") {
  const ToyCorpus corpus = make_toy_corpus(64, 32, 7);
  NetConfig cfg;
  cfg.base_width = 16;
  cfg.n_disc_scales = 2;
  cfg.image_size = 32;
  cfg.seed = 1;
  TranslatorBundle b(cfg);
  const double before = style_recon_error(b, corpus);

  TrainOptions o;
  o.iterations = 2500;
  o.seed = 3;
  train(b, corpus.domain1, corpus.domain2, o, [&](int it, const LossReport&) {
    if (it % 500 == 0) std::printf("iteration %d: style reconstruction L1 %.4f\n", it, style_recon_error(b, corpus));
  });
  const double after = style_recon_error(b, corpus);
  std::printf("untrained %.4f, trained %.4f\n", before, after);
  CHECK(after <= 0.5 * before);
}
