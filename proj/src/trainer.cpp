#include "archstyle/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "archstyle/errors.hpp"
#include "archstyle/nn/ops.hpp"

namespace archstyle {

using nn::Var;

namespace {

Var unit_range(const Var& v) { return nn::affine(v, 0.5f, 0.5f); }

Var batch_var(const std::vector<Image>& images) { return Var::constant(nn::images_to_tensor(images)); }

Var random_styles(int n, int dim, nn::Rng& rng) {
  std::vector<StyleCode> codes;
  for (int i = 0; i < n; ++i) codes.push_back(sample_style(rng, dim));
  return style_to_var(codes);
}

double scalar(const Var& v) { return static_cast<double>(v.value()[0]); }

}  // namespace

LossReport train_step(TranslatorBundle& bundle, const Batch& batch, const LossWeights& w,
                      const nn::AdamParams& opt, nn::Rng& rng) {
  w.validate();
  if (batch.domain1.empty() || batch.domain1.size() != batch.domain2.size()) {
    throw ValidationError("train_step: both domains need the same non-zero batch size");
  }
  require_same_dims(batch.domain1.front().dims(), batch.domain2.front().dims(), "train_step");

  const auto& cfg = bundle.config();
  const int n = static_cast<int>(batch.domain1.size());
  const DomainNets& d1 = bundle.nets(Domain::kOne);
  const DomainNets& d2 = bundle.nets(Domain::kTwo);
  const auto gen_params = bundle.generator_parameters();
  const auto dis_params = bundle.discriminator_parameters();

  const Var x1 = batch_var(batch.domain1);
  const Var x2 = batch_var(batch.domain2);
  const Var x1u = unit_range(x1);
  const Var x2u = unit_range(x2);
  const Var r1 = random_styles(n, cfg.style_dim, rng);
  const Var r2 = random_styles(n, cfg.style_dim, rng);

  // Shared generator-side forward pass.
  const Var c1 = d1.content(x1);
  const Var c2 = d2.content(x2);
  const Var s1 = d1.style(x1);
  const Var s2 = d2.style(x2);
  const Var z12 = d2.mapper(c1);
  const Var z21 = d1.mapper(c2);
  const Var x12 = d2.generator(z12, s2);
  const Var x21 = d1.generator(z21, s1);
  const Var x12r = d2.generator(z12, r2);
  const Var x21r = d1.generator(z21, r1);

  // Discriminators: real target-domain images against detached fakes.
  nn::zero_grad(gen_params);
  nn::zero_grad(dis_params);
  const Var fake2 = nn::concat_batch(x12.detach(), x12r.detach());
  const Var fake1 = nn::concat_batch(x21.detach(), x21r.detach());
  const auto real2_scores = d2.discriminator(x2);
  const auto fake2_scores = d2.discriminator(fake2);
  const auto real1_scores = d1.discriminator(x1);
  const auto fake1_scores = d1.discriminator(fake1);
  const Var d_loss = nn::add(nn::lsgan_discriminator(real2_scores, fake2_scores),
                             nn::lsgan_discriminator(real1_scores, fake1_scores));
  const double d_value = scalar(d_loss);
  if (!std::isfinite(d_value)) {
    throw NonFiniteLossError("discriminator", "discriminator loss is not finite");
  }
  nn::backward(d_loss);
  bundle.discriminator_optimizer().step(dis_params, opt);
  nn::zero_grad(dis_params);

  // Generator terms, each summed over both directions.
  LossTerms terms;
  std::vector<std::pair<double, Var>> weighted;
  auto record = [&](double lambda, double& slot, const Var& v) {
    slot = scalar(v);
    weighted.emplace_back(lambda, v);
  };

  if (w.lambda_x > 0.0) {
    const Var x11 = d1.generator(d1.mapper(c1), s1);
    const Var x22 = d2.generator(d2.mapper(c2), s2);
    record(w.lambda_x, terms.x, nn::add(nn::l1(unit_range(x11), x1u), nn::l1(unit_range(x22), x2u)));
  }
  if (w.lambda_s > 0.0) {
    record(w.lambda_s, terms.s, nn::add(nn::l1(d2.style(x12r), r2), nn::l1(d1.style(x21r), r1)));
  }
  if (w.lambda_c > 0.0 || w.lambda_z > 0.0 || w.lambda_cycle > 0.0) {
    const Var c12 = d2.content(x12);
    const Var c21 = d1.content(x21);
    if (w.lambda_c > 0.0) {
      record(w.lambda_c, terms.c, nn::add(nn::l1(c12, c1), nn::l1(c21, c2)));
    }
    if (w.lambda_z > 0.0) {
      record(w.lambda_z, terms.z, nn::add(nn::l1(d2.mapper(c12), z12), nn::l1(d1.mapper(c21), z21)));
    }
    if (w.lambda_cycle > 0.0) {
      const Var x121 = d1.generator(d1.mapper(c12), s1);
      const Var x212 = d2.generator(d2.mapper(c21), s2);
      record(w.lambda_cycle, terms.cycle,
             nn::add(nn::l1(unit_range(x121), x1u), nn::l1(unit_range(x212), x2u)));
    }
  }
  if (w.lambda_adv > 0.0) {
    const auto g2 = d2.discriminator(nn::concat_batch(x12, x12r));
    const auto g1 = d1.discriminator(nn::concat_batch(x21, x21r));
    record(w.lambda_adv, terms.adv, nn::add(nn::lsgan_generator(g2), nn::lsgan_generator(g1)));
  }
  if (w.lambda_gd > 0.0) {
    const auto kernel = [](const Image& out, const Image& src) { return gradient_loss(out, src); };
    record(w.lambda_gd, terms.gd,
           nn::add(nn::image_loss(unit_range(x12), batch.domain1, kernel),
                   nn::image_loss(unit_range(x21), batch.domain2, kernel)));
  }
  if (w.lambda_kl > 0.0) {
    const auto kernel = [](const Image& out, const Image& style) { return luminance_kl_loss(out, style); };
    record(w.lambda_kl, terms.kl,
           nn::add(nn::image_loss(unit_range(x12), batch.domain2, kernel),
                   nn::image_loss(unit_range(x21), batch.domain1, kernel)));
  }

  LossReport report = total_generator_loss(terms, w);
  report.discriminator = d_value;

  const Var total = nn::weighted_sum(weighted);
  nn::backward(total);
  bundle.generator_optimizer().step(gen_params, opt);
  nn::zero_grad(gen_params);
  nn::zero_grad(dis_params);
  return report;
}

Image fit_square(const Image& img, int size) {
  const int side = std::min(img.width(), img.height());
  const Image sq = crop(img, (img.width() - side) / 2, (img.height() - side) / 2, {side, side});
  return resize_bilinear(sq, {size, size});
}

Image augment(const Image& img, int size, nn::Rng& rng) {
  const int load = static_cast<int>(std::lround(size * 286.0 / 256.0));
  const Image big = fit_square(img, load);
  std::uniform_int_distribution<int> offset(0, load - size);
  const int ox = offset(rng);
  const int oy = offset(rng);
  Image out = crop(big, ox, oy, {size, size});
  if (std::bernoulli_distribution(0.5)(rng)) out = flip_horizontal(out);
  return out;
}

Batch sample_batch(const std::vector<Image>& domain1, const std::vector<Image>& domain2, int batch_size,
                   int size, nn::Rng& rng) {
  if (domain1.empty() || domain2.empty()) throw ValidationError("sample_batch: empty domain");
  std::uniform_int_distribution<std::size_t> pick1(0, domain1.size() - 1);
  std::uniform_int_distribution<std::size_t> pick2(0, domain2.size() - 1);
  Batch b;
  for (int i = 0; i < batch_size; ++i) {
    b.domain1.push_back(augment(domain1[pick1(rng)], size, rng));
    b.domain2.push_back(augment(domain2[pick2(rng)], size, rng));
  }
  return b;
}

void train(TranslatorBundle& bundle, const std::vector<Image>& domain1, const std::vector<Image>& domain2,
           const TrainOptions& opts, const std::function<void(int, const LossReport&)>& on_step) {
  if (domain1.size() < 2 || domain2.size() < 2) {
    throw ValidationError("training needs at least 2 images per domain");
  }
  nn::Rng rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  const int size = bundle.config().image_size;
  for (int it = 1; it <= opts.iterations; ++it) {
    const Batch batch = sample_batch(domain1, domain2, opts.batch_size, size, rng);
    const LossReport report = train_step(bundle, batch, opts.weights, opts.adam, rng);
    if (on_step) on_step(it, report);
  }
}

ToyCorpus make_toy_corpus(int count, int size, std::uint64_t seed) {
  if (count < 1 || size < 8) throw ValidationError("toy corpus needs count >= 1 and size >= 8");
  nn::Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> n_squares(1, 3);
  std::uniform_int_distribution<int> side(size / 5, size / 2);

  auto draw = [&](std::array<double, 3> ground, auto square_color) {
    Image img(size, size);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = std::clamp(ground[c] + 0.03 * (u(rng) - 0.5), 0.0, 1.0);
      }
    }
    const int k = n_squares(rng);
    for (int s = 0; s < k; ++s) {
      const int len = side(rng);
      std::uniform_int_distribution<int> pos(0, size - len);
      const int x0 = pos(rng);
      const int y0 = pos(rng);
      const std::array<double, 3> col = square_color();
      for (int y = y0; y < y0 + len; ++y) {
        for (int x = x0; x < x0 + len; ++x) {
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = col[c];
        }
      }
    }
    return img;
  };

  ToyCorpus corpus;
  for (int i = 0; i < count; ++i) {
    const double g = 0.05 + 0.1 * u(rng);
    corpus.domain1.push_back(draw({g, g, g + 0.03}, [&] {
      const double v = 0.8 + 0.2 * u(rng);
      return std::array<double, 3>{v, v, v};
    }));
  }
  for (int i = 0; i < count; ++i) {
    const double g = 0.8 + 0.15 * u(rng);
    corpus.domain2.push_back(draw({g, 0.85 * g, 0.6 * g}, [&] {
      const double v = 0.1 + 0.15 * u(rng);
      return std::array<double, 3>{v + 0.05, v, 0.7 * v};
    }));
  }
  return corpus;
}

double corpus_mean_luminance(const std::vector<Image>& images) {
  if (images.empty()) throw ValidationError("corpus_mean_luminance: empty corpus");
  double acc = 0.0;
  for (const auto& img : images) acc += mean_luminance(img);
  return acc / static_cast<double>(images.size());
}

}  // namespace archstyle
