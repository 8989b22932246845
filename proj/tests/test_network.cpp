#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "archstyle/errors.hpp"
#include "archstyle/network.hpp"
#include "archstyle/nn/ops.hpp"
#include "archstyle/trainer.hpp"
#include "oracles.hpp"

using namespace archstyle;

namespace {

NetConfig toy_config(std::uint64_t seed = 1) {
  NetConfig cfg;
  cfg.base_width = 16;
  cfg.n_disc_scales = 2;
  cfg.image_size = 32;
  cfg.seed = seed;
  return cfg;
}

bool all_finite(const Image& img) {
  for (double v : img.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double max_abs_diff(const nn::Tensor& a, const nn::Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, static_cast<double>(std::abs(a[i] - b[i])));
  return worst;
}

}  // namespace

TEST_CASE("content code and output shapes") {
  const TranslatorBundle b(toy_config());
  std::mt19937_64 rng(1);
  for (Dims d : {Dims{32, 32}, Dims{64, 64}, Dims{48, 32}, Dims{20, 28}}) {
    const Image x = oracle::random_image(d.width, d.height, rng);
    const ContentCode c = encode_content(b, Domain::kOne, x);
    CHECK(c.features.shape() == nn::Shape{1, 32, d.height / 4, d.width / 4});
    const ContentCode z = map_domain(b, Domain::kTwo, c);
    CHECK(z.features.shape() == c.features.shape());
    const Image y = generate(b, Domain::kTwo, z, sample_style(rng));
    CHECK(y.dims() == d);
    for (double v : y.data()) CHECK((v >= 0.0 && v <= 1.0));
  }
  CHECK_THROWS_AS(encode_content(b, Domain::kOne, Image(30, 32)), ValidationError);
}

TEST_CASE("default width content code at 256") {
  NetConfig cfg;
  cfg.seed = 2;
  const TranslatorBundle b(cfg);
  std::mt19937_64 rng(2);
  const ContentCode c = encode_content(b, Domain::kTwo, oracle::random_image(256, 256, rng));
  CHECK(c.features.shape() == nn::Shape{1, 128, 64, 64});
}

TEST_CASE("style encoder") {
  const TranslatorBundle b(toy_config());
  std::mt19937_64 rng(3);
  const Image x = oracle::random_image(32, 32, rng);
  const StyleCode s = encode_style(b, Domain::kOne, x);
  CHECK(s.size() == 8);
  CHECK(encode_style(b, Domain::kOne, oracle::random_image(64, 48, rng)).size() == 8);
  CHECK_THROWS_AS(encode_style(b, Domain::kOne, Image(28, 28)), ValidationError);

  // The code is the fully connected head applied to the spatial mean.
  nn::NoGradGuard guard;
  const std::vector<Image> batch{x};
  const auto& enc = b.nets(Domain::kOne).style;
  const nn::Var feats = enc.features(nn::Var::constant(nn::images_to_tensor(batch)));
  const nn::Tensor& f = feats.value();
  nn::Tensor pooled(nn::Shape{1, f.shape().c, 1, 1});
  for (int c = 0; c < f.shape().c; ++c) {
    double acc = 0.0;
    for (int y = 0; y < f.shape().h; ++y) {
      for (int xx = 0; xx < f.shape().w; ++xx) acc += f.at(0, c, y, xx);
    }
    pooled[c] = static_cast<float>(acc / f.shape().spatial());
  }
  const nn::Tensor code = enc.head(nn::Var::constant(pooled)).value();
  for (int i = 0; i < 8; ++i) CHECK(code[i] == doctest::Approx(s[i]).epsilon(1e-4));
}

TEST_CASE("discriminator scales") {
  NetConfig cfg = toy_config();
  cfg.n_disc_scales = 3;
  const TranslatorBundle b(cfg);
  std::mt19937_64 rng(4);
  const auto scores = discriminate(b, Domain::kOne, oracle::random_image(64, 64, rng));
  REQUIRE(scores.size() == 3);
  CHECK(scores[0].shape() == nn::Shape{1, 1, 4, 4});
  CHECK(scores[1].shape() == nn::Shape{1, 1, 2, 2});
  CHECK(scores[2].shape() == nn::Shape{1, 1, 1, 1});
  CHECK(cfg.min_disc_size() == 64);
  CHECK_THROWS_AS(discriminate(b, Domain::kOne, Image(32, 32)), ValidationError);
}

TEST_CASE("construction is deterministic per seed") {
  const TranslatorBundle a(toy_config(7));
  const TranslatorBundle b(toy_config(7));
  const TranslatorBundle c(toy_config(8));
  std::mt19937_64 rng(5);
  const Image x = oracle::random_image(32, 32, rng);
  const StyleCode s = sample_style(rng);
  CHECK(translate(a, x, s, Direction::kOneToTwo) == translate(b, x, s, Direction::kOneToTwo));
  CHECK_FALSE(translate(a, x, s, Direction::kOneToTwo) == translate(c, x, s, Direction::kOneToTwo));
  CHECK(a.parameter_count() == b.parameter_count());
}

TEST_CASE("the shared residual block feeds both content encoders") {
  TranslatorBundle b(toy_config());
  std::mt19937_64 rng(6);
  const Image x = oracle::random_image(32, 32, rng);
  const ContentCode before1 = encode_content(b, Domain::kOne, x);
  const ContentCode before2 = encode_content(b, Domain::kTwo, x);

  int touched = 0;
  for (auto& p : b.generator_parameters()) {
    if (p.name.rfind("shared", 0) != 0) continue;
    for (float& v : p.var.mutable_value().values()) v += 0.05f;
    ++touched;
  }
  REQUIRE(touched > 0);
  CHECK(max_abs_diff(encode_content(b, Domain::kOne, x).features, before1.features) > 1e-4);
  CHECK(max_abs_diff(encode_content(b, Domain::kTwo, x).features, before2.features) > 1e-4);
  CHECK(b.nets(Domain::kOne).content.shared_block() == b.nets(Domain::kTwo).content.shared_block());
}

TEST_CASE("the shared block is counted once") {
  const TranslatorBundle b(toy_config());
  int shared = 0;
  for (const auto& p : b.parameters()) shared += p.name.rfind("shared", 0) == 0;
  CHECK(shared == 4);
}

TEST_CASE("translate") {
  const TranslatorBundle b(toy_config());
  std::mt19937_64 rng(9);
  const Image x = oracle::random_image(32, 32, rng);
  const Image y = translate(b, x, StyleSource{oracle::random_image(32, 32, rng)}, Direction::kOneToTwo);
  CHECK(y.dims() == x.dims());
  CHECK(all_finite(y));
  const Image self = translate(b, x, encode_style(b, Domain::kOne, x), Direction::kTwoToOne);
  CHECK(all_finite(self));
  const Image ya = translate(b, x, sample_style(rng), Direction::kOneToTwo);
  const Image yb = translate(b, x, sample_style(rng), Direction::kOneToTwo);
  CHECK_FALSE(ya == yb);
  CHECK_THROWS_AS(translate(b, x, StyleCode(std::vector<double>(5, 0.0)), Direction::kOneToTwo), ValidationError);
}

TEST_CASE("sample_style") {
  nn::Rng a(11), b(11), c(12);
  const StyleCode sa = sample_style(a);
  CHECK(sa.size() == 8);
  CHECK(sa == sample_style(b));
  CHECK_FALSE(sa == sample_style(c));

  nn::Rng rng(13);
  const int n = 100000;
  std::vector<double> sum(8, 0.0), sq(8, 0.0);
  for (int i = 0; i < n; ++i) {
    const StyleCode s = sample_style(rng);
    for (int k = 0; k < 8; ++k) {
      sum[k] += s[k];
      sq[k] += s[k] * s[k];
    }
  }
  for (int k = 0; k < 8; ++k) {
    const double mean = sum[k] / n;
    const double sd = std::sqrt(sq[k] / n - mean * mean);
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(sd - 1.0) < 0.02);
  }
}

TEST_CASE("interpolate_style") {
  const StyleCode a(std::vector<double>{0, 0, 0, 0, 0, 0, 0, 0});
  const StyleCode b(std::vector<double>{2, 2, 2, 2, 2, 2, 2, 2});
  CHECK(interpolate_style(a, b, 0.0) == a);
  CHECK(interpolate_style(a, b, 1.0) == b);
  const StyleCode mid = interpolate_style(a, b, 0.5);
  for (double v : mid.values()) CHECK(v == 1.0);
  CHECK_THROWS_AS(interpolate_style(a, b, 1.5), ValidationError);
  CHECK_THROWS_AS(interpolate_style(a, b, -0.1), ValidationError);
}

TEST_CASE("train_step reports finite losses and zeroes disabled terms") {
  const ToyCorpus corpus = make_toy_corpus(4, 32, 3);
  TranslatorBundle b(toy_config());
  nn::Rng rng(1);
  const Batch batch = sample_batch(corpus.domain1, corpus.domain2, 2, 32, rng);
  const LossReport fg = train_step(b, batch, LossWeights::foreground(), nn::AdamParams{}, rng);
  for (double t : fg.terms.as_array()) CHECK(std::isfinite(t));
  CHECK(std::isfinite(fg.total));
  CHECK(std::isfinite(fg.discriminator));
  CHECK(fg.terms.gd > 0.0);
  CHECK(fg.terms.kl > 0.0);
  CHECK(b.generator_optimizer().steps() == 1);
  CHECK(b.discriminator_optimizer().steps() == 1);

  const LossReport bg = train_step(b, batch, LossWeights::background(), nn::AdamParams{}, rng);
  CHECK(bg.terms.gd == 0.0);
  CHECK(bg.terms.kl == 0.0);
  CHECK(std::isfinite(bg.total));
}

TEST_CASE("training is bit-identical across two runs with one seed") {
  const ToyCorpus corpus = make_toy_corpus(6, 32, 4);
  auto run = [&] {
    TranslatorBundle b(toy_config(21));
    TrainOptions o;
    o.iterations = 3;
    o.seed = 5;
    std::vector<LossReport> out;
    train(b, corpus.domain1, corpus.domain2, o, [&](int, const LossReport& r) { out.push_back(r); });
    return out;
  };
  const auto a = run();
  const auto c = run();
  REQUIRE(a.size() == 3);
  REQUIRE(c.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(a[i].terms.as_array() == c[i].terms.as_array());
    CHECK(a[i].total == c[i].total);
    CHECK(a[i].discriminator == c[i].discriminator);
  }
}

TEST_CASE("train rejects tiny corpora") {
  const ToyCorpus corpus = make_toy_corpus(1, 32, 4);
  TranslatorBundle b(toy_config());
  CHECK_THROWS_AS(train(b, corpus.domain1, corpus.domain2, TrainOptions{}, nullptr), ValidationError);
}

TEST_CASE("toy corpus luminance separates the domains") {
  const ToyCorpus corpus = make_toy_corpus(16, 32, 9);
  CHECK(corpus.domain1.size() == 16);
  CHECK(corpus_mean_luminance(corpus.domain1) < 0.4);
  CHECK(corpus_mean_luminance(corpus.domain2) > 0.5);
  const ToyCorpus again = make_toy_corpus(16, 32, 9);
  CHECK(again.domain1[3] == corpus.domain1[3]);
}

TEST_CASE("augment and fit_square") {
  nn::Rng rng(3);
  std::mt19937_64 r2(3);
  const Image x = oracle::random_image(40, 30, r2);
  CHECK(augment(x, 32, rng).dims() == Dims{32, 32});
  CHECK(fit_square(x, 16).dims() == Dims{16, 16});
}
