#include "archstyle/network.hpp"

#include <cmath>

#include "archstyle/errors.hpp"
#include "archstyle/nn/ops.hpp"

namespace archstyle {

using nn::Var;

namespace {

// softplus(0 + kStdShift) == 1, so a zero MLP output leaves the scale alone.
constexpr float kStdShift = 0.5413248546129181f;

// Rescales N(0, 0.02) draws to N(0, 2 / fan_in).
void he_scale(nn::Conv2d& c) {
  const auto& s = c.weight.shape();
  const float k = std::sqrt(2.0f / static_cast<float>(s.c * s.h * s.w)) / 0.02f;
  for (float& v : c.weight.mutable_value().values()) v *= k;
}

// Uniform(+-1/sqrt(fan_in)) to the same N(0, 2 / fan_in) variance.
void he_scale(nn::Linear& l) {
  for (float& v : l.weight.mutable_value().values()) v *= std::sqrt(6.0f);
}

Var activate(const Var& x, Activation act) {
  return act == Activation::kRelu ? nn::relu(x) : nn::leaky_relu(x, 0.2f);
}

void require_divisible_by_4(Dims d, const char* what) {
  if (d.width % 4 != 0 || d.height % 4 != 0) {
    throw ValidationError(std::string(what) + ": dims " + to_string(d) + " must be divisible by 4");
  }
}

Var image_var(const Image& x) { return Var::constant(nn::images_to_tensor(std::span<const Image>(&x, 1))); }

}  // namespace

void NetConfig::validate() const {
  if (base_width < 8) throw ValidationError("base_width must be >= 8");
  if (style_dim < 1) throw ValidationError("style_dim must be >= 1");
  if (n_disc_scales < 1) throw ValidationError("n_disc_scales must be >= 1");
  if (image_size < 4 || image_size % 4 != 0) throw ValidationError("image_size must be a positive multiple of 4");
}

Domain source_of(Direction d) { return d == Direction::kOneToTwo ? Domain::kOne : Domain::kTwo; }
Domain target_of(Direction d) { return d == Direction::kOneToTwo ? Domain::kTwo : Domain::kOne; }

ResBlock::ResBlock(int channels, Activation act, nn::Rng& rng)
    : conv1_(channels, channels, 3, 1, 1, rng), conv2_(channels, channels, 3, 1, 1, rng), act_(act) {}

Var ResBlock::forward(const Var& x) const {
  Var y = activate(nn::instance_norm(conv1_(x)), act_);
  y = nn::instance_norm(conv2_(y));
  return nn::add(x, y);
}

Var ResBlock::forward_adain(const Var& x, const Var& mean1, const Var& std1, const Var& mean2,
                            const Var& std2) const {
  Var y = activate(nn::adain(conv1_(x), mean1, std1), act_);
  y = nn::adain(conv2_(y), mean2, std2);
  return nn::add(x, y);
}

void ResBlock::collect(const std::string& prefix, nn::ParamList& out) const {
  conv1_.collect(prefix + ".conv1", out);
  conv2_.collect(prefix + ".conv2", out);
}

ContentEncoder::ContentEncoder(const NetConfig& cfg, std::shared_ptr<ResBlock> shared, nn::Rng& rng)
    : stem_(3, cfg.base_width, 7, 1, 3, rng),
      down1_(cfg.base_width, cfg.content_channels(), 4, 2, 1, rng),
      down2_(cfg.content_channels(), cfg.content_channels(), 4, 2, 1, rng),
      shared_(std::move(shared)) {
  for (int i = 0; i < 4; ++i) blocks_.emplace_back(cfg.content_channels(), Activation::kRelu, rng);
}

Var ContentEncoder::operator()(const Var& x) const {
  Var h = nn::relu(nn::instance_norm(stem_(x)));
  h = nn::relu(nn::instance_norm(down1_(h)));
  h = nn::relu(nn::instance_norm(down2_(h)));
  for (const auto& b : blocks_) h = b.forward(h);
  return shared_->forward(h);
}

void ContentEncoder::collect(const std::string& prefix, nn::ParamList& out) const {
  stem_.collect(prefix + ".stem", out);
  down1_.collect(prefix + ".down1", out);
  down2_.collect(prefix + ".down2", out);
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(prefix + ".block" + std::to_string(i), out);
}

StyleEncoder::StyleEncoder(const NetConfig& cfg, nn::Rng& rng) {
  const int b = cfg.base_width;
  convs_.emplace_back(3, b, 7, 1, 3, rng);
  convs_.emplace_back(b, 2 * b, 4, 2, 1, rng);
  convs_.emplace_back(2 * b, 4 * b, 4, 2, 1, rng);
  convs_.emplace_back(4 * b, 4 * b, 4, 2, 1, rng);
  convs_.emplace_back(4 * b, 4 * b, 4, 2, 1, rng);
  fc_ = nn::Linear(4 * b, cfg.style_dim, rng);
  for (auto& c : convs_) he_scale(c);
}

Var StyleEncoder::features(const Var& x) const {
  Var h = x;
  for (const auto& c : convs_) h = nn::relu(c(h));
  return h;
}

Var StyleEncoder::head(const Var& pooled) const { return fc_(pooled); }

Var StyleEncoder::operator()(const Var& x) const {
  if (x.shape().h < 32 || x.shape().w < 32) {
    throw ValidationError("style encoder needs inputs of at least 32x32, got " +
                          std::to_string(x.shape().w) + "x" + std::to_string(x.shape().h));
  }
  return head(nn::global_avg_pool(features(x)));
}

void StyleEncoder::collect(const std::string& prefix, nn::ParamList& out) const {
  for (std::size_t i = 0; i < convs_.size(); ++i) convs_[i].collect(prefix + ".conv" + std::to_string(i), out);
  fc_.collect(prefix + ".fc", out);
}

DomainMapper::DomainMapper(const NetConfig& cfg, nn::Rng& rng)
    : up_(cfg.content_channels(), cfg.content_channels(), 3, 2, 1, 1, rng),
      down_(cfg.content_channels(), cfg.content_channels(), 4, 2, 1, rng) {}

Var DomainMapper::operator()(const Var& c) const {
  return down_(nn::relu(nn::instance_norm(up_(c))));
}

void DomainMapper::collect(const std::string& prefix, nn::ParamList& out) const {
  up_.collect(prefix + ".up", out);
  down_.collect(prefix + ".down", out);
}

Generator::Generator(const NetConfig& cfg, nn::Rng& rng) : channels_(cfg.content_channels()) {
  const int c = channels_;
  for (int i = 0; i < kBlocks; ++i) blocks_.emplace_back(c, Activation::kRelu, rng);
  const int adain_outputs = kBlocks * 2 * 2 * c;
  mlp1_ = nn::Linear(cfg.style_dim, cfg.mlp_width(), rng);
  mlp2_ = nn::Linear(cfg.mlp_width(), cfg.mlp_width(), rng);
  mlp3_ = nn::Linear(cfg.mlp_width(), adain_outputs, rng);
  for (auto* l : {&mlp1_, &mlp2_, &mlp3_}) he_scale(*l);
  up1_ = nn::Conv2d(c, c, 5, 1, 2, rng);
  ln1_ = nn::LayerNorm2d(c);
  up2_ = nn::Conv2d(c, cfg.base_width, 5, 1, 2, rng);
  ln2_ = nn::LayerNorm2d(cfg.base_width);
  out_ = nn::Conv2d(cfg.base_width, 3, 7, 1, 3, rng);
}

Var Generator::operator()(const Var& z, const Var& style) const {
  const Var params = mlp3_(nn::relu(mlp2_(nn::relu(mlp1_(style)))));
  const int c = channels_;
  auto mean_of = [&](int layer) { return nn::slice_channels(params, layer * 2 * c, c); };
  auto std_of = [&](int layer) {
    return nn::softplus(nn::affine(nn::slice_channels(params, layer * 2 * c + c, c), 1.0f, kStdShift));
  };
  Var h = z;
  for (int i = 0; i < kBlocks; ++i) {
    h = blocks_[i].forward_adain(h, mean_of(2 * i), std_of(2 * i), mean_of(2 * i + 1), std_of(2 * i + 1));
  }
  h = nn::relu(ln1_(up1_(nn::upsample_nearest2x(h))));
  h = nn::relu(ln2_(up2_(nn::upsample_nearest2x(h))));
  return nn::tanh(out_(h));
}

void Generator::collect(const std::string& prefix, nn::ParamList& out) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(prefix + ".block" + std::to_string(i), out);
  mlp1_.collect(prefix + ".mlp1", out);
  mlp2_.collect(prefix + ".mlp2", out);
  mlp3_.collect(prefix + ".mlp3", out);
  up1_.collect(prefix + ".up1", out);
  ln1_.collect(prefix + ".ln1", out);
  up2_.collect(prefix + ".up2", out);
  ln2_.collect(prefix + ".ln2", out);
  out_.collect(prefix + ".out", out);
}

Discriminator::Discriminator(const NetConfig& cfg, nn::Rng& rng) {
  const int b = cfg.base_width;
  for (int s = 0; s < cfg.n_disc_scales; ++s) {
    std::vector<nn::Conv2d> body;
    body.emplace_back(3, b, 4, 2, 1, rng);
    body.emplace_back(b, 2 * b, 4, 2, 1, rng);
    body.emplace_back(2 * b, 4 * b, 4, 2, 1, rng);
    body.emplace_back(4 * b, 8 * b, 4, 2, 1, rng);
    bodies_.push_back(std::move(body));
    heads_.emplace_back(8 * b, 1, 1, 1, 0, rng);
  }
}

std::vector<Var> Discriminator::operator()(const Var& x) const {
  const int scales = this->scales();
  const int factor = 1 << (scales - 1);
  const int min_side = 16 * factor;
  if (x.shape().h < min_side || x.shape().w < min_side || x.shape().h % factor != 0 ||
      x.shape().w % factor != 0) {
    throw ValidationError("discriminator with " + std::to_string(scales) + " scales needs inputs >= " +
                          std::to_string(min_side) + " and divisible by " + std::to_string(factor));
  }
  std::vector<Var> scores;
  Var input = x;
  for (int s = 0; s < scales; ++s) {
    if (s > 0) input = nn::avg_pool2x(input);
    Var h = input;
    for (const auto& conv : bodies_[s]) h = nn::leaky_relu(conv(h), 0.2f);
    scores.push_back(heads_[s](h));
  }
  return scores;
}

void Discriminator::collect(const std::string& prefix, nn::ParamList& out) const {
  for (std::size_t s = 0; s < bodies_.size(); ++s) {
    const std::string p = prefix + ".scale" + std::to_string(s);
    for (std::size_t i = 0; i < bodies_[s].size(); ++i) bodies_[s][i].collect(p + ".conv" + std::to_string(i), out);
    heads_[s].collect(p + ".head", out);
  }
}

TranslatorBundle::TranslatorBundle(const NetConfig& cfg) : config_(cfg) {
  cfg.validate();
  nn::Rng rng(cfg.seed);
  shared_ = std::make_shared<ResBlock>(cfg.content_channels(), Activation::kLeakyRelu, rng);
  for (int d = 0; d < 2; ++d) {
    DomainNets nets;
    nets.content = ContentEncoder(cfg, shared_, rng);
    nets.style = StyleEncoder(cfg, rng);
    nets.mapper = DomainMapper(cfg, rng);
    nets.generator = Generator(cfg, rng);
    nets.discriminator = Discriminator(cfg, rng);
    domains_.push_back(std::move(nets));
  }
}

nn::ParamList TranslatorBundle::generator_parameters() const {
  nn::ParamList out;
  shared_->collect("shared", out);
  for (int d = 0; d < 2; ++d) {
    const std::string p = "d" + std::to_string(d + 1);
    domains_[d].content.collect(p + ".content", out);
    domains_[d].style.collect(p + ".style", out);
    domains_[d].mapper.collect(p + ".mapper", out);
    domains_[d].generator.collect(p + ".generator", out);
  }
  return out;
}

nn::ParamList TranslatorBundle::discriminator_parameters() const {
  nn::ParamList out;
  for (int d = 0; d < 2; ++d) domains_[d].discriminator.collect("d" + std::to_string(d + 1) + ".disc", out);
  return out;
}

nn::ParamList TranslatorBundle::parameters() const {
  auto out = generator_parameters();
  auto dis = discriminator_parameters();
  out.insert(out.end(), dis.begin(), dis.end());
  return out;
}

std::size_t TranslatorBundle::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.var.value().size();
  return n;
}

ContentCode encode_content(const TranslatorBundle& b, Domain d, const Image& x) {
  require_divisible_by_4(x.dims(), "encode_content");
  nn::NoGradGuard guard;
  return {b.nets(d).content(image_var(x)).value()};
}

ContentCode map_domain(const TranslatorBundle& b, Domain target, const ContentCode& c) {
  nn::NoGradGuard guard;
  return {b.nets(target).mapper(Var::constant(c.features)).value()};
}

StyleCode encode_style(const TranslatorBundle& b, Domain d, const Image& x) {
  nn::NoGradGuard guard;
  const auto t = b.nets(d).style(image_var(x)).value();
  return StyleCode(std::vector<double>(t.values().begin(), t.values().end()));
}

Var style_to_var(std::span<const StyleCode> codes) {
  if (codes.empty()) throw ValidationError("style_to_var: no codes");
  const int dim = static_cast<int>(codes.front().size());
  nn::Tensor t(nn::Shape{static_cast<int>(codes.size()), dim, 1, 1});
  for (std::size_t n = 0; n < codes.size(); ++n) {
    if (static_cast<int>(codes[n].size()) != dim) throw ValidationError("style codes differ in length");
    for (int i = 0; i < dim; ++i) t[n * dim + i] = static_cast<float>(codes[n][i]);
  }
  return Var::constant(std::move(t));
}

Image generate(const TranslatorBundle& b, Domain d, const ContentCode& z, const StyleCode& s) {
  if (static_cast<int>(s.size()) != b.config().style_dim) {
    throw ValidationError("style code has " + std::to_string(s.size()) + " entries, expected " +
                          std::to_string(b.config().style_dim));
  }
  if (z.features.shape().c != b.config().content_channels()) {
    throw ValidationError("content code has " + std::to_string(z.features.shape().c) +
                          " channels, expected " + std::to_string(b.config().content_channels()));
  }
  nn::NoGradGuard guard;
  const Var out = b.nets(d).generator(Var::constant(z.features), style_to_var(std::span<const StyleCode>(&s, 1)));
  return nn::tensor_to_image(out.value(), 0);
}

std::vector<nn::Tensor> discriminate(const TranslatorBundle& b, Domain d, const Image& x) {
  nn::NoGradGuard guard;
  std::vector<nn::Tensor> out;
  for (const auto& v : b.nets(d).discriminator(image_var(x))) out.push_back(v.value());
  return out;
}

Image translate(const TranslatorBundle& b, const Image& x, const StyleSource& style, Direction dir) {
  const Domain src = source_of(dir);
  const Domain dst = target_of(dir);
  const StyleCode s = std::holds_alternative<StyleCode>(style)
                          ? std::get<StyleCode>(style)
                          : encode_style(b, dst, std::get<Image>(style));
  return generate(b, dst, map_domain(b, dst, encode_content(b, src, x)), s);
}

nn::Tensor adain(const nn::Tensor& feat, std::span<const double> mean, std::span<const double> std) {
  const auto& s = feat.shape();
  if (s.n != 1 || mean.size() != static_cast<std::size_t>(s.c) || std.size() != static_cast<std::size_t>(s.c)) {
    throw ValidationError("adain: expects one (1, C, H, W) map and C target statistics");
  }
  nn::Tensor m(nn::Shape{1, s.c, 1, 1});
  nn::Tensor sd(nn::Shape{1, s.c, 1, 1});
  for (int c = 0; c < s.c; ++c) {
    m[c] = static_cast<float>(mean[c]);
    sd[c] = static_cast<float>(std[c]);
    if (!(std[c] > 0.0)) throw ValidationError("adain: target std must be positive");
  }
  nn::NoGradGuard guard;
  return nn::adain(Var::constant(feat), Var::constant(m), Var::constant(sd)).value();
}

StyleCode sample_style(nn::Rng& rng, int dim) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = dist(rng);
  return StyleCode(std::move(v));
}

StyleCode interpolate_style(const StyleCode& a, const StyleCode& b, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("interpolation weight must lie in [0,1]");
  if (a.size() != b.size()) throw ValidationError("style codes differ in length");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (1.0 - t) * a[i] + t * b[i];
  return StyleCode(std::move(v));
}

}  // namespace archstyle
