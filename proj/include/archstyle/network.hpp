#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "archstyle/image.hpp"
#include "archstyle/nn/adam.hpp"
#include "archstyle/nn/layers.hpp"

namespace archstyle {

/// Architecture knobs. Channel widths scale with `base_width`: the content
/// code has 2 * base_width channels (128 at the default 64).
struct NetConfig {
  int base_width = 64;
  int style_dim = 8;
  int n_disc_scales = 3;
  int image_size = 256;
  std::uint64_t seed = 0;

  int content_channels() const { return 2 * base_width; }
  int mlp_width() const { return 4 * base_width; }
  /// Smallest square input the multi-scale discriminator accepts.
  int min_disc_size() const { return 16 << (n_disc_scales - 1); }
  void validate() const;

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

enum class Domain { kOne = 0, kTwo = 1 };
enum class Direction { kOneToTwo, kTwoToOne };

Domain source_of(Direction d);
Domain target_of(Direction d);

struct ContentCode {
  nn::Tensor features;  // (1, C, H/4, W/4)
};

class StyleCode {
 public:
  StyleCode() = default;
  explicit StyleCode(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const StyleCode&, const StyleCode&) = default;

 private:
  std::vector<double> values_;
};

enum class Activation { kRelu, kLeakyRelu };

/// conv3-norm-act-conv3-norm plus identity skip.
class ResBlock {
 public:
  ResBlock() = default;
  ResBlock(int channels, Activation act, nn::Rng& rng);

  nn::Var forward(const nn::Var& x) const;
  /// Same block with both instance norms replaced by AdaIN.
  nn::Var forward_adain(const nn::Var& x, const nn::Var& mean1, const nn::Var& std1,
                        const nn::Var& mean2, const nn::Var& std2) const;
  void collect(const std::string& prefix, nn::ParamList& out) const;

 private:
  nn::Conv2d conv1_;
  nn::Conv2d conv2_;
  Activation act_ = Activation::kRelu;
};

/// c7s1-b, c4s2-2b, c4s2-2b, 4 residual blocks, then the block shared by
/// both domains' encoders.
class ContentEncoder {
 public:
  ContentEncoder() = default;
  ContentEncoder(const NetConfig& cfg, std::shared_ptr<ResBlock> shared, nn::Rng& rng);

  nn::Var operator()(const nn::Var& x) const;
  void collect(const std::string& prefix, nn::ParamList& out) const;
  const std::shared_ptr<ResBlock>& shared_block() const { return shared_; }

 private:
  nn::Conv2d stem_;
  nn::Conv2d down1_;
  nn::Conv2d down2_;
  std::vector<ResBlock> blocks_;
  std::shared_ptr<ResBlock> shared_;
};

/// c7s1-b, c4s2-2b, c4s2-4b x3, global average pool, fully connected head.
class StyleEncoder {
 public:
  StyleEncoder() = default;
  StyleEncoder(const NetConfig& cfg, nn::Rng& rng);

  nn::Var operator()(const nn::Var& x) const;
  /// Everything before the pooling; exposed for probing the pooled head.
  nn::Var features(const nn::Var& x) const;
  nn::Var head(const nn::Var& pooled) const;
  void collect(const std::string& prefix, nn::ParamList& out) const;

 private:
  std::vector<nn::Conv2d> convs_;
  nn::Linear fc_;
};

/// Transposed 3x3 stride-2 conv (2x up) then a 4x4 stride-2 conv back down.
class DomainMapper {
 public:
  DomainMapper() = default;
  DomainMapper(const NetConfig& cfg, nn::Rng& rng);

  nn::Var operator()(const nn::Var& c) const;
  void collect(const std::string& prefix, nn::ParamList& out) const;

  nn::ConvTranspose2d& up() { return up_; }
  nn::Conv2d& down() { return down_; }

 private:
  nn::ConvTranspose2d up_;
  nn::Conv2d down_;
};

/// Four AdaIN residual blocks, two upsample + 5x5 conv + layer-norm stages,
/// a 7x7 conv to RGB and tanh. A three-layer MLP turns the style code into
/// per-block AdaIN (mean, std) pairs.
class Generator {
 public:
  static constexpr int kBlocks = 4;

  Generator() = default;
  Generator(const NetConfig& cfg, nn::Rng& rng);

  /// Output in [-1, 1].
  nn::Var operator()(const nn::Var& z, const nn::Var& style) const;
  void collect(const std::string& prefix, nn::ParamList& out) const;

 private:
  int channels_ = 0;
  std::vector<ResBlock> blocks_;
  nn::Linear mlp1_;
  nn::Linear mlp2_;
  nn::Linear mlp3_;
  nn::Conv2d up1_;
  nn::Conv2d up2_;
  nn::LayerNorm2d ln1_;
  nn::LayerNorm2d ln2_;
  nn::Conv2d out_;
};

/// Per scale: c4s2-b, c4s2-2b, c4s2-4b, c4s2-8b (leaky ReLU), 1x1 score head.
/// Scale k sees the input average-pooled k-1 times.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const NetConfig& cfg, nn::Rng& rng);

  std::vector<nn::Var> operator()(const nn::Var& x) const;
  void collect(const std::string& prefix, nn::ParamList& out) const;
  int scales() const { return static_cast<int>(heads_.size()); }

 private:
  std::vector<std::vector<nn::Conv2d>> bodies_;
  std::vector<nn::Conv2d> heads_;
};

struct DomainNets {
  ContentEncoder content;
  StyleEncoder style;
  DomainMapper mapper;
  Generator generator;
  Discriminator discriminator;
};

/// Both domains' networks for one branch (foreground or background) plus
/// optimizer state.
class TranslatorBundle {
 public:
  explicit TranslatorBundle(const NetConfig& cfg);
  TranslatorBundle(const TranslatorBundle&) = delete;
  TranslatorBundle& operator=(const TranslatorBundle&) = delete;
  TranslatorBundle(TranslatorBundle&&) = default;
  TranslatorBundle& operator=(TranslatorBundle&&) = default;

  const NetConfig& config() const noexcept { return config_; }
  DomainNets& nets(Domain d) { return domains_[static_cast<int>(d)]; }
  const DomainNets& nets(Domain d) const { return domains_[static_cast<int>(d)]; }
  const std::shared_ptr<ResBlock>& shared_block() const noexcept { return shared_; }

  /// Encoders, mappers, generators and the shared block.
  nn::ParamList generator_parameters() const;
  nn::ParamList discriminator_parameters() const;
  nn::ParamList parameters() const;
  std::size_t parameter_count() const;

  nn::Adam& generator_optimizer() noexcept { return gen_opt_; }
  nn::Adam& discriminator_optimizer() noexcept { return dis_opt_; }
  const nn::Adam& generator_optimizer() const noexcept { return gen_opt_; }
  const nn::Adam& discriminator_optimizer() const noexcept { return dis_opt_; }

 private:
  NetConfig config_;
  std::shared_ptr<ResBlock> shared_;
  std::vector<DomainNets> domains_;
  nn::Adam gen_opt_;
  nn::Adam dis_opt_;
};

// Inference entry points. None of them records a tape.

ContentCode encode_content(const TranslatorBundle& b, Domain d, const Image& x);
ContentCode map_domain(const TranslatorBundle& b, Domain target, const ContentCode& c);
StyleCode encode_style(const TranslatorBundle& b, Domain d, const Image& x);
Image generate(const TranslatorBundle& b, Domain d, const ContentCode& z, const StyleCode& s);
std::vector<nn::Tensor> discriminate(const TranslatorBundle& b, Domain d, const Image& x);

using StyleSource = std::variant<Image, StyleCode>;

/// G_target(M_target(E^c_source(x)), s) where s is given or encoded from a
/// target-domain style image.
Image translate(const TranslatorBundle& b, const Image& x, const StyleSource& style, Direction dir);

/// Pure AdaIN on one (1, C, H, W) feature map.
nn::Tensor adain(const nn::Tensor& feat, std::span<const double> mean, std::span<const double> std);

StyleCode sample_style(nn::Rng& rng, int dim = 8);
/// (1 - t) a + t b, t in [0, 1].
StyleCode interpolate_style(const StyleCode& a, const StyleCode& b, double t);

nn::Var style_to_var(std::span<const StyleCode> codes);

}  // namespace archstyle
