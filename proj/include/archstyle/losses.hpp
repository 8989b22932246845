#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "archstyle/image.hpp"

namespace archstyle {

/// Generator loss weights. `lambda_z` is the domain-specific content code
/// weight (sometimes written lambda_cs) and `lambda_cycle` the cross-cycle
/// weight (lambda_cc).
struct LossWeights {
  double lambda_x = 10.0;
  double lambda_c = 2.0;
  double lambda_s = 10.0;
  double lambda_z = 2.0;
  double lambda_cycle = 5.0;
  double lambda_adv = 1.0;
  double lambda_gd = 5.0;
  double lambda_kl = 5.0;

  static LossWeights foreground();
  /// Geometry terms switched off so the branch may change texture.
  static LossWeights background();

  void validate() const;
  std::array<double, 8> as_array() const;
};

/// Direction-summed loss terms, in the fixed order of `kTermNames`.
struct LossTerms {
  double x = 0.0;
  double c = 0.0;
  double s = 0.0;
  double z = 0.0;
  double cycle = 0.0;
  double adv = 0.0;
  double gd = 0.0;
  double kl = 0.0;

  std::array<double, 8> as_array() const { return {x, c, s, z, cycle, adv, gd, kl}; }
};

inline constexpr std::array<std::string_view, 8> kTermNames = {"x", "c", "s", "z",
                                                               "cycle", "adv", "gd", "kl"};

struct LossReport {
  LossTerms terms;
  double total = 0.0;
  double discriminator = 0.0;  // filled in by the trainer, not part of `total`
};

/// A scalar loss and its gradient with respect to the first argument, laid
/// out like that argument.
struct ValueAndGrad {
  double value = 0.0;
  std::vector<double> grad;
};

/// Mean over pixels of |dY_out/dx - dY_src/dx| + |dY_out/dy - dY_src/dy| on
/// BT.601 luminance with forward differences.
ValueAndGrad gradient_loss(const Image& out, const Image& src);

/// KL(p || q) where p, q are the epsilon-shifted luminance maps of `out` and
/// `style` renormalized to sum to one over pixels.
ValueAndGrad luminance_kl_loss(const Image& out, const Image& style, double eps = 1e-6);

/// Mean absolute difference.
ValueAndGrad l1_loss(std::span<const double> a, std::span<const double> b);

/// Discriminator scores, one flattened score map per scale.
using ScoreSet = std::vector<std::vector<double>>;

struct ScoreLoss {
  double value = 0.0;
  ScoreSet grad_real;  // empty for the generator loss
  ScoreSet grad_fake;
};

/// Mean over scales of mean(0.5 (D(real) - 1)^2) + mean(0.5 D(fake)^2).
ScoreLoss lsgan_d_loss(const ScoreSet& real, const ScoreSet& fake);
/// Mean over scales of mean(0.5 (D(fake) - 1)^2).
ScoreLoss lsgan_g_loss(const ScoreSet& fake);

/// Weighted total. Throws NonFiniteLossError naming the first bad term.
LossReport total_generator_loss(const LossTerms& terms, const LossWeights& w);

}  // namespace archstyle
