#include "archstyle/losses.hpp"

#include <cmath>
#include <string>

#include "archstyle/errors.hpp"

namespace archstyle {

namespace {

constexpr double kR = 0.299;
constexpr double kG = 0.587;
constexpr double kB = 0.114;

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Chain a per-pixel luminance gradient back onto the RGB samples.
std::vector<double> luma_grad_to_rgb(std::span<const double> dy) {
  std::vector<double> g(dy.size() * 3);
  for (std::size_t p = 0; p < dy.size(); ++p) {
    g[3 * p] = kR * dy[p];
    g[3 * p + 1] = kG * dy[p];
    g[3 * p + 2] = kB * dy[p];
  }
  return g;
}

void check_scores(const ScoreSet& s, const char* what) {
  if (s.empty()) throw ValidationError(std::string(what) + ": empty score set");
  for (const auto& scale : s) {
    if (scale.empty()) throw ValidationError(std::string(what) + ": empty score map");
    for (double v : scale) {
      if (!std::isfinite(v)) throw ValidationError(std::string(what) + ": non-finite score");
    }
  }
}

// Mean over scales of mean(0.5 (v - target)^2), with gradient.
double half_square_mean(const ScoreSet& s, double target, ScoreSet& grad) {
  const double scales = static_cast<double>(s.size());
  double total = 0.0;
  grad.resize(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double n = static_cast<double>(s[k].size());
    double acc = 0.0;
    grad[k].resize(s[k].size());
    for (std::size_t i = 0; i < s[k].size(); ++i) {
      const double d = s[k][i] - target;
      acc += 0.5 * d * d;
      grad[k][i] = d / (n * scales);
    }
    total += acc / n;
  }
  return total / scales;
}

}  // namespace

LossWeights LossWeights::foreground() { return LossWeights{}; }

LossWeights LossWeights::background() {
  LossWeights w;
  w.lambda_gd = 0.0;
  w.lambda_kl = 0.0;
  return w;
}

std::array<double, 8> LossWeights::as_array() const {
  return {lambda_x, lambda_c, lambda_s, lambda_z, lambda_cycle, lambda_adv, lambda_gd, lambda_kl};
}

void LossWeights::validate() const {
  const auto values = as_array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw ValidationError("lambda_" + std::string(kTermNames[i]) + " must be finite and >= 0");
    }
  }
}

ValueAndGrad gradient_loss(const Image& out, const Image& src) {
  require_same_dims(out.dims(), src.dims(), "gradient_loss");
  const auto go = spatial_gradient(rgb_to_luma(out));
  const auto gs = spatial_gradient(rgb_to_luma(src));
  const int w = out.width();
  const int h = out.height();
  const double n = static_cast<double>(out.pixel_count());

  double acc = 0.0;
  std::vector<double> dy(out.pixel_count(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double ex = go.gx[i] - gs.gx[i];
      const double ey = go.gy[i] - gs.gy[i];
      acc += std::abs(ex) + std::abs(ey);
      // d|gx[i]|/dY: gx[i] = Y[i+1] - Y[i] (zero on the last column).
      if (x + 1 < w) {
        const double s = sign(ex) / n;
        dy[i + 1] += s;
        dy[i] -= s;
      }
      if (y + 1 < h) {
        const double s = sign(ey) / n;
        dy[i + w] += s;
        dy[i] -= s;
      }
    }
  }
  return {acc / n, luma_grad_to_rgb(dy)};
}

ValueAndGrad luminance_kl_loss(const Image& out, const Image& style, double eps) {
  require_same_dims(out.dims(), style.dims(), "luminance_kl_loss");
  const auto yo = rgb_to_luma(out);
  const auto ys = rgb_to_luma(style);
  const auto a = yo.data();
  const auto b = ys.data();

  double sum_p = 0.0;
  double sum_q = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double pa = a[i] + eps;
    const double qb = b[i] + eps;
    if (!(pa > 0.0) || !(qb > 0.0)) {
      throw ValidationError("luminance_kl_loss: luminance must be positive after epsilon shift");
    }
    sum_p += pa;
    sum_q += qb;
  }

  std::vector<double> log_ratio(a.size());
  double kl = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double p = (a[i] + eps) / sum_p;
    const double q = (b[i] + eps) / sum_q;
    log_ratio[i] = std::log(p / q);
    kl += p * log_ratio[i];
  }

  // dKL/dY_i = (log(p_i / q_i) - KL) / sum_p
  std::vector<double> dy(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) dy[i] = (log_ratio[i] - kl) / sum_p;
  return {kl, luma_grad_to_rgb(dy)};
}

ValueAndGrad l1_loss(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("l1_loss: shape mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw ValidationError("l1_loss: empty operands");
  const double n = static_cast<double>(a.size());
  double acc = 0.0;
  std::vector<double> grad(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += std::abs(d);
    grad[i] = sign(d) / n;
  }
  return {acc / n, std::move(grad)};
}

ScoreLoss lsgan_d_loss(const ScoreSet& real, const ScoreSet& fake) {
  check_scores(real, "lsgan_d_loss");
  check_scores(fake, "lsgan_d_loss");
  ScoreLoss out;
  out.value = half_square_mean(real, 1.0, out.grad_real) + half_square_mean(fake, 0.0, out.grad_fake);
  return out;
}

ScoreLoss lsgan_g_loss(const ScoreSet& fake) {
  check_scores(fake, "lsgan_g_loss");
  ScoreLoss out;
  out.value = half_square_mean(fake, 1.0, out.grad_fake);
  return out;
}

LossReport total_generator_loss(const LossTerms& terms, const LossWeights& w) {
  w.validate();
  const auto t = terms.as_array();
  const auto l = w.as_array();
  LossReport report{terms, 0.0};
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) {
      throw NonFiniteLossError(std::string(kTermNames[i]),
                               "loss term '" + std::string(kTermNames[i]) + "' is not finite");
    }
    report.total += l[i] * t[i];
  }
  return report;
}

}  // namespace archstyle
