#include "archstyle/nn/layers.hpp"

#include <cmath>

#include "archstyle/nn/ops.hpp"

namespace archstyle::nn {

namespace {

constexpr double kInitStd = 0.02;

Tensor normal_tensor(Shape s, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t(s);
  for (float& v : t.values()) v = static_cast<float>(dist(rng));
  return t;
}

}  // namespace

Conv2d::Conv2d(int in, int out, int kernel, int stride_, int pad_, Rng& rng)
    : weight(Var::parameter(normal_tensor(Shape{out, in, kernel, kernel}, kInitStd, rng))),
      bias(Var::parameter(Tensor(Shape{out, 1, 1, 1}))),
      stride(stride_),
      pad(pad_) {}

Var Conv2d::operator()(const Var& x) const { return conv2d(x, weight, bias, stride, pad); }

void Conv2d::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

ConvTranspose2d::ConvTranspose2d(int in, int out, int kernel, int stride_, int pad_, int output_pad_,
                                 Rng& rng)
    : weight(Var::parameter(normal_tensor(Shape{in, out, kernel, kernel}, kInitStd, rng))),
      bias(Var::parameter(Tensor(Shape{out, 1, 1, 1}))),
      stride(stride_),
      pad(pad_),
      output_pad(output_pad_) {}

Var ConvTranspose2d::operator()(const Var& x) const {
  return conv_transpose2d(x, weight, bias, stride, pad, output_pad);
}

void ConvTranspose2d::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

Linear::Linear(int in, int out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor w(Shape{out, in, 1, 1});
  for (float& v : w.values()) v = static_cast<float>(dist(rng));
  Tensor b(Shape{out, 1, 1, 1});
  for (float& v : b.values()) v = static_cast<float>(dist(rng));
  weight = Var::parameter(std::move(w));
  bias = Var::parameter(std::move(b));
}

Var Linear::operator()(const Var& x) const { return linear(x, weight, bias); }

void Linear::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

LayerNorm2d::LayerNorm2d(int channels)
    : gamma(Var::parameter(Tensor(Shape{channels, 1, 1, 1}, 1.0f))),
      beta(Var::parameter(Tensor(Shape{channels, 1, 1, 1}))) {}

Var LayerNorm2d::operator()(const Var& x) const { return layer_norm(x, gamma, beta); }

void LayerNorm2d::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".gamma", gamma});
  out.push_back({prefix + ".beta", beta});
}

}  // namespace archstyle::nn
