#pragma once

#include <random>
#include <string>
#include <vector>

#include "archstyle/nn/autograd.hpp"

namespace archstyle::nn {

using Rng = std::mt19937_64;

struct NamedParam {
  std::string name;
  Var var;
};
using ParamList = std::vector<NamedParam>;

/// k x k convolution, weights drawn from N(0, 0.02), zero bias.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in, int out, int kernel, int stride, int pad, Rng& rng);

  Var operator()(const Var& x) const;
  void collect(const std::string& prefix, ParamList& out) const;

  Var weight;
  Var bias;
  int stride = 1;
  int pad = 0;
};

/// Transposed convolution; weights (in, out, k, k) from N(0, 0.02).
class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(int in, int out, int kernel, int stride, int pad, int output_pad, Rng& rng);

  Var operator()(const Var& x) const;
  void collect(const std::string& prefix, ParamList& out) const;

  Var weight;
  Var bias;
  int stride = 1;
  int pad = 0;
  int output_pad = 0;
};

/// Fully connected layer with uniform(+-1/sqrt(in)) initialization.
class Linear {
 public:
  Linear() = default;
  Linear(int in, int out, Rng& rng);

  Var operator()(const Var& x) const;
  void collect(const std::string& prefix, ParamList& out) const;

  Var weight;
  Var bias;
};

class LayerNorm2d {
 public:
  LayerNorm2d() = default;
  explicit LayerNorm2d(int channels);

  Var operator()(const Var& x) const;
  void collect(const std::string& prefix, ParamList& out) const;

  Var gamma;
  Var beta;
};

}  // namespace archstyle::nn
