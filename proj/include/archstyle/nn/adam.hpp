#pragma once

#include <map>
#include <string>

#include "archstyle/nn/layers.hpp"

namespace archstyle::nn {

struct AdamParams {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam moments keyed by parameter name, so the state survives a
/// checkpoint round trip independent of parameter order.
class Adam {
 public:
  struct Moments {
    Tensor m;
    Tensor v;
  };

  /// Applies one update to every parameter that received a gradient.
  void step(const ParamList& params, const AdamParams& hp);

  long steps() const noexcept { return steps_; }
  void set_steps(long s) noexcept { steps_ = s; }
  std::map<std::string, Moments>& moments() noexcept { return moments_; }
  const std::map<std::string, Moments>& moments() const noexcept { return moments_; }

 private:
  long steps_ = 0;
  std::map<std::string, Moments> moments_;
};

void zero_grad(const ParamList& params);

}  // namespace archstyle::nn
