#include "archstyle/nn/adam.hpp"

#include <cmath>

namespace archstyle::nn {

void Adam::step(const ParamList& params, const AdamParams& hp) {
  ++steps_;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(steps_));
  const double step_size = hp.lr * std::sqrt(bc2) / bc1;
  for (const auto& p : params) {
    const Tensor& g = p.var.grad();
    if (g.empty()) continue;
    auto& mom = moments_[p.name];
    if (mom.m.empty()) {
      mom.m = Tensor(g.shape());
      mom.v = Tensor(g.shape());
    }
    Var var = p.var;
    Tensor& w = var.mutable_value();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double gi = g[i];
      const double m = hp.beta1 * mom.m[i] + (1.0 - hp.beta1) * gi;
      const double v = hp.beta2 * mom.v[i] + (1.0 - hp.beta2) * gi * gi;
      mom.m[i] = static_cast<float>(m);
      mom.v[i] = static_cast<float>(v);
      w[i] -= static_cast<float>(step_size * m / (std::sqrt(v) + hp.eps * std::sqrt(bc2)));
    }
  }
}

void zero_grad(const ParamList& params) {
  for (const auto& p : params) {
    Var var = p.var;
    var.zero_grad();
  }
}

}  // namespace archstyle::nn
