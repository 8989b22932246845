#pragma once

#include <array>
#include <string>
#include <vector>

#include "archstyle/image.hpp"

namespace archstyle {

enum class BlendSolver { kSpectral, kConjugateGradient };

BlendSolver parse_blend_solver(const std::string& name);
std::string to_string(BlendSolver s);

struct BlendParams {
  double beta = 1.0;
  /// Full coarse-to-fine sweeps.
  int iterations = 2;
  BlendSolver solver = BlendSolver::kSpectral;
  double cg_tol = 1e-6;
  int cg_max_iter = 2000;
  /// Upper bound on pyramid depth; levels stop before a side drops below 16.
  int max_levels = 4;

  void validate() const;
};

/// c_style is the translated image, c_geo the untouched source.
struct BlendProblem {
  Image c_style;
  Image c_geo;
  Mask mask;
  BlendParams params;

  void validate() const;
};

using ChannelGradients = std::array<GradientField, 3>;

/// v = mask * grad(c_geo) + (1 - mask) * grad(c_style), per channel.
ChannelGradients build_constraint_gradient(const BlendProblem& p);

/// Sum over channels of |grad x - v|^2 + beta |g(x) - g(c_style)|^2.
double blend_energy(const Image& x, const BlendProblem& p);

/// (grad^T grad + beta g^T g) x, the normal-equation operator.
ScalarField apply_blend_operator(const ScalarField& x, double beta);

/// Exact solve of apply_blend_operator(x) = rhs in the cosine basis.
ScalarField solve_spectral(const ScalarField& rhs, double beta);

struct CgResult {
  ScalarField x;
  int iterations = 0;
  /// |rhs - A x| / |rhs|.
  double relative_residual = 0.0;
  bool converged = false;
};

CgResult solve_cg(const ScalarField& rhs, double beta, const ScalarField& x0, double tol, int max_iter);

struct BlendResult {
  Image image;
  /// energy(c_style) followed by the energy after each sweep (before clamping).
  std::vector<double> energy_trace;
  /// Worst relative residual over channels at the finest level of the last sweep.
  double residual = 0.0;
  bool converged = true;
};

BlendResult gp_solve(const BlendProblem& p);

BlendResult blend_pipeline(const Image& translated, const Image& source, const Mask& mask,
                           const BlendParams& params);

}  // namespace archstyle
