#include "archstyle/blending.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "archstyle/errors.hpp"

namespace archstyle {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

GradientField mixed_gradient(const ScalarField& geo, const ScalarField& style, const Mask& m) {
  GradientField g = spatial_gradient(geo);
  const GradientField s = spatial_gradient(style);
  const auto a = m.data();
  for (std::size_t i = 0; i < g.gx.size(); ++i) {
    g.gx[i] = a[i] * g.gx[i] + (1.0 - a[i]) * s.gx[i];
    g.gy[i] = a[i] * g.gy[i] + (1.0 - a[i]) * s.gy[i];
  }
  return g;
}

double channel_energy(const ScalarField& x, const GradientField& v, const ScalarField& style_low, double beta) {
  const GradientField g = spatial_gradient(x);
  double e = 0.0;
  for (std::size_t i = 0; i < g.gx.size(); ++i) {
    const double dx = g.gx[i] - v.gx[i];
    const double dy = g.gy[i] - v.gy[i];
    e += dx * dx + dy * dy;
  }
  const ScalarField low = gaussian_blur5(x);
  const auto l = low.data();
  const auto s = style_low.data();
  double f = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) f += (l[i] - s[i]) * (l[i] - s[i]);
  return e + beta * f;
}

/// One pyramid level with per-channel data precomputed.
struct Level {
  Dims dims;
  std::array<ScalarField, 3> style;
  std::array<ScalarField, 3> style_low;
  ChannelGradients v;
  std::array<ScalarField, 3> rhs;
  double beta = 1.0;

  double energy(int c, const ScalarField& x) const { return channel_energy(x, v[c], style_low[c], beta); }
};

Level make_level(const Image& style, const Image& geo, const Mask& mask, double beta) {
  Level lv;
  lv.dims = style.dims();
  lv.beta = beta;
  for (int c = 0; c < 3; ++c) {
    lv.style[c] = extract_channel(style, c);
    lv.style_low[c] = gaussian_blur5(lv.style[c]);
    lv.v[c] = mixed_gradient(extract_channel(geo, c), lv.style[c], mask);
    ScalarField b = divergence(lv.v[c]);
    const ScalarField gg = gaussian_blur5(lv.style_low[c]);
    auto bd = b.data();
    const auto gd = gg.data();
    for (std::size_t i = 0; i < bd.size(); ++i) bd[i] = -bd[i] + beta * gd[i];
    lv.rhs[c] = std::move(b);
  }
  return lv;
}

std::vector<Level> build_pyramid(const BlendProblem& p) {
  std::vector<Level> levels;
  Image style = p.c_style;
  Image geo = p.c_geo;
  Mask mask = p.mask;
  levels.push_back(make_level(style, geo, mask, p.params.beta));
  while (static_cast<int>(levels.size()) < p.params.max_levels &&
         std::min(style.width(), style.height()) >= 32) {
    style = pyramid_down(style);
    geo = pyramid_down(geo);
    mask = pyramid_down(mask);
    levels.push_back(make_level(style, geo, mask, p.params.beta));
  }
  return levels;
}

struct Solved {
  ScalarField x;
  double residual = 0.0;
  bool converged = true;
};

double relative_residual(const ScalarField& x, const ScalarField& rhs, double beta) {
  const ScalarField ax = apply_blend_operator(x, beta);
  const auto a = ax.data();
  const auto b = rhs.data();
  double r2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r2 += (b[i] - a[i]) * (b[i] - a[i]);
  const double bn = norm(b);
  return std::sqrt(r2) / (bn > 0.0 ? bn : 1.0);
}

Solved solve_level(const Level& lv, int c, const ScalarField& start, const BlendParams& params) {
  if (params.solver == BlendSolver::kSpectral) {
    ScalarField x = solve_spectral(lv.rhs[c], lv.beta);
    const double r = relative_residual(x, lv.rhs[c], lv.beta);
    return {std::move(x), r, r <= params.cg_tol};
  }
  CgResult cg = solve_cg(lv.rhs[c], lv.beta, start, params.cg_tol, params.cg_max_iter);
  return {std::move(cg.x), cg.relative_residual, cg.converged};
}

}  // namespace

BlendSolver parse_blend_solver(const std::string& name) {
  if (name == "spectral") return BlendSolver::kSpectral;
  if (name == "cg") return BlendSolver::kConjugateGradient;
  throw ValidationError("unknown blend solver '" + name + "' (expected spectral or cg)");
}

std::string to_string(BlendSolver s) { return s == BlendSolver::kSpectral ? "spectral" : "cg"; }

void BlendParams::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("blend beta must be positive");
  if (iterations < 1) throw ValidationError("blend iterations must be >= 1");
  if (!(cg_tol > 0.0)) throw ValidationError("cg_tol must be positive");
  if (cg_max_iter < 1) throw ValidationError("cg_max_iter must be >= 1");
  if (max_levels < 1) throw ValidationError("blend max_levels must be >= 1");
}

void BlendProblem::validate() const {
  params.validate();
  require_same_dims(c_style.dims(), c_geo.dims(), "blend problem");
  require_same_dims(c_style.dims(), mask.dims(), "blend problem");
  if (c_style.empty()) throw ValidationError("blend problem: empty image");
}

ChannelGradients build_constraint_gradient(const BlendProblem& p) {
  p.validate();
  ChannelGradients out;
  for (int c = 0; c < 3; ++c) {
    out[c] = mixed_gradient(extract_channel(p.c_geo, c), extract_channel(p.c_style, c), p.mask);
  }
  return out;
}

double blend_energy(const Image& x, const BlendProblem& p) {
  require_same_dims(x.dims(), p.c_style.dims(), "blend_energy");
  const ChannelGradients v = build_constraint_gradient(p);
  double e = 0.0;
  for (int c = 0; c < 3; ++c) {
    e += channel_energy(extract_channel(x, c), v[c], gaussian_blur5(extract_channel(p.c_style, c)),
                        p.params.beta);
  }
  return e;
}

ScalarField apply_blend_operator(const ScalarField& x, double beta) {
  ScalarField out = divergence(spatial_gradient(x));
  const ScalarField gg = gaussian_blur5(gaussian_blur5(x));
  auto o = out.data();
  const auto g = gg.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = -o[i] + beta * g[i];
  return out;
}

ScalarField solve_spectral(const ScalarField& rhs, double beta) {
  const int w = rhs.width();
  const int h = rhs.height();
  std::vector<double> buf(rhs.data().begin(), rhs.data().end());
  std::vector<double> coef(buf.size());

  fftw_plan fwd = fftw_plan_r2r_2d(h, w, buf.data(), coef.data(), FFTW_REDFT10, FFTW_REDFT10, FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);

  auto lap = [](int k, int n) { return 2.0 - 2.0 * std::cos(std::numbers::pi * k / n); };
  auto low = [](int k, int n) {
    const double t = std::numbers::pi * k / n;
    return (6.0 + 8.0 * std::cos(t) + 2.0 * std::cos(2.0 * t)) / 16.0;
  };
  for (int ky = 0; ky < h; ++ky) {
    for (int kx = 0; kx < w; ++kx) {
      const double g = low(kx, w) * low(ky, h);
      coef[static_cast<std::size_t>(ky) * w + kx] /= lap(kx, w) + lap(ky, h) + beta * g * g;
    }
  }

  fftw_plan inv = fftw_plan_r2r_2d(h, w, coef.data(), buf.data(), FFTW_REDFT01, FFTW_REDFT01, FFTW_ESTIMATE);
  fftw_execute(inv);
  fftw_destroy_plan(inv);

  const double scale = 1.0 / (4.0 * w * h);
  for (double& v : buf) v *= scale;
  return ScalarField(w, h, std::move(buf));
}

CgResult solve_cg(const ScalarField& rhs, double beta, const ScalarField& x0, double tol, int max_iter) {
  require_same_dims(rhs.dims(), x0.dims(), "solve_cg");
  CgResult res;
  res.x = x0;
  auto x = res.x.data();
  const auto b = rhs.data();
  const double bn = norm(b) > 0.0 ? norm(b) : 1.0;

  const ScalarField ax = apply_blend_operator(res.x, beta);
  std::vector<double> r(b.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - ax.data()[i];
  ScalarField p(rhs.width(), rhs.height(), r);
  double rr = dot(r, r);

  while (std::sqrt(rr) / bn > tol && res.iterations < max_iter) {
    const ScalarField ap = apply_blend_operator(p, beta);
    const auto pd = p.data();
    const auto apd = ap.data();
    const double alpha = rr / dot(pd, apd);
    for (std::size_t i = 0; i < r.size(); ++i) {
      x[i] += alpha * pd[i];
      r[i] -= alpha * apd[i];
    }
    const double rr_new = dot(r, r);
    const double gamma = rr_new / rr;
    for (std::size_t i = 0; i < r.size(); ++i) pd[i] = r[i] + gamma * pd[i];
    rr = rr_new;
    ++res.iterations;
  }
  res.relative_residual = relative_residual(res.x, rhs, beta);
  res.converged = res.relative_residual <= tol;
  return res;
}

BlendResult gp_solve(const BlendProblem& p) {
  p.validate();
  const std::vector<Level> levels = build_pyramid(p);
  const Level& finest = levels.front();
  const int coarsest = static_cast<int>(levels.size()) - 1;

  BlendResult out;
  std::array<ScalarField, 3> x = finest.style;
  double total = 0.0;
  for (int c = 0; c < 3; ++c) total += finest.energy(c, x[c]);
  out.energy_trace.push_back(total);

  for (int sweep = 0; sweep < p.params.iterations; ++sweep) {
    out.residual = 0.0;
    out.converged = true;
    total = 0.0;
    for (int c = 0; c < 3; ++c) {
      ScalarField est = x[c];
      for (int l = 0; l < coarsest; ++l) est = pyramid_down(est);
      for (int l = coarsest; l >= 0; --l) {
        const Level& lv = levels[l];
        ScalarField start = l == coarsest ? est : pyramid_up(est, lv.dims);
        if (l == 0 && lv.energy(c, x[c]) < lv.energy(c, start)) start = x[c];
        Solved s = solve_level(lv, c, start, p.params);
        est = std::move(s.x);
        if (l == 0) {
          out.residual = std::max(out.residual, s.residual);
          out.converged = out.converged && s.converged;
        }
      }
      if (finest.energy(c, est) <= finest.energy(c, x[c])) x[c] = std::move(est);
      total += finest.energy(c, x[c]);
    }
    out.energy_trace.push_back(total);
  }

  out.image = Image(finest.dims.width, finest.dims.height);
  for (int c = 0; c < 3; ++c) insert_channel(out.image, c, x[c]);
  out.image = clamp_unit(out.image);
  return out;
}

BlendResult blend_pipeline(const Image& translated, const Image& source, const Mask& mask,
                           const BlendParams& params) {
  return gp_solve(BlendProblem{translated, source, mask, params});
}

}  // namespace archstyle
