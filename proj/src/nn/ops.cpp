#include "archstyle/nn/ops.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>

#include "archstyle/errors.hpp"

namespace archstyle::nn {

void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
  cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans,
              m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

namespace {

struct ConvGeom {
  int channels, height, width;  // image side
  int kernel, stride, pad;
  int out_h, out_w;             // column side
  int rows() const { return channels * kernel * kernel; }
  int cols() const { return out_h * out_w; }
};

// col (C*k*k, rows*out_w) gathered from img (C, H, W) for output rows [oy0, oy1).
void im2col(const float* img, const ConvGeom& g, float* col, int oy0, int oy1) {
  const int k = g.kernel;
  const std::size_t band = static_cast<std::size_t>(oy1 - oy0) * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        float* row = col + static_cast<std::size_t>((c * k + ky) * k + kx) * band;
        for (int oy = oy0; oy < oy1; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          float* dst = row + static_cast<std::size_t>(oy - oy0) * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.out_w, 0.0f);
            continue;
          }
          const float* src = img + (static_cast<std::size_t>(c) * g.height + iy) * g.width;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < g.width) ? src[ix] : 0.0f;
          }
        }
      }
    }
  }
}

void im2col(const float* img, const ConvGeom& g, float* col) { im2col(img, g, col, 0, g.out_h); }

// Adjoint of im2col: scatter-add col back into img.
void col2im(const float* col, const ConvGeom& g, float* img) {
  const int k = g.kernel;
  for (int c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* row = col + static_cast<std::size_t>((c * k + ky) * k + kx) * g.cols();
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.height) continue;
          const float* src = row + static_cast<std::size_t>(oy) * g.out_w;
          float* dst = img + (static_cast<std::size_t>(c) * g.height + iy) * g.width;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void add_bias(Tensor& out, const Tensor& bias) {
  const Shape& s = out.shape();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      float* p = out.data() + (static_cast<std::size_t>(n) * s.c + c) * s.spatial();
      const float b = bias[c];
      for (std::size_t i = 0; i < s.spatial(); ++i) p[i] += b;
    }
  }
}

void accumulate_bias_grad(const Tensor& grad_out, Tensor& grad_bias) {
  const Shape& s = grad_out.shape();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* p = grad_out.data() + (static_cast<std::size_t>(n) * s.c + c) * s.spatial();
      double acc = 0.0;
      for (std::size_t i = 0; i < s.spatial(); ++i) acc += p[i];
      grad_bias[c] += static_cast<float>(acc);
    }
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

template <class F>
Var unary(const Var& x, F f, std::function<void(Node&)> bw) {
  Tensor out(x.shape());
  const auto in = x.value().values();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return make_result(std::move(out), {x}, std::move(bw));
}

}  // namespace

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  require(ws.c == xs.c && ws.h == ws.w,
          "conv2d: weight " + to_string(ws) + " does not fit input " + to_string(xs));
  const int k = ws.h;
  const int out_h = (xs.h + 2 * pad - k) / stride + 1;
  const int out_w = (xs.w + 2 * pad - k) / stride + 1;
  require(out_h >= 1 && out_w >= 1, "conv2d: input " + to_string(xs) + " too small for kernel");
  const ConvGeom g{xs.c, xs.h, xs.w, k, stride, pad, out_h, out_w};
  const int cout = ws.n;

  Tensor out(Shape{xs.n, cout, out_h, out_w});
  // Bands of output rows keep the column buffer near 16 MB.
  const int band = std::clamp((1 << 22) / std::max(1, g.rows() * out_w), 1, out_h);
  std::vector<float> col(static_cast<std::size_t>(g.rows()) * band * out_w);
  for (int n = 0; n < xs.n; ++n) {
    for (int oy0 = 0; oy0 < out_h; oy0 += band) {
      const int oy1 = std::min(out_h, oy0 + band);
      const int cols = (oy1 - oy0) * out_w;
      im2col(x.value().data() + n * xs.sample_size(), g, col.data(), oy0, oy1);
      gemm(false, false, cout, cols, g.rows(), 1.0f, weight.value().data(), g.rows(), col.data(), cols, 0.0f,
           out.data() + n * out.shape().sample_size() + static_cast<std::size_t>(oy0) * out_w, g.cols());
    }
  }
  if (bias.defined()) add_bias(out, bias.value());

  std::vector<Var> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(std::move(out), std::move(inputs), [g, cout](Node& self) {
    Node& xin = *self.inputs[0];
    Node& win = *self.inputs[1];
    const int batch = xin.value.shape().n;
    const std::size_t in_sample = xin.value.shape().sample_size();
    const std::size_t out_sample = self.value.shape().sample_size();
    std::vector<float> col(static_cast<std::size_t>(g.rows()) * g.cols());
    for (int n = 0; n < batch; ++n) {
      const float* dy = self.grad.data() + n * out_sample;
      if (win.requires_grad) {
        im2col(xin.value.data() + n * in_sample, g, col.data());
        gemm(false, true, cout, g.rows(), g.cols(), 1.0f, dy, g.cols(), col.data(), g.cols(), 1.0f,
             win.grad_buffer().data(), g.rows());
      }
      if (xin.requires_grad) {
        gemm(true, false, g.rows(), g.cols(), cout, 1.0f, win.value.data(), g.rows(), dy, g.cols(),
             0.0f, col.data(), g.cols());
        col2im(col.data(), g, xin.grad_buffer().data() + n * in_sample);
      }
    }
    if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
      accumulate_bias_grad(self.grad, self.inputs[2]->grad_buffer());
    }
  });
}

Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad,
                     int output_pad) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  require(ws.n == xs.c && ws.h == ws.w,
          "conv_transpose2d: weight " + to_string(ws) + " does not fit input " + to_string(xs));
  require(output_pad >= 0 && output_pad < stride, "conv_transpose2d: output_pad must be < stride");
  const int k = ws.h;
  const int cout = ws.c;
  const int out_h = (xs.h - 1) * stride - 2 * pad + k + output_pad;
  const int out_w = (xs.w - 1) * stride - 2 * pad + k + output_pad;
  require(out_h >= 1 && out_w >= 1, "conv_transpose2d: degenerate output");
  // The column side of the geometry is the input grid.
  const ConvGeom g{cout, out_h, out_w, k, stride, pad, xs.h, xs.w};
  const int cin = xs.c;

  Tensor out(Shape{xs.n, cout, out_h, out_w});
  std::vector<float> col(static_cast<std::size_t>(g.rows()) * g.cols());
  for (int n = 0; n < xs.n; ++n) {
    gemm(true, false, g.rows(), g.cols(), cin, 1.0f, weight.value().data(), g.rows(),
         x.value().data() + n * xs.sample_size(), g.cols(), 0.0f, col.data(), g.cols());
    col2im(col.data(), g, out.data() + n * out.shape().sample_size());
  }
  if (bias.defined()) add_bias(out, bias.value());

  std::vector<Var> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(std::move(out), std::move(inputs), [g, cin](Node& self) {
    Node& xin = *self.inputs[0];
    Node& win = *self.inputs[1];
    const int batch = xin.value.shape().n;
    const std::size_t in_sample = xin.value.shape().sample_size();
    const std::size_t out_sample = self.value.shape().sample_size();
    std::vector<float> col(static_cast<std::size_t>(g.rows()) * g.cols());
    for (int n = 0; n < batch; ++n) {
      im2col(self.grad.data() + n * out_sample, g, col.data());
      if (xin.requires_grad) {
        gemm(false, false, cin, g.cols(), g.rows(), 1.0f, win.value.data(), g.rows(), col.data(),
             g.cols(), 1.0f, xin.grad_buffer().data() + n * in_sample, g.cols());
      }
      if (win.requires_grad) {
        gemm(false, true, cin, g.rows(), g.cols(), 1.0f, xin.value.data() + n * in_sample, g.cols(),
             col.data(), g.cols(), 1.0f, win.grad_buffer().data(), g.rows());
      }
    }
    if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
      accumulate_bias_grad(self.grad, self.inputs[2]->grad_buffer());
    }
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  const Shape xs = x.shape();
  const int in = static_cast<int>(xs.sample_size());
  const int outf = weight.shape().n;
  require(static_cast<int>(weight.shape().sample_size()) == in,
          "linear: weight " + to_string(weight.shape()) + " does not fit input " + to_string(xs));
  Tensor out(Shape{xs.n, outf, 1, 1});
  gemm(false, true, xs.n, outf, in, 1.0f, x.value().data(), in, weight.value().data(), in, 0.0f,
       out.data(), outf);
  if (bias.defined()) add_bias(out, bias.value());

  std::vector<Var> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(std::move(out), std::move(inputs), [in, outf](Node& self) {
    Node& xin = *self.inputs[0];
    Node& win = *self.inputs[1];
    const int batch = xin.value.shape().n;
    if (xin.requires_grad) {
      gemm(false, false, batch, in, outf, 1.0f, self.grad.data(), outf, win.value.data(), in, 1.0f,
           xin.grad_buffer().data(), in);
    }
    if (win.requires_grad) {
      gemm(true, false, outf, in, batch, 1.0f, self.grad.data(), outf, xin.value.data(), in, 1.0f,
           win.grad_buffer().data(), in);
    }
    if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
      accumulate_bias_grad(self.grad, self.inputs[2]->grad_buffer());
    }
  });
}

namespace {

// Normalized values and per-group inverse std for groups of `group` floats.
struct Normalized {
  std::vector<float> xhat;
  std::vector<float> inv_std;
  std::vector<bool> floored;
};

Normalized normalize_groups(const Tensor& x, std::size_t group, float eps, bool floor_std) {
  const std::size_t groups = x.size() / group;
  Normalized r{std::vector<float>(x.size()), std::vector<float>(groups), std::vector<bool>(groups)};
  for (std::size_t gi = 0; gi < groups; ++gi) {
    const float* p = x.data() + gi * group;
    double mean = 0.0;
    for (std::size_t i = 0; i < group; ++i) mean += p[i];
    mean /= static_cast<double>(group);
    double var = 0.0;
    for (std::size_t i = 0; i < group; ++i) {
      const double d = p[i] - mean;
      var += d * d;
    }
    var /= static_cast<double>(group);
    double sd;
    if (floor_std) {
      sd = std::sqrt(var);
      r.floored[gi] = sd < eps;
      sd = std::max(sd, static_cast<double>(eps));
    } else {
      sd = std::sqrt(var + eps);
    }
    const double inv = 1.0 / sd;
    r.inv_std[gi] = static_cast<float>(inv);
    for (std::size_t i = 0; i < group; ++i) r.xhat[gi * group + i] = static_cast<float>((p[i] - mean) * inv);
  }
  return r;
}

// dx for xhat = (x - mean) * inv_std given dxhat, group-wise.
void normalize_backward(const std::vector<float>& dxhat, const Normalized& nz, std::size_t group,
                        float* dx) {
  const std::size_t groups = nz.inv_std.size();
  for (std::size_t gi = 0; gi < groups; ++gi) {
    const float* dh = dxhat.data() + gi * group;
    const float* xh = nz.xhat.data() + gi * group;
    double mean_dh = 0.0;
    double mean_dh_xh = 0.0;
    for (std::size_t i = 0; i < group; ++i) {
      mean_dh += dh[i];
      mean_dh_xh += static_cast<double>(dh[i]) * xh[i];
    }
    mean_dh /= static_cast<double>(group);
    mean_dh_xh /= static_cast<double>(group);
    if (nz.floored[gi]) mean_dh_xh = 0.0;  // std held constant at the floor
    const double inv = nz.inv_std[gi];
    for (std::size_t i = 0; i < group; ++i) {
      dx[gi * group + i] += static_cast<float>(inv * (dh[i] - mean_dh - xh[i] * mean_dh_xh));
    }
  }
}

}  // namespace

Var instance_norm(const Var& x, float eps) {
  const std::size_t group = x.shape().spatial();
  auto nz = std::make_shared<Normalized>(normalize_groups(x.value(), group, eps, false));
  Tensor out(x.shape(), nz->xhat);
  return make_result(std::move(out), {x}, [nz, group](Node& self) {
    Node& xin = *self.inputs[0];
    if (!xin.requires_grad) return;
    normalize_backward(std::vector<float>(self.grad.values().begin(), self.grad.values().end()), *nz,
                       group, xin.grad_buffer().data());
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, float eps) {
  const Shape s = x.shape();
  require(static_cast<int>(gamma.value().size()) == s.c && static_cast<int>(beta.value().size()) == s.c,
          "layer_norm: affine parameters do not match channel count");
  const std::size_t group = s.sample_size();
  auto nz = std::make_shared<Normalized>(normalize_groups(x.value(), group, eps, false));
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * s.spatial();
      for (std::size_t i = 0; i < s.spatial(); ++i) {
        out[base + i] = gamma.value()[c] * nz->xhat[base + i] + beta.value()[c];
      }
    }
  }
  return make_result(std::move(out), {x, gamma, beta}, [nz, group](Node& self) {
    Node& xin = *self.inputs[0];
    Node& gin = *self.inputs[1];
    Node& bin = *self.inputs[2];
    const Shape s = self.value.shape();
    std::vector<float> dxhat(self.grad.size());
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * s.spatial();
        double dg = 0.0;
        double db = 0.0;
        for (std::size_t i = 0; i < s.spatial(); ++i) {
          const float dy = self.grad[base + i];
          dg += static_cast<double>(dy) * nz->xhat[base + i];
          db += dy;
          dxhat[base + i] = dy * gin.value[c];
        }
        if (gin.requires_grad) gin.grad_buffer()[c] += static_cast<float>(dg);
        if (bin.requires_grad) bin.grad_buffer()[c] += static_cast<float>(db);
      }
    }
    if (xin.requires_grad) normalize_backward(dxhat, *nz, group, xin.grad_buffer().data());
  });
}

Var adain(const Var& x, const Var& mean, const Var& std, float std_floor) {
  const Shape s = x.shape();
  const Shape target{s.n, s.c, 1, 1};
  require(mean.shape() == target && std.shape() == target,
          "adain: target statistics must be " + to_string(target));
  for (float v : std.value().values()) {
    if (!(v > 0.0f)) throw ValidationError("adain: target std must be positive");
  }
  const std::size_t group = s.spatial();
  auto nz = std::make_shared<Normalized>(normalize_groups(x.value(), group, std_floor, true));
  Tensor out(s);
  for (std::size_t gi = 0; gi < nz->inv_std.size(); ++gi) {
    for (std::size_t i = 0; i < group; ++i) {
      out[gi * group + i] = std.value()[gi] * nz->xhat[gi * group + i] + mean.value()[gi];
    }
  }
  return make_result(std::move(out), {x, mean, std}, [nz, group](Node& self) {
    Node& xin = *self.inputs[0];
    Node& min = *self.inputs[1];
    Node& sin = *self.inputs[2];
    std::vector<float> dxhat(self.grad.size());
    for (std::size_t gi = 0; gi < nz->inv_std.size(); ++gi) {
      double dm = 0.0;
      double ds = 0.0;
      for (std::size_t i = 0; i < group; ++i) {
        const float dy = self.grad[gi * group + i];
        dm += dy;
        ds += static_cast<double>(dy) * nz->xhat[gi * group + i];
        dxhat[gi * group + i] = dy * sin.value[gi];
      }
      if (min.requires_grad) min.grad_buffer()[gi] += static_cast<float>(dm);
      if (sin.requires_grad) sin.grad_buffer()[gi] += static_cast<float>(ds);
    }
    if (xin.requires_grad) normalize_backward(dxhat, *nz, group, xin.grad_buffer().data());
  });
}

Var relu(const Var& x) {
  return unary(x, [](float v) { return v > 0.0f ? v : 0.0f; }, [](Node& self) {
    Node& xin = *self.inputs[0];
    Tensor& g = xin.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xin.value[i] > 0.0f) g[i] += self.grad[i];
    }
  });
}

Var leaky_relu(const Var& x, float slope) {
  return unary(x, [slope](float v) { return v > 0.0f ? v : slope * v; }, [slope](Node& self) {
    Node& xin = *self.inputs[0];
    Tensor& g = xin.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += xin.value[i] > 0.0f ? self.grad[i] : slope * self.grad[i];
    }
  });
}

Var tanh(const Var& x) {
  return unary(x, [](float v) { return std::tanh(v); }, [](Node& self) {
    Tensor& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const float y = self.value[i];
      g[i] += self.grad[i] * (1.0f - y * y);
    }
  });
}

Var softplus(const Var& x) {
  return unary(x, [](float v) { return v > 20.0f ? v : std::log1p(std::exp(v)); }, [](Node& self) {
    Node& xin = *self.inputs[0];
    Tensor& g = xin.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] / (1.0f + std::exp(-xin.value[i]));
    }
  });
}

Var add(const Var& a, const Var& b) {
  require(a.shape() == b.shape(), "add: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      Tensor& g = in->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Var affine(const Var& x, float scale, float shift) {
  return unary(x, [scale, shift](float v) { return scale * v + shift; }, [scale](Node& self) {
    Tensor& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * self.grad[i];
  });
}

Var upsample_nearest2x(const Var& x) {
  const Shape s = x.shape();
  Tensor out(Shape{s.n, s.c, 2 * s.h, 2 * s.w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < 2 * s.h; ++y) {
        for (int xx = 0; xx < 2 * s.w; ++xx) out.at(n, c, y, xx) = x.value().at(n, c, y / 2, xx / 2);
      }
    }
  }
  return make_result(std::move(out), {x}, [](Node& self) {
    Tensor& g = self.inputs[0]->grad_buffer();
    const Shape s = g.shape();
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        for (int y = 0; y < 2 * s.h; ++y) {
          for (int xx = 0; xx < 2 * s.w; ++xx) g.at(n, c, y / 2, xx / 2) += self.grad.at(n, c, y, xx);
        }
      }
    }
  });
}

Var avg_pool2x(const Var& x) {
  const Shape s = x.shape();
  require(s.h % 2 == 0 && s.w % 2 == 0, "avg_pool2x: dims must be even, got " + to_string(s));
  Tensor out(Shape{s.n, s.c, s.h / 2, s.w / 2});
  const Tensor& v = x.value();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < s.h / 2; ++y) {
        for (int xx = 0; xx < s.w / 2; ++xx) {
          out.at(n, c, y, xx) = 0.25f * (v.at(n, c, 2 * y, 2 * xx) + v.at(n, c, 2 * y, 2 * xx + 1) +
                                         v.at(n, c, 2 * y + 1, 2 * xx) + v.at(n, c, 2 * y + 1, 2 * xx + 1));
        }
      }
    }
  }
  return make_result(std::move(out), {x}, [](Node& self) {
    Tensor& g = self.inputs[0]->grad_buffer();
    const Shape s = self.value.shape();
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        for (int y = 0; y < s.h; ++y) {
          for (int xx = 0; xx < s.w; ++xx) {
            const float d = 0.25f * self.grad.at(n, c, y, xx);
            g.at(n, c, 2 * y, 2 * xx) += d;
            g.at(n, c, 2 * y, 2 * xx + 1) += d;
            g.at(n, c, 2 * y + 1, 2 * xx) += d;
            g.at(n, c, 2 * y + 1, 2 * xx + 1) += d;
          }
        }
      }
    }
  });
}

Var global_avg_pool(const Var& x) {
  const Shape s = x.shape();
  Tensor out(Shape{s.n, s.c, 1, 1});
  for (std::size_t gi = 0; gi < out.size(); ++gi) {
    double acc = 0.0;
    const float* p = x.value().data() + gi * s.spatial();
    for (std::size_t i = 0; i < s.spatial(); ++i) acc += p[i];
    out[gi] = static_cast<float>(acc / static_cast<double>(s.spatial()));
  }
  return make_result(std::move(out), {x}, [](Node& self) {
    Tensor& g = self.inputs[0]->grad_buffer();
    const std::size_t spatial = g.shape().spatial();
    for (std::size_t gi = 0; gi < self.grad.size(); ++gi) {
      const float d = self.grad[gi] / static_cast<float>(spatial);
      float* p = g.data() + gi * spatial;
      for (std::size_t i = 0; i < spatial; ++i) p[i] += d;
    }
  });
}

Var slice_channels(const Var& x, int begin, int count) {
  const Shape s = x.shape();
  require(begin >= 0 && count > 0 && begin + count <= s.c, "slice_channels: range outside tensor");
  Tensor out(Shape{s.n, count, s.h, s.w});
  const std::size_t sp = s.spatial();
  for (int n = 0; n < s.n; ++n) {
    const float* src = x.value().data() + (static_cast<std::size_t>(n) * s.c + begin) * sp;
    std::copy(src, src + count * sp, out.data() + static_cast<std::size_t>(n) * count * sp);
  }
  return make_result(std::move(out), {x}, [begin, count](Node& self) {
    Tensor& g = self.inputs[0]->grad_buffer();
    const Shape s = g.shape();
    const std::size_t sp = s.spatial();
    for (int n = 0; n < s.n; ++n) {
      float* dst = g.data() + (static_cast<std::size_t>(n) * s.c + begin) * sp;
      const float* src = self.grad.data() + static_cast<std::size_t>(n) * count * sp;
      for (std::size_t i = 0; i < count * sp; ++i) dst[i] += src[i];
    }
  });
}

Var concat_batch(const Var& a, const Var& b) {
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  require(sa.c == sb.c && sa.h == sb.h && sa.w == sb.w, "concat_batch: sample shapes differ");
  Tensor out(Shape{sa.n + sb.n, sa.c, sa.h, sa.w});
  std::copy(a.value().values().begin(), a.value().values().end(), out.data());
  std::copy(b.value().values().begin(), b.value().values().end(), out.data() + a.value().size());
  return make_result(std::move(out), {a, b}, [](Node& self) {
    std::size_t offset = 0;
    for (auto& in : self.inputs) {
      const std::size_t n = in->value.size();
      if (in->requires_grad) {
        Tensor& g = in->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[offset + i];
      }
      offset += n;
    }
  });
}

Var weighted_sum(std::span<const std::pair<double, Var>> terms) {
  double total = 0.0;
  std::vector<Var> inputs;
  std::vector<float> weights;
  for (const auto& [w, v] : terms) {
    require(v.value().size() == 1, "weighted_sum: terms must be scalars");
    total += w * v.value()[0];
    inputs.push_back(v);
    weights.push_back(static_cast<float>(w));
  }
  Tensor out(Shape{1, 1, 1, 1}, static_cast<float>(total));
  return make_result(std::move(out), std::move(inputs), [weights](Node& self) {
    for (std::size_t i = 0; i < self.inputs.size(); ++i) {
      if (self.inputs[i]->requires_grad) self.inputs[i]->grad_buffer()[0] += weights[i] * self.grad[0];
    }
  });
}

Var l1(const Var& a, const Var& b) {
  require(a.value().size() == b.value().size(),
          "l1: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  const std::vector<double> av(a.value().values().begin(), a.value().values().end());
  const std::vector<double> bv(b.value().values().begin(), b.value().values().end());
  auto res = l1_loss(av, bv);
  Tensor out(Shape{1, 1, 1, 1}, static_cast<float>(res.value));
  auto grad = std::make_shared<std::vector<double>>(std::move(res.grad));
  return make_result(std::move(out), {a, b}, [grad](Node& self) {
    const float up = self.grad[0];
    for (std::size_t k = 0; k < 2; ++k) {
      if (!self.inputs[k]->requires_grad) continue;
      const float sgn = k == 0 ? 1.0f : -1.0f;
      Tensor& g = self.inputs[k]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sgn * up * static_cast<float>((*grad)[i]);
    }
  });
}

Tensor images_to_tensor(std::span<const Image> images) {
  require(!images.empty(), "images_to_tensor: empty batch");
  const Dims d = images.front().dims();
  Tensor t(Shape{static_cast<int>(images.size()), 3, d.height, d.width});
  for (std::size_t n = 0; n < images.size(); ++n) {
    require_same_dims(d, images[n].dims(), "images_to_tensor");
    for (int y = 0; y < d.height; ++y) {
      for (int x = 0; x < d.width; ++x) {
        for (int c = 0; c < 3; ++c) {
          t.at(static_cast<int>(n), c, y, x) = static_cast<float>(2.0 * images[n].at(x, y, c) - 1.0);
        }
      }
    }
  }
  return t;
}

Image unit_tensor_to_image(const Tensor& t, int n) {
  const Shape s = t.shape();
  require(s.c == 3 && n >= 0 && n < s.n, "tensor is not an RGB batch containing sample " + std::to_string(n));
  Image img(s.w, s.h);
  for (int y = 0; y < s.h; ++y) {
    for (int x = 0; x < s.w; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<double>(t.at(n, c, y, x));
    }
  }
  return img;
}

Image tensor_to_image(const Tensor& t, int n) {
  Image img = unit_tensor_to_image(t, n);
  for (double& v : img.data()) v = std::clamp(0.5 * v + 0.5, 0.0, 1.0);
  return img;
}

Var image_loss(const Var& out_unit, std::span<const Image> refs,
               const std::function<ValueAndGrad(const Image&, const Image&)>& kernel) {
  const Shape s = out_unit.shape();
  require(s.c == 3 && static_cast<std::size_t>(s.n) == refs.size(), "image_loss: batch size mismatch");
  auto grads = std::make_shared<Tensor>(s);
  double total = 0.0;
  for (int n = 0; n < s.n; ++n) {
    const Image out = unit_tensor_to_image(out_unit.value(), n);
    auto res = kernel(out, refs[n]);
    total += res.value;
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        for (int c = 0; c < 3; ++c) {
          grads->at(n, c, y, x) =
              static_cast<float>(res.grad[(static_cast<std::size_t>(y) * s.w + x) * 3 + c] / s.n);
        }
      }
    }
  }
  Tensor value(Shape{1, 1, 1, 1}, static_cast<float>(total / s.n));
  return make_result(std::move(value), {out_unit}, [grads](Node& self) {
    Tensor& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * (*grads)[i];
  });
}

namespace {

ScoreSet to_scores(std::span<const Var> vars) {
  ScoreSet s;
  for (const auto& v : vars) s.emplace_back(v.value().values().begin(), v.value().values().end());
  return s;
}

void scatter_score_grads(Node& self, std::size_t first, const ScoreSet& grads) {
  for (std::size_t k = 0; k < grads.size(); ++k) {
    Node& in = *self.inputs[first + k];
    if (!in.requires_grad) continue;
    Tensor& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * static_cast<float>(grads[k][i]);
  }
}

}  // namespace

Var lsgan_generator(std::span<const Var> fake_scores) {
  auto res = std::make_shared<ScoreLoss>(lsgan_g_loss(to_scores(fake_scores)));
  Tensor out(Shape{1, 1, 1, 1}, static_cast<float>(res->value));
  return make_result(std::move(out), std::vector<Var>(fake_scores.begin(), fake_scores.end()),
                     [res](Node& self) { scatter_score_grads(self, 0, res->grad_fake); });
}

Var lsgan_discriminator(std::span<const Var> real_scores, std::span<const Var> fake_scores) {
  auto res = std::make_shared<ScoreLoss>(lsgan_d_loss(to_scores(real_scores), to_scores(fake_scores)));
  Tensor out(Shape{1, 1, 1, 1}, static_cast<float>(res->value));
  std::vector<Var> inputs(real_scores.begin(), real_scores.end());
  inputs.insert(inputs.end(), fake_scores.begin(), fake_scores.end());
  const std::size_t n_real = real_scores.size();
  return make_result(std::move(out), std::move(inputs), [res, n_real](Node& self) {
    scatter_score_grads(self, 0, res->grad_real);
    scatter_score_grads(self, n_real, res->grad_fake);
  });
}

}  // namespace archstyle::nn
