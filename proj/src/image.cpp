#include "archstyle/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "archstyle/errors.hpp"

namespace archstyle {

std::string to_string(Dims d) {
  return std::to_string(d.width) + "x" + std::to_string(d.height);
}

void require_same_dims(Dims a, Dims b, const char* what) {
  if (a != b) {
    throw ValidationError(std::string(what) + ": dimension mismatch (" + to_string(a) +
                          " vs " + to_string(b) + ")");
  }
}

namespace {

void require_positive(int width, int height) {
  if (width < 1 || height < 1) {
    throw ValidationError("image dims must be positive, got " + to_string({width, height}));
  }
}

// Half-sample symmetric extension: ... b a | a b c d | d c ...
int reflect_index(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

constexpr std::array<double, 5> kBinomial = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

std::vector<double> blur_plane(std::span<const double> src, int width, int height) {
  std::vector<double> tmp(src.size());
  std::vector<double> out(src.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) {
        acc += kBinomial[k + 2] * src[static_cast<std::size_t>(y) * width + reflect_index(x + k, width)];
      }
      tmp[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) {
        acc += kBinomial[k + 2] * tmp[static_cast<std::size_t>(reflect_index(y + k, height)) * width + x];
      }
      out[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  return out;
}

std::vector<double> decimate(std::span<const double> src, int width, int height) {
  const int ow = (width + 1) / 2;
  const int oh = (height + 1) / 2;
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      out[static_cast<std::size_t>(y) * ow + x] = src[static_cast<std::size_t>(2 * y) * width + 2 * x];
    }
  }
  return out;
}

struct BilinearTap {
  int i0, i1;
  double w1;
};

std::vector<BilinearTap> bilinear_taps(int src, int dst) {
  std::vector<BilinearTap> taps(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    double s = (i + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, src - 1);
    taps[i] = {i0, i1, s - i0};
  }
  return taps;
}

std::vector<double> resize_plane(std::span<const double> src, int width, int height, int channels,
                                 Dims target) {
  const auto tx = bilinear_taps(width, target.width);
  const auto ty = bilinear_taps(height, target.height);
  std::vector<double> out(static_cast<std::size_t>(target.width) * target.height * channels);
  auto px = [&](int x, int y, int c) {
    return src[(static_cast<std::size_t>(y) * width + x) * channels + c];
  };
  for (int y = 0; y < target.height; ++y) {
    const auto& a = ty[y];
    for (int x = 0; x < target.width; ++x) {
      const auto& b = tx[x];
      for (int c = 0; c < channels; ++c) {
        const double top = px(b.i0, a.i0, c) + b.w1 * (px(b.i1, a.i0, c) - px(b.i0, a.i0, c));
        const double bot = px(b.i0, a.i1, c) + b.w1 * (px(b.i1, a.i1, c) - px(b.i0, a.i1, c));
        out[(static_cast<std::size_t>(y) * target.width + x) * channels + c] = top + a.w1 * (bot - top);
      }
    }
  }
  return out;
}

void require_target(Dims target) {
  if (target.width < 1 || target.height < 1) {
    throw ValidationError("resize target must be positive, got " + to_string(target));
  }
}

}  // namespace

Image::Image(int width, int height, double fill) : width_(width), height_(height) {
  require_positive(width, height);
  data_.assign(pixel_count() * kChannels, fill);
}

Image::Image(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  require_positive(width, height);
  if (data_.size() != pixel_count() * kChannels) {
    throw ValidationError("image data length does not match " + to_string(dims()) + "x3");
  }
}

template <class Tag>
Plane<Tag>::Plane(int width, int height, double fill) : width_(width), height_(height) {
  require_positive(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

template <class Tag>
Plane<Tag>::Plane(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  require_positive(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw ValidationError("plane data length does not match " + to_string(dims()));
  }
}

template class Plane<LumaTag>;
template class Plane<MaskTag>;
template class Plane<ScalarTag>;
template class Plane<EdgeTag>;

Luma rgb_to_luma(const Image& img) {
  Luma out(img.width(), img.height());
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
  }
  return out;
}

namespace {

GradientField forward_differences(std::span<const double> f, int width, int height) {
  GradientField g{width, height, std::vector<double>(f.size(), 0.0), std::vector<double>(f.size(), 0.0)};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (x + 1 < width) g.gx[i] = f[i + 1] - f[i];
      if (y + 1 < height) g.gy[i] = f[i + width] - f[i];
    }
  }
  return g;
}

}  // namespace

GradientField spatial_gradient(const ScalarField& field) {
  return forward_differences(field.data(), field.width(), field.height());
}

GradientField spatial_gradient(const Luma& luma) {
  return forward_differences(luma.data(), luma.width(), luma.height());
}

ScalarField divergence(const GradientField& v) {
  const int w = v.width;
  const int h = v.height;
  ScalarField out(w, h);
  auto d = out.data();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      double acc = 0.0;
      if (x + 1 < w) acc += v.gx[i];
      if (x > 0) acc -= v.gx[i - 1];
      if (y + 1 < h) acc += v.gy[i];
      if (y > 0) acc -= v.gy[i - w];
      d[i] = acc;
    }
  }
  return out;
}

Image alpha_composite(const Image& fg, const Image& bg, const Mask& m) {
  require_same_dims(fg.dims(), bg.dims(), "alpha_composite");
  require_same_dims(fg.dims(), m.dims(), "alpha_composite");
  Image out(fg.width(), fg.height());
  const auto a = m.data();
  const auto f = fg.data();
  const auto b = bg.data();
  auto o = out.data();
  for (std::size_t p = 0; p < a.size(); ++p) {
    for (int c = 0; c < 3; ++c) {
      const std::size_t i = 3 * p + c;
      o[i] = a[p] * f[i] + (1.0 - a[p]) * b[i];
    }
  }
  return out;
}

ScalarField gaussian_blur5(const ScalarField& f) {
  return ScalarField(f.width(), f.height(), blur_plane(f.data(), f.width(), f.height()));
}

Image gaussian_blur5(const Image& img) {
  Image out(img.width(), img.height());
  for (int c = 0; c < 3; ++c) insert_channel(out, c, gaussian_blur5(extract_channel(img, c)));
  return out;
}

ScalarField pyramid_down(const ScalarField& f) {
  if (f.width() < 2 || f.height() < 2) {
    throw ValidationError("pyramid_down needs dims >= 2, got " + to_string(f.dims()));
  }
  const auto blurred = blur_plane(f.data(), f.width(), f.height());
  return ScalarField((f.width() + 1) / 2, (f.height() + 1) / 2, decimate(blurred, f.width(), f.height()));
}

Image pyramid_down(const Image& img) {
  if (img.width() < 2 || img.height() < 2) {
    throw ValidationError("pyramid_down needs dims >= 2, got " + to_string(img.dims()));
  }
  Image out((img.width() + 1) / 2, (img.height() + 1) / 2);
  for (int c = 0; c < 3; ++c) insert_channel(out, c, pyramid_down(extract_channel(img, c)));
  return out;
}

Mask pyramid_down(const Mask& m) {
  ScalarField f(m.width(), m.height(), std::vector<double>(m.data().begin(), m.data().end()));
  auto down = pyramid_down(f);
  return Mask(down.width(), down.height(), std::vector<double>(down.data().begin(), down.data().end()));
}

Image resize_bilinear(const Image& img, Dims target) {
  require_target(target);
  if (img.dims() == target) return img;
  return Image(target.width, target.height,
               resize_plane(img.data(), img.width(), img.height(), 3, target));
}

Image pyramid_up(const Image& img, Dims target) { return resize_bilinear(img, target); }

ScalarField pyramid_up(const ScalarField& f, Dims target) {
  require_target(target);
  if (f.dims() == target) return f;
  return ScalarField(target.width, target.height, resize_plane(f.data(), f.width(), f.height(), 1, target));
}

Mask resize_nearest(const Mask& m, Dims target) {
  require_target(target);
  if (m.dims() == target) return m;
  Mask out(target.width, target.height);
  for (int y = 0; y < target.height; ++y) {
    const int sy = std::min(m.height() - 1, static_cast<int>((y + 0.5) * m.height() / target.height));
    for (int x = 0; x < target.width; ++x) {
      const int sx = std::min(m.width() - 1, static_cast<int>((x + 0.5) * m.width() / target.width));
      out.at(x, y) = m.at(sx, sy);
    }
  }
  return out;
}

Dims scaled_to_shorter_side(Dims d, int shorter) {
  if (shorter < 1) throw ValidationError("target shorter side must be positive");
  if (d.width <= d.height) {
    const int h = std::max(1, static_cast<int>(std::lround(static_cast<double>(d.height) * shorter / d.width)));
    return {shorter, h};
  }
  const int w = std::max(1, static_cast<int>(std::lround(static_cast<double>(d.width) * shorter / d.height)));
  return {w, shorter};
}

ScalarField extract_channel(const Image& img, int channel) {
  ScalarField out(img.width(), img.height());
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[3 * i + channel];
  return out;
}

void insert_channel(Image& img, int channel, const ScalarField& f) {
  require_same_dims(img.dims(), f.dims(), "insert_channel");
  auto dst = img.data();
  const auto src = f.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[3 * i + channel] = src[i];
}

Image clamp_unit(const Image& img) {
  Image out = img;
  for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Image flip_horizontal(const Image& img) {
  Image out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(img.width() - 1 - x, y, c) = img.at(x, y, c);
    }
  }
  return out;
}

Image crop(const Image& img, int x0, int y0, Dims size) {
  if (x0 < 0 || y0 < 0 || x0 + size.width > img.width() || y0 + size.height > img.height()) {
    throw ValidationError("crop window outside image");
  }
  Image out(size.width, size.height);
  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
    }
  }
  return out;
}

double mean_luminance(const Image& img) {
  const auto y = rgb_to_luma(img);
  double acc = 0.0;
  for (double v : y.data()) acc += v;
  return acc / static_cast<double>(y.size());
}

}  // namespace archstyle
