#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace archstyle {

struct Dims {
  int width = 0;
  int height = 0;
  friend bool operator==(const Dims&, const Dims&) = default;
};

std::string to_string(Dims d);

/// H x W x 3 image, interleaved RGB, row-major, intensities in [0,1].
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int width, int height, double fill = 0.0);
  Image(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  Dims dims() const noexcept { return {width_, height_}; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Single-channel real field. The tag keeps luminance and masks apart at
/// the type level while sharing storage code.
template <class Tag>
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, double fill = 0.0);
  Plane(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  Dims dims() const noexcept { return {width_, height_}; }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

struct LumaTag {};
struct MaskTag {};
struct ScalarTag {};
struct EdgeTag {};

using Luma = Plane<LumaTag>;
/// Per-pixel alpha in [0,1]; 1 marks foreground (buildings), 0 background (sky).
using Mask = Plane<MaskTag>;
using ScalarField = Plane<ScalarTag>;
/// Binary edge indicator, values in {0, 1}.
using EdgeMap = Plane<EdgeTag>;

/// Forward differences with replicate boundary: the last column of gx and
/// the last row of gy are zero.
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> gx;
  std::vector<double> gy;
};

Luma rgb_to_luma(const Image& img);

GradientField spatial_gradient(const ScalarField& field);
GradientField spatial_gradient(const Luma& luma);

/// Negative adjoint of spatial_gradient: <grad x, v> = -<x, divergence(v)>.
ScalarField divergence(const GradientField& v);

Image alpha_composite(const Image& fg, const Image& bg, const Mask& m);

/// Binomial [1,4,6,4,1]/16 separable blur with half-sample symmetric
/// boundary extension.
ScalarField gaussian_blur5(const ScalarField& f);
Image gaussian_blur5(const Image& img);

/// Blur then keep even rows/columns; output dims are ceil(dims / 2).
Image pyramid_down(const Image& img);
ScalarField pyramid_down(const ScalarField& f);
Mask pyramid_down(const Mask& m);

/// Bilinear resize (pixel-center aligned) to the target dims.
Image pyramid_up(const Image& img, Dims target);
ScalarField pyramid_up(const ScalarField& f, Dims target);

Image resize_bilinear(const Image& img, Dims target);
Mask resize_nearest(const Mask& m, Dims target);

/// Dims with the shorter side scaled to `shorter`, aspect preserved.
Dims scaled_to_shorter_side(Dims d, int shorter);

ScalarField extract_channel(const Image& img, int channel);
void insert_channel(Image& img, int channel, const ScalarField& f);

Image clamp_unit(const Image& img);
Image flip_horizontal(const Image& img);
Image crop(const Image& img, int x0, int y0, Dims size);

double mean_luminance(const Image& img);

/// 8-bit RGB or RGBA PNG (alpha dropped); grayscale is expanded to RGB.
/// Throws UnsupportedFormatError for 16-bit files, IoError otherwise.
Image load_png(const std::string& path);
void save_png(const Image& img, const std::string& path);

/// 8-bit grayscale PNG helpers used for masks.
ScalarField load_gray_png(const std::string& path);
void save_gray_png(const ScalarField& f, const std::string& path);
void save_mask_png(const Mask& m, const std::string& path);

void require_same_dims(Dims a, Dims b, const char* what);

}  // namespace archstyle
