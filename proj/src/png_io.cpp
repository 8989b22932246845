#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>

#include "archstyle/errors.hpp"
#include "archstyle/image.hpp"

namespace archstyle {

namespace {

struct PngReader {
  png_image image{};

  explicit PngReader(const std::string& path) {
    image.version = PNG_IMAGE_VERSION;
    if (!std::filesystem::exists(path)) {
      throw IoError("cannot read '" + path + "': no such file");
    }
    if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
      throw IoError("cannot read '" + path + "': " + image.message);
    }
    if ((image.format & PNG_FORMAT_FLAG_LINEAR) != 0) {
      png_image_free(&image);
      throw UnsupportedFormatError("'" + path + "' is a 16-bit PNG; only 8-bit files are supported");
    }
  }
  ~PngReader() { png_image_free(&image); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  std::vector<std::uint8_t> finish(png_uint_32 format, const std::string& path) {
    image.format = format;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
    if (png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr) == 0) {
      throw IoError("cannot decode '" + path + "': " + image.message);
    }
    return buf;
  }
};

std::uint8_t quantize(double v) {
  const double s = std::clamp(v, 0.0, 1.0) * 255.0;
  return static_cast<std::uint8_t>(std::lround(s));
}

void write_png(png_uint_32 format, int width, int height, const std::vector<std::uint8_t>& buf,
               const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot write '" + path + "': " + msg);
  }
}

}  // namespace

Image load_png(const std::string& path) {
  PngReader reader(path);
  const int w = static_cast<int>(reader.image.width);
  const int h = static_cast<int>(reader.image.height);
  const auto buf = reader.finish(PNG_FORMAT_RGBA, path);
  Image img(w, h);
  auto d = img.data();
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) d[3 * p + c] = buf[4 * p + c] / 255.0;
  }
  return img;
}

void save_png(const Image& img, const std::string& path) {
  std::vector<std::uint8_t> buf(img.data().size());
  const auto d = img.data();
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = quantize(d[i]);
  write_png(PNG_FORMAT_RGB, img.width(), img.height(), buf, path);
}

ScalarField load_gray_png(const std::string& path) {
  PngReader reader(path);
  if ((reader.image.format & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_COLORMAP)) != 0) {
    throw ValidationError("'" + path + "' is not a grayscale PNG");
  }
  const int w = static_cast<int>(reader.image.width);
  const int h = static_cast<int>(reader.image.height);
  const auto buf = reader.finish(PNG_FORMAT_GRAY, path);
  ScalarField f(w, h);
  auto d = f.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = buf[i] / 255.0;
  return f;
}

void save_gray_png(const ScalarField& f, const std::string& path) {
  std::vector<std::uint8_t> buf(f.size());
  const auto d = f.data();
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = quantize(d[i]);
  write_png(PNG_FORMAT_GRAY, f.width(), f.height(), buf, path);
}

void save_mask_png(const Mask& m, const std::string& path) {
  save_gray_png(ScalarField(m.width(), m.height(), std::vector<double>(m.data().begin(), m.data().end())),
                path);
}

}  // namespace archstyle
