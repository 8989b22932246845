#pragma once

#include <algorithm>
#include <random>

#include "archstyle/image.hpp"

namespace fixture {

using archstyle::Image;
using archstyle::Mask;

struct Facade {
  Image source;
  Image translated;
  Mask mask;
};

/// Sky over a grey block with a grid of dark windows. The translated
/// stand-in is a warm-tinted, blurred and lightly noised copy, so its
/// foreground geometry is softer than the source's.
inline Facade facade(int w, int h, std::uint64_t seed = 1) {
  Facade f{Image(w, h), Image(w, h), Mask(w, h)};
  const int x0 = w / 5, x1 = w - w / 5, y0 = h / 4, y1 = h;
  const int cell = std::max(4, w / 16);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool building = x >= x0 && x < x1 && y >= y0 && y < y1;
      f.mask.at(x, y) = building ? 1.0 : 0.0;
      double r, g, b;
      if (!building) {
        const double t = static_cast<double>(y) / h;
        r = 0.55 + 0.2 * t;
        g = 0.7 + 0.15 * t;
        b = 0.95;
      } else {
        const int cx = (x - x0) % cell;
        const int cy = (y - y0) % cell;
        const bool window = cx >= cell / 4 && cx < 3 * cell / 4 && cy >= cell / 4 && cy < 3 * cell / 4;
        r = g = b = window ? 0.15 : 0.6;
      }
      f.source.at(x, y, 0) = r;
      f.source.at(x, y, 1) = g;
      f.source.at(x, y, 2) = b;
    }
  }

  Image soft = f.source;
  for (int pass = 0; pass < 3; ++pass) {
    Image next = soft;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) {
          double acc = 0.0;
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              acc += soft.at(std::clamp(x + dx, 0, w - 1), std::clamp(y + dy, 0, h - 1), c);
            }
          }
          next.at(x, y, c) = acc / 9.0;
        }
      }
    }
    soft = next;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-0.03, 0.03);
  const double tint[3] = {1.1, 0.95, 0.7};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double n = noise(rng);
      for (int c = 0; c < 3; ++c) f.translated.at(x, y, c) = std::clamp(soft.at(x, y, c) * tint[c] + n, 0.0, 1.0);
    }
  }
  return f;
}

}  // namespace fixture
