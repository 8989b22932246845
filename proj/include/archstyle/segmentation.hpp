#pragma once

#include <string>

#include "archstyle/image.hpp"

namespace archstyle {

enum class FillPolicy { kZero, kRegionMean };

/// The two translation-branch inputs cut from one image by its mask.
struct RegionPair {
  Image foreground;
  Image background;
  Mask mask;
  // Set when the mean fill was requested but the region was empty, so the
  // zero fill was used instead.
  bool foreground_fill_fell_back = false;
  bool background_fill_fell_back = false;
};

/// Reads an 8-bit grayscale PNG and binarizes it: alpha = 1 where
/// value / 255 >= threshold. Threshold must lie in (0, 1).
Mask load_mask(const std::string& path, double threshold = 0.5);

Mask binarize(const Mask& m, double threshold = 0.5);
bool is_binary(const Mask& m);

RegionPair split_regions(const Image& x, const Mask& m, FillPolicy fill = FillPolicy::kRegionMean);
Image merge_regions(const RegionPair& rp);

std::size_t foreground_area(const Mask& m);
std::size_t background_area(const Mask& m);

FillPolicy parse_fill_policy(const std::string& name);

}  // namespace archstyle
