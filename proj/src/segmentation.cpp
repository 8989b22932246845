#include "archstyle/segmentation.hpp"

#include <array>

#include "archstyle/errors.hpp"

namespace archstyle {

namespace {

void require_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("mask threshold must lie in (0,1), got " + std::to_string(threshold));
  }
}

// Alpha-weighted mean colour of a region; weight(a) selects fg or bg.
template <class Weight>
std::array<double, 3> region_mean(const Image& x, const Mask& m, Weight weight, bool& empty) {
  std::array<double, 3> sum{0.0, 0.0, 0.0};
  double total = 0.0;
  const auto d = x.data();
  const auto a = m.data();
  for (std::size_t p = 0; p < a.size(); ++p) {
    const double w = weight(a[p]);
    total += w;
    for (int c = 0; c < 3; ++c) sum[c] += w * d[3 * p + c];
  }
  empty = total <= 0.0;
  if (empty) return {0.0, 0.0, 0.0};
  for (double& s : sum) s /= total;
  return sum;
}

}  // namespace

Mask binarize(const Mask& m, double threshold) {
  require_threshold(threshold);
  Mask out(m.width(), m.height());
  const auto src = m.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= threshold ? 1.0 : 0.0;
  return out;
}

Mask load_mask(const std::string& path, double threshold) {
  require_threshold(threshold);
  const ScalarField gray = load_gray_png(path);
  return binarize(Mask(gray.width(), gray.height(),
                       std::vector<double>(gray.data().begin(), gray.data().end())),
                  threshold);
}

bool is_binary(const Mask& m) {
  for (double v : m.data()) {
    if (v != 0.0 && v != 1.0) return false;
  }
  return true;
}

RegionPair split_regions(const Image& x, const Mask& m, FillPolicy fill) {
  require_same_dims(x.dims(), m.dims(), "split_regions");
  RegionPair rp{Image(x.width(), x.height()), Image(x.width(), x.height()), m};

  std::array<double, 3> fill_fg{0.0, 0.0, 0.0};
  std::array<double, 3> fill_bg{0.0, 0.0, 0.0};
  if (fill == FillPolicy::kRegionMean) {
    bool fg_empty = false;
    bool bg_empty = false;
    fill_fg = region_mean(x, m, [](double a) { return a; }, fg_empty);
    fill_bg = region_mean(x, m, [](double a) { return 1.0 - a; }, bg_empty);
    rp.foreground_fill_fell_back = fg_empty;
    rp.background_fill_fell_back = bg_empty;
  }

  const auto src = x.data();
  const auto a = m.data();
  auto fg = rp.foreground.data();
  auto bg = rp.background.data();
  for (std::size_t p = 0; p < a.size(); ++p) {
    for (int c = 0; c < 3; ++c) {
      const std::size_t i = 3 * p + c;
      fg[i] = a[p] * src[i] + (1.0 - a[p]) * fill_fg[c];
      bg[i] = (1.0 - a[p]) * src[i] + a[p] * fill_bg[c];
    }
  }
  return rp;
}

Image merge_regions(const RegionPair& rp) {
  return alpha_composite(rp.foreground, rp.background, rp.mask);
}

std::size_t foreground_area(const Mask& m) {
  std::size_t n = 0;
  for (double v : m.data()) n += v >= 0.5 ? 1 : 0;
  return n;
}

std::size_t background_area(const Mask& m) { return m.size() - foreground_area(m); }

FillPolicy parse_fill_policy(const std::string& name) {
  if (name == "zero") return FillPolicy::kZero;
  if (name == "mean") return FillPolicy::kRegionMean;
  throw ValidationError("unknown fill policy '" + name + "' (expected zero|mean)");
}

}  // namespace archstyle
