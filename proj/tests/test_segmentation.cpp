#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "archstyle/errors.hpp"
#include "archstyle/segmentation.hpp"
#include "oracles.hpp"

using namespace archstyle;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "archstyle_test_segmentation";
  fs::create_directories(dir);
  return (dir / name).string();
}

std::string write_gray(const std::string& name, int w, int h, int value) {
  const std::string p = temp_path(name);
  save_gray_png(ScalarField(w, h, value / 255.0), p);
  return p;
}

}  // namespace

TEST_CASE("load_mask thresholds") {
  const Mask ones = load_mask(write_gray("all255.png", 5, 4, 255), 0.5);
  CHECK(ones.dims() == Dims{5, 4});
  for (double v : ones.data()) CHECK(v == 1.0);
  const Mask zeros = load_mask(write_gray("all0.png", 5, 4, 0), 0.5);
  for (double v : zeros.data()) CHECK(v == 0.0);
  const Mask m128 = load_mask(write_gray("all128.png", 3, 3, 128), 0.5);
  for (double v : m128.data()) CHECK(v == 1.0);
  const Mask m127 = load_mask(write_gray("all127.png", 3, 3, 127), 0.5);
  for (double v : m127.data()) CHECK(v == 0.0);
}

TEST_CASE("load_mask rejects bad input") {
  const std::string p = write_gray("t.png", 2, 2, 200);
  CHECK_THROWS_AS(load_mask(p, 0.0), ValidationError);
  CHECK_THROWS_AS(load_mask(p, 1.0), ValidationError);
  const std::string rgb = temp_path("rgb.png");
  save_png(Image(3, 3, 0.5), rgb);
  CHECK_THROWS_AS(load_mask(rgb, 0.5), ValidationError);
}

TEST_CASE("split_regions with full and empty masks") {
  std::mt19937_64 rng(1);
  const Image x = oracle::random_image(6, 5, rng);
  const RegionPair all = split_regions(x, Mask(6, 5, 1.0), FillPolicy::kZero);
  CHECK(all.foreground == x);
  for (double v : all.background.data()) CHECK(v == 0.0);
  const RegionPair none = split_regions(x, Mask(6, 5, 0.0), FillPolicy::kZero);
  CHECK(none.background == x);
  for (double v : none.foreground.data()) CHECK(v == 0.0);
}

TEST_CASE("checkerboard zero fill") {
  std::mt19937_64 rng(2);
  const Image x = oracle::random_image(8, 8, rng, 0.1, 1.0);
  Mask m(8, 8);
  for (int y = 0; y < 8; ++y) {
    for (int xx = 0; xx < 8; ++xx) m.at(xx, y) = (xx + y) % 2 == 0 ? 1.0 : 0.0;
  }
  const RegionPair rp = split_regions(x, m, FillPolicy::kZero);
  int zeros = 0;
  for (int y = 0; y < 8; ++y) {
    for (int xx = 0; xx < 8; ++xx) {
      const bool zero = rp.foreground.at(xx, y, 0) == 0.0 && rp.foreground.at(xx, y, 1) == 0.0 &&
                        rp.foreground.at(xx, y, 2) == 0.0;
      CHECK(zero == (m.at(xx, y) == 0.0));
      zeros += zero;
    }
  }
  CHECK(zeros == 32);
}

TEST_CASE("mean fill uses the region mean and falls back on empty regions") {
  Image x(2, 1);
  for (int c = 0; c < 3; ++c) {
    x.at(0, 0, c) = 0.2;
    x.at(1, 0, c) = 0.8;
  }
  Mask m(2, 1, std::vector<double>{1.0, 0.0});
  const RegionPair rp = split_regions(x, m, FillPolicy::kRegionMean);
  CHECK(rp.foreground.at(1, 0, 0) == doctest::Approx(0.2));
  CHECK(rp.background.at(0, 0, 0) == doctest::Approx(0.8));
  CHECK_FALSE(rp.foreground_fill_fell_back);

  const RegionPair empty = split_regions(x, Mask(2, 1, 0.0), FillPolicy::kRegionMean);
  CHECK(empty.foreground_fill_fell_back);
  CHECK_FALSE(empty.background_fill_fell_back);
  for (double v : empty.foreground.data()) CHECK(v == 0.0);
}

TEST_CASE("split_regions rejects mismatched dims") {
  CHECK_THROWS_AS(split_regions(Image(4, 4), Mask(4, 3)), ValidationError);
}

TEST_CASE("merge after split is exact on 1000 random binary masks") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> dim(1, 16);
  for (int trial = 0; trial < 1000; ++trial) {
    const int w = dim(rng);
    const int h = dim(rng);
    const Image x = oracle::random_image(w, h, rng);
    const Mask m = oracle::random_mask(w, h, rng);
    const FillPolicy fill = trial % 2 ? FillPolicy::kZero : FillPolicy::kRegionMean;
    const RegionPair rp = split_regions(x, m, fill);
    REQUIRE(merge_regions(rp) == x);
    CHECK(foreground_area(m) + background_area(m) == static_cast<std::size_t>(w * h));
  }
}

TEST_CASE("binarize produces binary masks") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mask m(9, 9);
  for (double& v : m.data()) v = u(rng);
  CHECK_FALSE(is_binary(m));
  const Mask b = binarize(m, 0.3);
  CHECK(is_binary(b));
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(b.data()[i] == (m.data()[i] >= 0.3 ? 1.0 : 0.0));
}

TEST_CASE("fill policy names") {
  CHECK(parse_fill_policy("zero") == FillPolicy::kZero);
  CHECK(parse_fill_policy("mean") == FillPolicy::kRegionMean);
  CHECK_THROWS_AS(parse_fill_policy("median"), ValidationError);
}
