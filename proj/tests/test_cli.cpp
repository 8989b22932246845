#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "archstyle/checkpoint.hpp"
#include "archstyle/cli.hpp"
#include "archstyle/metrics.hpp"
#include "archstyle/network.hpp"
#include "archstyle/segmentation.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace archstyle;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "archstyle_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> cells_of(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string cell; std::getline(in, cell, ',');) out.push_back(cell);
  return out;
}

const std::vector<std::string> kToyNet = {"--set", "base_width=16", "--set", "n_disc_scales=2", "--size", "32"};

int train(const fs::path& corpus, const fs::path& out, const std::string& branch, int iterations = 10) {
  std::vector<std::string> args = {"--seed", "3", "--out-dir", out.string()};
  args.insert(args.end(), kToyNet.begin(), kToyNet.end());
  args.insert(args.end(), {"train", "--domain1", (corpus / "domain1").string(), "--domain2",
                           (corpus / "domain2").string(), "--branch", branch, "--iterations",
                           std::to_string(iterations)});
  return run_cli(args);
}

// Toy corpus plus one fg and one bg checkpoint, built once.
const fs::path& trained() {
  static const fs::path root = [] {
    const fs::path r = fresh_dir("trained");
    REQUIRE(run_cli({"--seed", "1", "--out-dir", (r / "corpus").string(), "toy-corpus", "--count", "6"}) == kExitOk);
    REQUIRE(train(r / "corpus", r, "fg") == kExitOk);
    REQUIRE(train(r / "corpus", r, "bg") == kExitOk);
    const fixture::Facade f = fixture::facade(32, 32);
    save_png(f.source, (r / "input.png").string());
    save_mask_png(f.mask, (r / "mask.png").string());
    save_png(f.translated, (r / "translated.png").string());
    return r;
  }();
  return root;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run_cli({"bogus"}) == kExitUsage);
  CHECK(run_cli({}) == kExitUsage);
  CHECK(run_cli({"--help"}) == kExitOk);
  CHECK(run_cli({"train", "--help"}) == kExitOk);
  CHECK(run_cli({"blend", "--style", "/nonexistent/a.png", "--geo", "/nonexistent/b.png", "--mask",
                 "/nonexistent/m.png"}) == kExitUsage);
  const fs::path dir = fresh_dir("codes");
  CHECK(run_cli({"--set", "lambda_x=-1", "--out-dir", dir.string(), "toy-corpus", "--count", "2"}) == kExitUsage);
  CHECK(fs::is_empty(dir));
  CHECK(run_cli({"blend", "--solver", "sor", "--style", "a", "--geo", "b", "--mask", "c"}) == kExitUsage);

  // A file that exists but is not a PNG is a runtime failure.
  std::ofstream(dir / "junk.png") << "not a png";
  CHECK(run_cli({"--out-dir", dir.string(), "blend", "--style", (dir / "junk.png").string(), "--geo",
                 (dir / "junk.png").string(), "--mask", (dir / "junk.png").string()}) == kExitRuntime);
}

TEST_CASE("toy-corpus writes both domains") {
  const fs::path dir = fresh_dir("toy");
  REQUIRE(run_cli({"--seed", "4", "--out-dir", dir.string(), "toy-corpus", "--count", "3"}) == kExitOk);
  for (const char* d : {"domain1", "domain2"}) {
    for (const char* f : {"0000.png", "0001.png", "0002.png"}) {
      const fs::path p = dir / d / f;
      REQUIRE(fs::exists(p));
      CHECK(load_png(p.string()).dims() == Dims{32, 32});
    }
    CHECK_FALSE(fs::exists(dir / d / "0003.png"));
  }
}

TEST_CASE("train writes a loss log with one row per iteration") {
  const fs::path& root = trained();
  CHECK(fs::exists(root / "fg.ckpt"));
  CHECK(fs::exists(root / "bg.ckpt"));
  const auto fg = lines_of(read_file(root / "fg_loss.csv"));
  REQUIRE(fg.size() == 11);
  CHECK(fg[0] == "iteration,x,c,s,z,cycle,adv,gd,kl,total,discriminator");
  for (int i = 1; i <= 10; ++i) {
    const auto cells = cells_of(fg[i]);
    REQUIRE(cells.size() == 11);
    CHECK(cells[0] == std::to_string(i));
    for (std::size_t c = 1; c < cells.size(); ++c) CHECK(std::isfinite(std::stod(cells[c])));
    CHECK(std::stod(cells[7]) > 0.0);
  }

  // The background branch drops the geometry terms.
  const auto bg = lines_of(read_file(root / "bg_loss.csv"));
  REQUIRE(bg.size() == 11);
  for (int i = 1; i <= 10; ++i) {
    const auto cells = cells_of(bg[i]);
    CHECK(std::stod(cells[7]) == 0.0);
    CHECK(std::stod(cells[8]) == 0.0);
  }
  const TranslatorBundle b = load_checkpoint((root / "fg.ckpt").string());
  CHECK(b.config().base_width == 16);
  CHECK(b.generator_optimizer().steps() == 10);
}

TEST_CASE("train is reproducible with one seed") {
  const fs::path& root = trained();
  const fs::path again = fresh_dir("again");
  REQUIRE(train(root / "corpus", again, "fg") == kExitOk);
  CHECK(read_file(again / "fg_loss.csv") == read_file(root / "fg_loss.csv"));
  CHECK(read_file(again / "fg.ckpt") == read_file(root / "fg.ckpt"));
}

TEST_CASE("transfer is byte-reproducible") {
  const fs::path& root = trained();
  auto run = [&](const std::string& out, bool blend) {
    std::vector<std::string> args = {"--size", "32", "transfer", "--input", (root / "input.png").string(),
                                     "--input-mask", (root / "mask.png").string(), "--style",
                                     (root / "corpus" / "domain2" / "0000.png").string(), "--style-mask",
                                     (root / "mask.png").string(), "--fg-ckpt", (root / "fg.ckpt").string(),
                                     "--bg-ckpt", (root / "bg.ckpt").string(), "--output", (root / out).string()};
    if (blend) args.push_back("--blend");
    return run_cli(args);
  };
  REQUIRE(run("t1.png", false) == kExitOk);
  REQUIRE(run("t2.png", false) == kExitOk);
  REQUIRE(run("t3.png", true) == kExitOk);
  CHECK(read_file(root / "t1.png") == read_file(root / "t2.png"));
  CHECK(load_png((root / "t1.png").string()).dims() == Dims{32, 32});
  CHECK(load_png((root / "t3.png").string()).dims() == Dims{32, 32});

  CHECK(run_cli({"transfer", "--input", (root / "input.png").string(), "--input-mask", (root / "mask.png").string(),
                 "--style", (root / "input.png").string(), "--style-mask", (root / "mask.png").string(), "--fg-ckpt",
                 (root / "missing.ckpt").string(), "--bg-ckpt", (root / "bg.ckpt").string()}) == kExitUsage);
}

TEST_CASE("interpolate endpoints equal the endpoint translations") {
  const fs::path& root = trained();
  const fs::path out = fresh_dir("interp2");
  const std::string a = (root / "corpus" / "domain2" / "0001.png").string();
  const std::string b = (root / "corpus" / "domain2" / "0002.png").string();
  REQUIRE(run_cli({"--size", "32", "--out-dir", out.string(), "interpolate", "--input", (root / "input.png").string(),
                   "--style-a", a, "--style-b", b, "--ckpt", (root / "fg.ckpt").string(), "--frames", "2"}) ==
          kExitOk);

  const TranslatorBundle bundle = load_checkpoint((root / "fg.ckpt").string());
  const Image x = load_png((root / "input.png").string());
  const fs::path expect = out / "expect.png";
  save_png(translate(bundle, x, StyleSource{load_png(a)}, Direction::kOneToTwo), expect.string());
  CHECK(read_file(out / "frame_000_t0.000.png") == read_file(expect));
  save_png(translate(bundle, x, StyleSource{load_png(b)}, Direction::kOneToTwo), expect.string());
  CHECK(read_file(out / "frame_001_t1.000.png") == read_file(expect));
}

TEST_CASE("interpolate writes N frames with increasing t") {
  const fs::path& root = trained();
  const fs::path out = fresh_dir("interp5");
  REQUIRE(run_cli({"--size", "32", "--out-dir", out.string(), "interpolate", "--input", (root / "input.png").string(),
                   "--style-a", (root / "corpus" / "domain2" / "0001.png").string(), "--style-b",
                   (root / "corpus" / "domain2" / "0003.png").string(), "--ckpt", (root / "fg.ckpt").string(),
                   "--frames", "5"}) == kExitOk);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(out)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  const std::vector<std::string> expect = {"frame_000_t0.000.png", "frame_001_t0.250.png", "frame_002_t0.500.png",
                                           "frame_003_t0.750.png", "frame_004_t1.000.png"};
  CHECK(names == expect);
  CHECK(run_cli({"interpolate", "--input", "a", "--style-a", "b", "--style-b", "c", "--ckpt", "d", "--frames",
                 "1"}) == kExitUsage);
}

TEST_CASE("blend writes an image of the input size") {
  const fs::path& root = trained();
  const fs::path out = fresh_dir("blend");
  REQUIRE(run_cli({"--out-dir", out.string(), "blend", "--style", (root / "translated.png").string(), "--geo",
                   (root / "input.png").string(), "--mask", (root / "mask.png").string(), "--solver", "cg"}) ==
          kExitOk);
  const Image r = load_png((out / "blend.png").string());
  CHECK(r.dims() == Dims{32, 32});
}

TEST_CASE("eval writes one row per matched stem") {
  const fs::path root = fresh_dir("eval");
  for (const char* d : {"results", "refs", "masks"}) fs::create_directories(root / d);
  std::mt19937_64 rng(5);
  const std::vector<std::string> stems = {"p", "q"};
  for (std::size_t i = 0; i < stems.size(); ++i) {
    const fixture::Facade f = fixture::facade(40, 32, i + 3);
    save_png(f.source, (root / "refs" / (stems[i] + ".png")).string());
    save_png(f.translated, (root / "results" / (stems[i] + ".png")).string());
    save_mask_png(f.mask, (root / "masks" / (stems[i] + ".png")).string());
    save_mask_png(oracle::random_mask(40, 32, rng, 0.6), (root / "masks" / (stems[i] + "_result.png")).string());
  }
  REQUIRE(run_cli({"--set", "eval_size=0", "--out-dir", root.string(), "eval", "--results", (root / "results").string(),
                   "--refs", (root / "refs").string(), "--masks", (root / "masks").string()}) == kExitOk);
  const auto lines = lines_of(read_file(root / "eval_report.csv"));
  REQUIRE(lines.size() >= 5);
  CHECK(lines[1] == "id,ssim,e_ssim,iou");
  for (std::size_t i = 0; i < stems.size(); ++i) {
    const auto cells = cells_of(lines[2 + i]);
    REQUIRE(cells.size() == 4);
    CHECK(cells[0] == stems[i]);
    const Image res = load_png((root / "results" / (stems[i] + ".png")).string());
    const Image ref = load_png((root / "refs" / (stems[i] + ".png")).string());
    const Mask mres = load_mask((root / "masks" / (stems[i] + "_result.png")).string(), 0.5);
    const Mask mref = load_mask((root / "masks" / (stems[i] + ".png")).string(), 0.5);
    CHECK(std::stod(cells[1]) == doctest::Approx(ssim(res, ref)).epsilon(1e-6));
    CHECK(std::stod(cells[2]) == doctest::Approx(edge_ssim(res, ref)).epsilon(1e-6));
    CHECK(std::stod(cells[3]) == doctest::Approx(oracle::iou(mres, mref)).epsilon(1e-6));
  }
  CHECK(lines[4].rfind("mean,", 0) == 0);
}
