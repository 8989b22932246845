#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "archstyle/blending.hpp"
#include "archstyle/cli.hpp"
#include "archstyle/errors.hpp"
#include "archstyle/metrics.hpp"
#include "archstyle/network.hpp"
#include "archstyle/pipeline.hpp"
#include "archstyle/segmentation.hpp"
#include "archstyle/trainer.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace archstyle;
namespace fs = std::filesystem;

namespace {

constexpr double kGradTol = 1e-4;
constexpr double kGradSeconds = 30.0;
constexpr double kAdainTol = 1e-5;
constexpr double kLossDrop = 0.30;
constexpr double kLuminanceTol = 0.15;
constexpr double kPsnrFloor = 40.0;
constexpr double kEnergySlack = 1e-9;
constexpr double kSolverAgreement = 1e-3;
constexpr double kMetricTol = 1e-6;
constexpr double kEndToEndSeconds = 10.0;

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("%s %d %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "archstyle_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

NetConfig toy_net(std::uint64_t seed = 1) {
  NetConfig cfg;
  cfg.base_width = 16;
  cfg.n_disc_scales = 2;
  cfg.image_size = 32;
  cfg.seed = seed;
  return cfg;
}

void gradient_checks() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  const double g = gradcheck::gradient_loss_worst(50, rng);
  const double k = gradcheck::kl_loss_worst(50, rng);
  const double l = gradcheck::l1_loss_worst(50, rng);
  const double a = gradcheck::lsgan_worst(50, rng);
  const double worst = std::max({g, k, l, a});
  const double secs = seconds_since(t0);
  report(1, "gradient checks", worst < kGradTol && secs < kGradSeconds,
         fmt("worst relative error %.2e (gradient %.1e, ", worst, g, k) + fmt("kl %.1e, l1 %.1e, ", k, l) +
             fmt("lsgan %.1e) in %.1f s", a, secs));
}

void adain_contract() {
  std::mt19937_64 rng(102);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> um(-3.0, 3.0), us(0.2, 3.0), scale(0.1, 5.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int c = 1 + trial % 5;
    const int h = 4 + trial % 7, w = 5 + trial % 6;
    nn::Tensor f(nn::Shape{1, c, h, w});
    const double s = scale(rng), offset = um(rng);
    for (float& v : f.values()) v = static_cast<float>(offset + s * n(rng));
    std::vector<double> mean(c), sd(c);
    for (int k = 0; k < c; ++k) {
      mean[k] = um(rng);
      sd[k] = us(rng);
    }
    const nn::Tensor y = adain(f, mean, sd);
    const int hw = h * w;
    for (int k = 0; k < c; ++k) {
      double m = 0.0, v = 0.0;
      for (int i = 0; i < hw; ++i) m += y[k * hw + i];
      m /= hw;
      for (int i = 0; i < hw; ++i) v += (y[k * hw + i] - m) * (y[k * hw + i] - m);
      worst = std::max({worst, std::abs(m - mean[k]), std::abs(std::sqrt(v / hw) - sd[k])});
    }
  }
  report(2, "AdaIN statistics", worst < kAdainTol, fmt("worst mean/std error %.2e over 100 maps", worst));
}

void shape_suite() {
  bool ok = true;
  std::string detail;
  std::mt19937_64 rng(103);
  NetConfig cfg = toy_net();
  cfg.n_disc_scales = 3;
  const TranslatorBundle b(cfg);
  for (int size : {32, 64, 256}) {
    const Image x = oracle::random_image(size, size, rng);
    const ContentCode c = encode_content(b, Domain::kOne, x);
    const ContentCode z = map_domain(b, Domain::kTwo, c);
    const Image y = generate(b, Domain::kTwo, z, sample_style(rng));
    ok = ok && c.features.shape().h == size / 4 && c.features.shape().w == size / 4;
    ok = ok && z.features.shape() == c.features.shape() && y.dims() == x.dims();
    if (size >= cfg.min_disc_size()) {
      const auto maps = discriminate(b, Domain::kTwo, y);
      ok = ok && static_cast<int>(maps.size()) == cfg.n_disc_scales;
      for (std::size_t k = 0; k < maps.size(); ++k) ok = ok && maps[k].shape().h == size / (16 << k);
      detail += std::to_string(size) + ": " + std::to_string(maps.size()) + " disc maps; ";
    } else {
      bool threw = false;
      try {
        discriminate(b, Domain::kTwo, y);
      } catch (const ValidationError&) {
        threw = true;
      }
      ok = ok && threw;
      detail += std::to_string(size) + ": disc rejects; ";
    }
  }
  report(3, "shape suite", ok, detail + "content at H/4 x W/4, outputs keep dims");
}

void toy_training() {
  const auto t0 = std::chrono::steady_clock::now();
  const ToyCorpus corpus = make_toy_corpus(64, 32, 7);
  TranslatorBundle b(toy_net());
  TrainOptions o;
  o.iterations = 500;
  o.batch_size = 2;
  o.seed = 3;
  std::vector<double> totals;
  train(b, corpus.domain1, corpus.domain2, o, [&](int, const LossReport& r) { totals.push_back(r.total); });
  auto ma20 = [&](int it) {
    double acc = 0.0;
    for (int k = it - 20; k < it; ++k) acc += totals[k];
    return acc / 20.0;
  };
  const double early = ma20(20), late = ma20(500);
  const double drop = 1.0 - late / early;

  const double target = corpus_mean_luminance(corpus.domain2);
  double lum = 0.0;
  for (int i = 0; i < 32; ++i) {
    lum += mean_luminance(translate(b, corpus.domain1[i], StyleSource{corpus.domain2[i]}, Direction::kOneToTwo));
  }
  lum /= 32.0;

  TranslatorBundle bg(toy_net(2));
  TrainOptions ob = o;
  ob.iterations = 5;
  ob.weights = LossWeights::background();
  bool zeros = true;
  train(bg, corpus.domain1, corpus.domain2, ob,
        [&](int, const LossReport& r) { zeros = zeros && r.terms.gd == 0.0 && r.terms.kl == 0.0; });

  const bool a = drop >= kLossDrop, l = std::abs(lum - target) <= kLuminanceTol;
  report(4, "toy training", a && l && zeros,
         fmt("(a) ma20 %.3f -> %.3f, ", early, late) + fmt("drop %.1f%%; (b) luminance %.3f vs target %.3f; ",
                                                           100.0 * drop, lum, target) +
             std::string("(c) bg gd/kl ") + (zeros ? "exactly 0" : "nonzero") + fmt(" (%.0f s)", seconds_since(t0)));
}

void blending() {
  std::mt19937_64 rng(105);
  double psnr = std::numeric_limits<double>::infinity();
  for (BlendSolver s : {BlendSolver::kSpectral, BlendSolver::kConjugateGradient}) {
    const Image x = oracle::random_image(48, 40, rng);
    BlendParams p;
    p.solver = s;
    psnr = std::min(psnr, oracle::psnr(gp_solve(BlendProblem{x, x, oracle::random_mask(48, 40, rng), p}).image, x));
  }

  bool monotone = true;
  for (int trial = 0; trial < 6; ++trial) {
    BlendParams p;
    p.iterations = 4;
    p.solver = trial % 2 ? BlendSolver::kConjugateGradient : BlendSolver::kSpectral;
    const BlendResult r = gp_solve(BlendProblem{oracle::random_image(64, 48, rng), oracle::random_image(64, 48, rng),
                                                oracle::random_mask(64, 48, rng), p});
    for (std::size_t i = 1; i < r.energy_trace.size(); ++i) {
      monotone = monotone && r.energy_trace[i] <= r.energy_trace[i - 1] * (1.0 + kEnergySlack);
    }
  }

  double gap = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    BlendProblem p{oracle::random_image(32, 32, rng), oracle::random_image(32, 32, rng),
                   oracle::random_mask(32, 32, rng), BlendParams{}};
    p.params.cg_tol = 1e-10;
    const Image a = gp_solve(p).image;
    p.params.solver = BlendSolver::kConjugateGradient;
    const Image b = gp_solve(p).image;
    for (std::size_t i = 0; i < a.data().size(); ++i) gap = std::max(gap, std::abs(a.data()[i] - b.data()[i]));
  }

  const fixture::Facade f = fixture::facade(128, 96);
  const Image blended = blend_pipeline(f.translated, f.source, f.mask, BlendParams{}).image;
  const double before = edge_ssim(f.translated, f.source);
  const double after = edge_ssim(blended, f.source);

  const bool ok = psnr >= kPsnrFloor && monotone && gap <= kSolverAgreement && after > before;
  report(5, "blending", ok,
         fmt("(a) PSNR %.1f dB; (b) energy ", psnr) + (monotone ? "non-increasing" : "increased") +
             fmt("; (c) spectral vs CG %.2e; ", gap) + fmt("(d) edge-SSIM %.4f -> %.4f", before, after));
}

void metric_oracles() {
  std::mt19937_64 rng(106);
  int iou_mismatch = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Mask a = oracle::random_mask(16, 16, rng, 0.1 + 0.8 * (trial % 10) / 9.0);
    const Mask b = oracle::random_mask(16, 16, rng, 0.5);
    iou_mismatch += iou(a, b) != oracle::iou(a, b);
  }

  const int classes = 5;
  ProbTable uniform, onehot;
  for (int i = 0; i < 10; ++i) {
    uniform.rows.push_back(ProbRow{"u" + std::to_string(i), std::nullopt, std::vector<double>(classes, 1.0 / classes)});
    std::vector<double> p(classes, 0.0);
    p[i % classes] = 1.0;
    onehot.rows.push_back(ProbRow{"h" + std::to_string(i), std::nullopt, p});
  }
  const double is_u = inception_score(uniform), is_h = inception_score(onehot);

  const fixture::Facade f = fixture::facade(96, 72);
  Image dim = f.source;
  for (double& v : dim.data()) v = 0.05 + 0.7 * v;
  Image bright = dim;
  for (double& v : bright.data()) v += 0.2;
  const double self_ssim = ssim(f.source, f.source), self_edge = edge_ssim(f.source, f.source);
  const double shifted = edge_ssim(dim, bright);

  const bool ok = iou_mismatch == 0 && std::abs(is_u - 1.0) <= kMetricTol &&
                  std::abs(is_h - classes) <= kMetricTol && self_ssim == 1.0 && self_edge == 1.0 &&
                  std::abs(shifted - 1.0) <= kMetricTol;
  report(6, "metric oracles",
         ok, fmt("iou mismatches %.0f/1000; IS uniform %.9f, one-hot %.9f; ", iou_mismatch, is_u, is_h) +
                 fmt("ssim(x,x) %.6f, edge_ssim(x,x) %.6f, ", self_ssim, self_edge) +
                 fmt("shift +0.2 edge_ssim %.9f", shifted));
}

void partition_identity() {
  std::mt19937_64 rng(107);
  std::uniform_int_distribution<int> dim(1, 24);
  int bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int w = dim(rng), h = dim(rng);
    const Image x = oracle::random_image(w, h, rng);
    const Mask m = oracle::random_mask(w, h, rng);
    const FillPolicy fill = trial % 2 ? FillPolicy::kZero : FillPolicy::kRegionMean;
    bad += !(merge_regions(split_regions(x, m, fill)) == x);
  }
  report(7, "partition identity", bad == 0, fmt("%.0f/1000 cases differ", bad));
}

void determinism() {
  const fs::path root = fresh_dir("determinism");
  bool ok = run_cli({"--seed", "1", "--out-dir", (root / "corpus").string(), "toy-corpus", "--count", "6"}) == 0;
  auto train = [&](const std::string& out, const std::string& branch) {
    return run_cli({"--seed", "5", "--out-dir", (root / out).string(), "--set", "base_width=16", "--set",
                    "n_disc_scales=2", "--size", "32", "train", "--domain1", (root / "corpus" / "domain1").string(),
                    "--domain2", (root / "corpus" / "domain2").string(), "--branch", branch, "--iterations", "8"});
  };
  ok = ok && train("a", "fg") == 0 && train("b", "fg") == 0 && train("a", "bg") == 0;
  const bool logs = ok && read_file(root / "a" / "fg_loss.csv") == read_file(root / "b" / "fg_loss.csv") &&
                    !read_file(root / "a" / "fg_loss.csv").empty();

  const fixture::Facade f = fixture::facade(48, 40);
  save_png(f.source, (root / "input.png").string());
  save_mask_png(f.mask, (root / "mask.png").string());
  save_png(f.translated, (root / "style.png").string());
  auto transfer = [&](const std::string& out) {
    return run_cli({"--size", "32", "transfer", "--input", (root / "input.png").string(), "--input-mask",
                    (root / "mask.png").string(), "--style", (root / "style.png").string(),
                    "--style-mask", (root / "mask.png").string(), "--fg-ckpt", (root / "a" / "fg.ckpt").string(),
                    "--bg-ckpt", (root / "a" / "bg.ckpt").string(), "--blend", "--output", (root / out).string()});
  };
  ok = ok && transfer("t1.png") == 0 && transfer("t2.png") == 0;
  const bool bytes = ok && read_file(root / "t1.png") == read_file(root / "t2.png");
  report(8, "determinism", logs && bytes,
         std::string("train loss logs ") + (logs ? "identical" : "differ") + "; transfer PNGs " +
             (bytes ? "byte-identical" : "differ"));
}

void end_to_end() {
  NetConfig cfg;
  cfg.seed = 11;
  const TranslatorBundle fg(cfg);
  cfg.seed = 12;
  const TranslatorBundle bg(cfg);
  const fixture::Facade a = fixture::facade(256, 256, 1);
  const fixture::Facade s = fixture::facade(256, 256, 2);
  TransferInputs in{a.source, a.mask, s.translated, s.mask};
  TransferOptions opts;
  opts.size = 256;
  opts.blend = BlendParams{};

  const auto t0 = std::chrono::steady_clock::now();
  const TransferResult r = transfer_pipeline(fg, bg, in, opts);
  const double secs = seconds_since(t0);

  const fs::path out = fresh_dir("end_to_end") / "result.png";
  save_png(r.image, out.string());
  const Dims d = load_png(out.string()).dims();
  report(9, "end-to-end transfer + blend", secs < kEndToEndSeconds && d == Dims{256, 256},
         fmt("%.2f s at 256x256 with base width %.0f, ", secs, cfg.base_width) +
             "PNG " + to_string(d));
}

}  // namespace

int main() {
  gradient_checks();
  adain_contract();
  shape_suite();
  toy_training();
  blending();
  metric_oracles();
  partition_identity();
  determinism();
  end_to_end();
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
