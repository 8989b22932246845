#include "archstyle/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "archstyle/checkpoint.hpp"
#include "archstyle/config.hpp"
#include "archstyle/errors.hpp"
#include "archstyle/pipeline.hpp"
#include "archstyle/trainer.hpp"

namespace archstyle {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir = ".";
  std::optional<int> size;
  std::string config_path;
  std::vector<std::string> overrides;
};

struct TrainArgs {
  std::string domain1;
  std::string domain2;
  std::string masks1;
  std::string masks2;
  std::string branch = "fg";
  std::string name;
  std::optional<int> iterations;
};

struct TransferArgs {
  std::string input;
  std::string input_mask;
  std::string style;
  std::string style_mask;
  std::string fg_ckpt;
  std::string bg_ckpt;
  std::string output;
  std::string direction = "12";
  bool blend = false;
};

struct BlendArgs {
  std::string style;
  std::string geo;
  std::string mask;
  std::string output;
  std::optional<double> beta;
  std::optional<int> iters;
  std::string solver;
};

struct EvalArgs {
  std::string results;
  std::string refs;
  std::string masks;
  std::string probs;
  std::string output;
};

struct InterpolateArgs {
  std::string input;
  std::string style_a;
  std::string style_b;
  std::string ckpt;
  std::string direction = "12";
  int frames = 5;
};

struct ToyArgs {
  int count = 64;
};

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw ValidationError(what + " not found: " + path);
}

void require_dir(const std::string& path, const std::string& what) {
  if (!fs::is_directory(path)) throw ValidationError(what + " is not a directory: " + path);
}

/// Runs `fn`, prefixing any error with the pipeline stage.
template <class Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(name + ": " + e.what());
  } catch (const CheckpointError& e) {
    throw CheckpointError(name + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(name + ": " + e.what());
  }
}

RunConfig load_run_config(const Globals& g) {
  RunConfig cfg;
  if (!g.config_path.empty()) {
    require_file(g.config_path, "config file");
    apply_key_values(load_key_values(g.config_path), cfg);
  }
  if (!g.overrides.empty()) {
    std::string text;
    for (const auto& o : g.overrides) text += o + "\n";
    apply_key_values(parse_key_values(text), cfg);
  }
  if (g.seed_given) {
    cfg.seed = g.seed;
    cfg.explicit_keys.insert("seed");
  }
  cfg.net.seed = cfg.seed;
  return cfg;
}

Direction parse_direction(const std::string& s) {
  if (s == "12") return Direction::kOneToTwo;
  if (s == "21") return Direction::kTwoToOne;
  throw ValidationError("direction must be 12 or 21, got '" + s + "'");
}

std::vector<fs::path> list_pngs(const std::string& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Image> load_domain(const std::string& dir, const std::string& masks_dir, bool foreground,
                               const RunConfig& cfg) {
  std::vector<Image> images;
  for (const auto& p : list_pngs(dir)) {
    Image img = load_png(p.string());
    if (!masks_dir.empty()) {
      const fs::path mp = fs::path(masks_dir) / p.filename();
      require_file(mp.string(), "training mask");
      const RegionPair rp = split_regions(img, load_mask(mp.string(), cfg.mask_threshold), cfg.fill);
      img = foreground ? rp.foreground : rp.background;
    }
    images.push_back(std::move(img));
  }
  if (images.size() < 2) throw ValidationError("training needs at least 2 PNG images in " + dir);
  return images;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

int cmd_train(const Globals& g, const TrainArgs& a) {
  require_dir(a.domain1, "domain1 corpus");
  require_dir(a.domain2, "domain2 corpus");
  if (!a.masks1.empty()) require_dir(a.masks1, "domain1 masks");
  if (!a.masks2.empty()) require_dir(a.masks2, "domain2 masks");
  if (a.branch != "fg" && a.branch != "bg") throw ValidationError("branch must be fg or bg");

  RunConfig cfg = load_run_config(g);
  if (g.size) cfg.net.image_size = *g.size;
  if (a.iterations) cfg.iterations = *a.iterations;
  if (a.branch == "bg") {
    if (!cfg.explicit_keys.count("lambda_gd")) cfg.weights.lambda_gd = 0.0;
    if (!cfg.explicit_keys.count("lambda_kl")) cfg.weights.lambda_kl = 0.0;
  }
  cfg.net.validate();
  cfg.weights.validate();
  if (cfg.iterations < 1 || cfg.batch_size < 1) throw ValidationError("iterations and batch_size must be >= 1");

  const bool fg = a.branch == "fg";
  const auto d1 = stage("load corpus", [&] { return load_domain(a.domain1, a.masks1, fg, cfg); });
  const auto d2 = stage("load corpus", [&] { return load_domain(a.domain2, a.masks2, fg, cfg); });

  fs::create_directories(g.out_dir);
  const std::string name = a.name.empty() ? a.branch : a.name;
  const fs::path log_path = fs::path(g.out_dir) / (name + "_loss.csv");
  std::ofstream log(log_path);
  if (!log) throw IoError("cannot write " + log_path.string());
  log << "iteration";
  for (const auto t : kTermNames) log << "," << t;
  log << ",total,discriminator\n";

  TranslatorBundle bundle(cfg.net);
  TrainOptions opts;
  opts.iterations = cfg.iterations;
  opts.batch_size = cfg.batch_size;
  opts.adam = cfg.adam;
  opts.weights = cfg.weights;
  opts.seed = cfg.seed;

  int current = 0;
  try {
    train(bundle, d1, d2, opts, [&](int it, const LossReport& r) {
      current = it;
      log << it;
      for (double v : r.terms.as_array()) log << "," << fmt(v);
      log << "," << fmt(r.total) << "," << fmt(r.discriminator) << "\n";
      if (cfg.checkpoint_every > 0 && it % cfg.checkpoint_every == 0) {
        save_checkpoint(bundle, (fs::path(g.out_dir) / (name + "_iter" + std::to_string(it) + ".ckpt")).string());
      }
    });
  } catch (const NonFiniteLossError& e) {
    log.flush();
    std::cerr << "error: non-finite loss term '" << e.term() << "' at iteration " << current + 1 << "\n";
    return kExitRuntime;
  }
  log.close();
  const fs::path ckpt = fs::path(g.out_dir) / (name + ".ckpt");
  save_checkpoint(bundle, ckpt.string());
  std::cout << "wrote " << ckpt.string() << " and " << log_path.string() << "\n";
  return kExitOk;
}

int cmd_transfer(const Globals& g, const TransferArgs& a) {
  require_file(a.input, "input image");
  require_file(a.input_mask, "input mask");
  require_file(a.style, "style image");
  require_file(a.style_mask, "style mask");
  require_file(a.fg_ckpt, "foreground checkpoint");
  require_file(a.bg_ckpt, "background checkpoint");
  RunConfig cfg = load_run_config(g);

  TransferOptions opts;
  opts.direction = parse_direction(a.direction);
  opts.size = g.size ? *g.size : cfg.infer_size;
  opts.fill = cfg.fill;
  if (a.blend) {
    cfg.blend.validate();
    opts.blend = cfg.blend;
  }

  TransferInputs in;
  stage("load inputs", [&] {
    in.input = load_png(a.input);
    in.input_mask = load_mask(a.input_mask, cfg.mask_threshold);
    in.style = load_png(a.style);
    in.style_mask = load_mask(a.style_mask, cfg.mask_threshold);
  });
  const TranslatorBundle fg = stage("load foreground checkpoint", [&] { return load_checkpoint(a.fg_ckpt); });
  const TranslatorBundle bg = stage("load background checkpoint", [&] { return load_checkpoint(a.bg_ckpt); });
  const TransferResult r = stage("translate", [&] { return transfer_pipeline(fg, bg, in, opts); });

  const std::string out = a.output.empty() ? (fs::path(g.out_dir) / "transfer.png").string() : a.output;
  stage("write output", [&] {
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    save_png(r.image, out);
  });
  if (r.blend && !r.blend->converged) std::cerr << "warning: blend solver did not reach cg_tol\n";
  std::cout << "wrote " << out << "\n";
  return kExitOk;
}

int cmd_blend(const Globals& g, const BlendArgs& a) {
  require_file(a.style, "style constraint image");
  require_file(a.geo, "geometry constraint image");
  require_file(a.mask, "mask");
  RunConfig cfg = load_run_config(g);
  if (a.beta) cfg.blend.beta = *a.beta;
  if (a.iters) cfg.blend.iterations = *a.iters;
  if (!a.solver.empty()) cfg.blend.solver = parse_blend_solver(a.solver);
  cfg.blend.validate();

  const Image style = load_png(a.style);
  const Image geo = load_png(a.geo);
  const Mask mask = load_mask(a.mask, cfg.mask_threshold);
  const BlendResult r = stage("blend", [&] { return blend_pipeline(style, geo, mask, cfg.blend); });

  const std::string out = a.output.empty() ? (fs::path(g.out_dir) / "blend.png").string() : a.output;
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  save_png(r.image, out);
  std::cout << "energy";
  for (double e : r.energy_trace) std::cout << " " << fmt(e);
  std::cout << "\nresidual " << fmt(r.residual) << (r.converged ? "" : " (not converged)") << "\n";
  std::cout << "wrote " << out << "\n";
  return kExitOk;
}

int cmd_eval(const Globals& g, const EvalArgs& a) {
  require_dir(a.results, "results");
  require_dir(a.refs, "refs");
  require_dir(a.masks, "masks");
  if (!a.probs.empty()) require_file(a.probs, "probability table");
  RunConfig cfg = load_run_config(g);
  if (g.size) cfg.eval.eval_size = *g.size;

  const std::optional<std::string> probs = a.probs.empty() ? std::nullopt : std::optional<std::string>(a.probs);
  const EvalReport r = eval_corpus(a.results, a.refs, a.masks, probs, cfg.eval);
  if (!r.skipped.empty()) {
    std::cerr << "warning: skipped " << r.skipped.size() << " unmatched stem(s):";
    for (const auto& s : r.skipped) std::cerr << " " << s;
    std::cerr << "\n";
  }
  const std::string out = a.output.empty() ? (fs::path(g.out_dir) / "eval_report.csv").string() : a.output;
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  std::ofstream f(out);
  if (!f) throw IoError("cannot write " + out);
  f << format_report_csv(r, cfg.eval);
  std::cout << "mean ssim " << fmt(r.mean.ssim) << " e_ssim " << fmt(r.mean.e_ssim) << " iou " << fmt(r.mean.iou)
            << "\nwrote " << out << "\n";
  return kExitOk;
}

std::string frame_name(int i, double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "frame_%03d_t%.3f.png", i, t);
  return buf;
}

int cmd_interpolate(const Globals& g, const InterpolateArgs& a) {
  require_file(a.input, "input image");
  require_file(a.style_a, "style image a");
  require_file(a.style_b, "style image b");
  require_file(a.ckpt, "checkpoint");
  if (a.frames < 2) throw ValidationError("interpolate needs --frames >= 2");
  RunConfig cfg = load_run_config(g);
  const Direction dir = parse_direction(a.direction);
  const int size = g.size ? *g.size : cfg.infer_size;

  const TranslatorBundle b = stage("load checkpoint", [&] { return load_checkpoint(a.ckpt); });
  const Image input = load_png(a.input);
  const Dims work = inference_dims(input.dims(), size);
  const Image x = input.dims() == work ? input : resize_bilinear(input, work);
  auto style_of = [&](const std::string& path) {
    const Image s = load_png(path);
    const Dims d = inference_dims(s.dims(), size);
    return encode_style(b, target_of(dir), s.dims() == d ? s : resize_bilinear(s, d));
  };
  const StyleCode sa = style_of(a.style_a);
  const StyleCode sb = style_of(a.style_b);

  fs::create_directories(g.out_dir);
  for (int i = 0; i < a.frames; ++i) {
    const double t = static_cast<double>(i) / (a.frames - 1);
    Image out = translate(b, x, StyleSource{interpolate_style(sa, sb, t)}, dir);
    if (out.dims() != input.dims()) out = resize_bilinear(out, input.dims());
    save_png(out, (fs::path(g.out_dir) / frame_name(i, t)).string());
  }
  std::cout << "wrote " << a.frames << " frames to " << g.out_dir << "\n";
  return kExitOk;
}

int cmd_toy_corpus(const Globals& g, const ToyArgs& a) {
  load_run_config(g);
  const int size = g.size ? *g.size : 32;
  const ToyCorpus c = make_toy_corpus(a.count, size, g.seed);
  for (const auto& [sub, images] : {std::pair{"domain1", &c.domain1}, std::pair{"domain2", &c.domain2}}) {
    const fs::path dir = fs::path(g.out_dir) / sub;
    fs::create_directories(dir);
    for (std::size_t i = 0; i < images->size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "%04zu.png", i);
      save_png((*images)[i], (dir / name).string());
    }
  }
  std::cout << "wrote " << a.count << " images per domain to " << g.out_dir << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Mask-driven two-branch architectural style transfer"};
  app.require_subcommand(1);

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--size", g.size, "Working size (train crop, inference shorter side, eval shorter side)")
      ->check(CLI::PositiveNumber);
  app.add_option("--config", g.config_path, "key=value config file");
  app.add_option("--set", g.overrides, "Override a config key, key=value (repeatable)");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train one branch on two domain corpora");
  train_cmd->add_option("--domain1", ta.domain1, "Domain 1 image directory")->required();
  train_cmd->add_option("--domain2", ta.domain2, "Domain 2 image directory")->required();
  train_cmd->add_option("--masks1", ta.masks1, "Masks for domain 1 (same file names)");
  train_cmd->add_option("--masks2", ta.masks2, "Masks for domain 2 (same file names)");
  train_cmd->add_option("--branch", ta.branch, "fg or bg")->check(CLI::IsMember({"fg", "bg"}));
  train_cmd->add_option("--name", ta.name, "Output file stem (default: branch)");
  train_cmd->add_option("--iterations", ta.iterations, "Training iterations")->check(CLI::PositiveNumber);

  TransferArgs tr;
  auto* transfer_cmd = app.add_subcommand("transfer", "Translate an image with fg/bg checkpoints");
  transfer_cmd->add_option("--input", tr.input)->required();
  transfer_cmd->add_option("--input-mask", tr.input_mask)->required();
  transfer_cmd->add_option("--style", tr.style)->required();
  transfer_cmd->add_option("--style-mask", tr.style_mask)->required();
  transfer_cmd->add_option("--fg-ckpt", tr.fg_ckpt)->required();
  transfer_cmd->add_option("--bg-ckpt", tr.bg_ckpt)->required();
  transfer_cmd->add_option("--output", tr.output, "Output PNG (default: <out-dir>/transfer.png)");
  transfer_cmd->add_option("--direction", tr.direction, "12 or 21");
  transfer_cmd->add_flag("--blend", tr.blend, "Run the Gaussian-Poisson blend against the input");

  BlendArgs bl;
  auto* blend_cmd = app.add_subcommand("blend", "Blend a translated image with its source");
  blend_cmd->add_option("--style", bl.style, "Translated image (style constraint)")->required();
  blend_cmd->add_option("--geo", bl.geo, "Source image (geometry constraint)")->required();
  blend_cmd->add_option("--mask", bl.mask)->required();
  blend_cmd->add_option("--output", bl.output, "Output PNG (default: <out-dir>/blend.png)");
  blend_cmd->add_option("--beta", bl.beta);
  blend_cmd->add_option("--iters", bl.iters);
  blend_cmd->add_option("--solver", bl.solver)->check(CLI::IsMember({"spectral", "cg"}));

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score a result corpus against references");
  eval_cmd->add_option("--results", ev.results)->required();
  eval_cmd->add_option("--refs", ev.refs)->required();
  eval_cmd->add_option("--masks", ev.masks)->required();
  eval_cmd->add_option("--probs", ev.probs, "Class posterior CSV");
  eval_cmd->add_option("--output", ev.output, "Report CSV (default: <out-dir>/eval_report.csv)");

  InterpolateArgs ip;
  auto* interp_cmd = app.add_subcommand("interpolate", "Translate with interpolated style codes");
  interp_cmd->add_option("--input", ip.input)->required();
  interp_cmd->add_option("--style-a", ip.style_a)->required();
  interp_cmd->add_option("--style-b", ip.style_b)->required();
  interp_cmd->add_option("--ckpt", ip.ckpt)->required();
  interp_cmd->add_option("--direction", ip.direction, "12 or 21");
  interp_cmd->add_option("--frames", ip.frames, "Number of frames, t evenly spaced over [0, 1]");

  ToyArgs ty;
  auto* toy_cmd = app.add_subcommand("toy-corpus", "Write the synthetic two-domain corpus");
  toy_cmd->add_option("--count", ty.count, "Images per domain")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(g, ta);
    if (transfer_cmd->parsed()) return cmd_transfer(g, tr);
    if (blend_cmd->parsed()) return cmd_blend(g, bl);
    if (eval_cmd->parsed()) return cmd_eval(g, ev);
    if (interp_cmd->parsed()) return cmd_interpolate(g, ip);
    if (toy_cmd->parsed()) return cmd_toy_corpus(g, ty);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace archstyle
