#include "archstyle/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "archstyle/errors.hpp"
#include "archstyle/segmentation.hpp"

namespace archstyle {

namespace {

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(size);
  const double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) k[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
  const double s = std::accumulate(k.begin(), k.end(), 0.0);
  for (double& v : k) v /= s;
  return k;
}

/// Valid-mode separable correlation; output is (w - n + 1) x (h - n + 1).
std::vector<double> filter_valid(std::span<const double> src, int w, int h, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int ow = w - n + 1;
  const int oh = h - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

double ssim_raw(std::span<const double> a, std::span<const double> b, int w, int h, const SsimParams& p) {
  if (w < p.window || h < p.window) {
    throw ValidationError("ssim: image smaller than the " + std::to_string(p.window) + "px window");
  }
  const auto k = gaussian_kernel(p.window, p.sigma);
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = filter_valid(a, w, h, k);
  const auto mu_b = filter_valid(b, w, h, k);
  const auto e_aa = filter_valid(aa, w, h, k);
  const auto e_bb = filter_valid(bb, w, h, k);
  const auto e_ab = filter_valid(ab, w, h, k);
  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  double acc = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    acc += ((2.0 * (ma * mb) + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return acc / static_cast<double>(mu_a.size());
}

std::vector<double> blur_replicate(std::span<const double> src, int w, int h, double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  const auto k = gaussian_kernel(2 * r + 1, sigma);
  auto clampi = [](int v, int lo, int hi) { return std::min(std::max(v, lo), hi); };
  std::vector<double> tmp(src.size());
  std::vector<double> out(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * src[static_cast<std::size_t>(y) * w + clampi(x + i, 0, w - 1)];
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp[static_cast<std::size_t>(clampi(y + i, 0, h - 1)) * w + x];
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ValidationError(where + ": '" + s + "' is not a number");
  return v;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

double ssim(const Image& a, const Image& b, const SsimParams& p) {
  require_same_dims(a.dims(), b.dims(), "ssim");
  return ssim(rgb_to_luma(a), rgb_to_luma(b), p);
}

template <class Tag>
double ssim(const Plane<Tag>& a, const Plane<Tag>& b, const SsimParams& p) {
  require_same_dims(a.dims(), b.dims(), "ssim");
  return ssim_raw(a.data(), b.data(), a.width(), a.height(), p);
}

template double ssim(const Luma&, const Luma&, const SsimParams&);
template double ssim(const EdgeMap&, const EdgeMap&, const SsimParams&);
template double ssim(const ScalarField&, const ScalarField&, const SsimParams&);

void CannyParams::validate() const {
  if (!(low > 0.0 && low < high)) throw ValidationError("canny thresholds need 0 < low < high");
  if (!(sigma > 0.0)) throw ValidationError("canny sigma must be positive");
}

EdgeMap canny(const Luma& l, const CannyParams& p) {
  p.validate();
  const int w = l.width();
  const int h = l.height();
  EdgeMap edges(w, h);
  if (w < 3 || h < 3) return edges;

  // Zero-minimum shift, snapped to a 2^-24 grid.
  const double lo = *std::min_element(l.data().begin(), l.data().end());
  constexpr double kGrid = 16777216.0;
  std::vector<double> src(l.data().size());
  for (std::size_t i = 0; i < src.size(); ++i) src[i] = std::round((l.data()[i] - lo) * kGrid) / kGrid;

  const auto s = blur_replicate(src, w, h, p.sigma);
  auto at = [&](int x, int y) { return s[static_cast<std::size_t>(y) * w + x]; };

  std::vector<double> mag(s.size(), 0.0);
  std::vector<int> dir(s.size(), 0);
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const double gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1) - at(x - 1, y - 1) -
                         2.0 * at(x - 1, y) - at(x - 1, y + 1)) / 4.0;
      const double gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1) - at(x - 1, y - 1) -
                         2.0 * at(x, y - 1) - at(x + 1, y - 1)) / 4.0;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      mag[i] = std::hypot(gx, gy);
      double angle = std::atan2(gy, gx) * 180.0 / 3.14159265358979323846;
      if (angle < 0) angle += 180.0;
      if (angle < 22.5 || angle >= 157.5) {
        dir[i] = 0;
      } else if (angle < 67.5) {
        dir[i] = 1;
      } else if (angle < 112.5) {
        dir[i] = 2;
      } else {
        dir[i] = 3;
      }
    }
  }

  static constexpr int kStep[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
  std::vector<unsigned char> state(s.size(), 0);  // 0 none, 1 weak, 2 strong
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double m = mag[i];
      if (m < p.low) continue;
      const int dx = kStep[dir[i]][0];
      const int dy = kStep[dir[i]][1];
      const double prev = mag[static_cast<std::size_t>(y - dy) * w + (x - dx)];
      const double next = mag[static_cast<std::size_t>(y + dy) * w + (x + dx)];
      if (m > prev && m >= next) state[i] = m >= p.high ? 2 : 1;
    }
  }

  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state[i] == 2) stack.push_back(i);
  }
  auto d = edges.data();
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    if (d[i] == 1.0) continue;
    d[i] = 1.0;
    const int x = static_cast<int>(i % w);
    const int y = static_cast<int>(i / w);
    for (int oy = -1; oy <= 1; ++oy) {
      for (int ox = -1; ox <= 1; ++ox) {
        const std::size_t j = static_cast<std::size_t>(y + oy) * w + (x + ox);
        if (state[j] != 0 && d[j] == 0.0) stack.push_back(j);
      }
    }
  }
  return edges;
}

double edge_ssim(const Image& a, const Image& b, const CannyParams& canny_params, const SsimParams& ssim_params) {
  require_same_dims(a.dims(), b.dims(), "edge_ssim");
  return ssim(canny(rgb_to_luma(a), canny_params), canny(rgb_to_luma(b), canny_params), ssim_params);
}

double iou(const Mask& a, const Mask& b) {
  require_same_dims(a.dims(), b.dims(), "iou");
  if (!is_binary(a) || !is_binary(b)) throw ValidationError("iou expects binary masks");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a.data()[i] == 1.0;
    const bool y = b.data()[i] == 1.0;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

bool ProbTable::has_labels() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const ProbRow& r) { return r.label.has_value(); });
}

void ProbTable::validate() const {
  if (rows.empty()) throw ValidationError("probability table has no rows");
  const std::size_t c = rows.front().probs.size();
  if (c < 2) throw ValidationError("probability table needs at least 2 classes");
  for (const auto& r : rows) {
    if (r.probs.size() != c) throw ValidationError("row '" + r.id + "' has a different class count");
    double sum = 0.0;
    for (double v : r.probs) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("row '" + r.id + "' has a negative probability");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ValidationError("row '" + r.id + "' does not sum to 1");
    if (r.label && (*r.label < 0 || *r.label >= static_cast<int>(c))) {
      throw ValidationError("row '" + r.id + "' has an out-of-range label");
    }
  }
}

ProbTable parse_prob_table(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.size() < 2 || header[0] != "id") throw ValidationError("probability CSV must start with an 'id' column");
  const bool labelled = header[1] == "label";
  const std::size_t first = labelled ? 2 : 1;
  for (std::size_t i = first; i < header.size(); ++i) {
    if (header[i] != "p" + std::to_string(i - first)) {
      throw ValidationError("probability CSV column '" + header[i] + "' should be p" + std::to_string(i - first));
    }
  }

  ProbTable t;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv_line(line);
    const std::string where = "probability CSV line " + std::to_string(line_no);
    if (cells.size() != header.size()) throw ValidationError(where + ": wrong column count");
    ProbRow r;
    r.id = cells[0];
    if (labelled && !cells[1].empty()) {
      const double lab = parse_double(cells[1], where);
      if (lab != std::floor(lab)) throw ValidationError(where + ": label must be an integer");
      r.label = static_cast<int>(lab);
    }
    for (std::size_t i = first; i < cells.size(); ++i) r.probs.push_back(parse_double(cells[i], where));
    t.rows.push_back(std::move(r));
  }
  t.validate();
  return t;
}

ProbTable load_prob_table(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read probability table " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_prob_table(ss.str());
}

double top1_accuracy(const ProbTable& t) {
  t.validate();
  if (!t.has_labels()) throw ValidationError("top-1 accuracy needs a label for every row");
  std::size_t correct = 0;
  for (const auto& r : t.rows) {
    const auto best = std::max_element(r.probs.begin(), r.probs.end()) - r.probs.begin();
    correct += best == *r.label;
  }
  return static_cast<double>(correct) / static_cast<double>(t.rows.size());
}

double inception_score(const ProbTable& t, int splits) {
  t.validate();
  const int n = static_cast<int>(t.rows.size());
  if (splits < 1 || splits > n) throw ValidationError("inception score splits must be in [1, rows]");
  const int c = t.classes();
  double total = 0.0;
  for (int s = 0; s < splits; ++s) {
    const int begin = s * n / splits;
    const int end = (s + 1) * n / splits;
    std::vector<double> marginal(c, 0.0);
    for (int i = begin; i < end; ++i) {
      for (int k = 0; k < c; ++k) marginal[k] += t.rows[i].probs[k];
    }
    for (double& m : marginal) m /= end - begin;
    double kl = 0.0;
    for (int i = begin; i < end; ++i) {
      for (int k = 0; k < c; ++k) {
        const double pk = t.rows[i].probs[k];
        if (pk > 0.0) kl += pk * std::log(pk / marginal[k]);
      }
    }
    total += std::exp(kl / (end - begin));
  }
  return total / splits;
}

EvalReport eval_corpus(const std::string& results_dir, const std::string& refs_dir, const std::string& masks_dir,
                       const std::optional<std::string>& probs_path, const EvalParams& params) {
  namespace fs = std::filesystem;
  for (const auto& d : {results_dir, refs_dir, masks_dir}) {
    if (!fs::is_directory(d)) throw ValidationError("not a directory: " + d);
  }
  params.canny.validate();

  std::vector<std::string> stems;
  for (const auto& e : fs::directory_iterator(results_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") stems.push_back(e.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());

  EvalReport report;
  for (const auto& stem : stems) {
    const fs::path ref = fs::path(refs_dir) / (stem + ".png");
    const fs::path ref_mask = fs::path(masks_dir) / (stem + ".png");
    const fs::path res_mask = fs::path(masks_dir) / (stem + "_result.png");
    if (!fs::exists(ref) || !fs::exists(ref_mask) || !fs::exists(res_mask)) {
      report.skipped.push_back(stem);
      continue;
    }
    Image b = load_png(ref.string());
    Image a = load_png((fs::path(results_dir) / (stem + ".png")).string());
    const Dims target = params.eval_size > 0 ? scaled_to_shorter_side(b.dims(), params.eval_size) : b.dims();
    if (b.dims() != target) b = resize_bilinear(b, target);
    if (a.dims() != target) a = resize_bilinear(a, target);
    Mask mb = load_mask(ref_mask.string());
    Mask ma = load_mask(res_mask.string());
    if (mb.dims() != target) mb = resize_nearest(mb, target);
    if (ma.dims() != target) ma = resize_nearest(ma, target);

    EvalRow row;
    row.id = stem;
    row.ssim = ssim(a, b, params.ssim);
    row.e_ssim = edge_ssim(a, b, params.canny, params.ssim);
    row.iou = iou(ma, mb);
    report.rows.push_back(row);
  }
  if (report.rows.empty()) throw ValidationError("no result stems matched the reference and mask directories");

  report.mean.id = "mean";
  for (const auto& r : report.rows) {
    report.mean.ssim += r.ssim;
    report.mean.e_ssim += r.e_ssim;
    report.mean.iou += r.iou;
  }
  const double n = static_cast<double>(report.rows.size());
  report.mean.ssim /= n;
  report.mean.e_ssim /= n;
  report.mean.iou /= n;

  if (probs_path) {
    const ProbTable t = load_prob_table(*probs_path);
    if (t.has_labels()) report.accuracy = top1_accuracy(t);
    report.inception_score = inception_score(t, params.is_splits);
  }
  return report;
}

std::string format_report_csv(const EvalReport& r, const EvalParams& p) {
  std::ostringstream out;
  out << "# params: ssim_window=" << p.ssim.window << " ssim_sigma=" << fmt(p.ssim.sigma)
      << " k1=" << fmt(p.ssim.k1) << " k2=" << fmt(p.ssim.k2) << " canny_sigma=" << fmt(p.canny.sigma)
      << " canny_low=" << fmt(p.canny.low) << " canny_high=" << fmt(p.canny.high)
      << " eval_size=" << p.eval_size << " is_splits=" << p.is_splits << "\n";
  out << "id,ssim,e_ssim,iou\n";
  auto row = [&](const EvalRow& e) {
    out << e.id << "," << fmt(e.ssim) << "," << fmt(e.e_ssim) << "," << fmt(e.iou) << "\n";
  };
  for (const auto& e : r.rows) row(e);
  row(r.mean);
  if (r.accuracy) out << "# accuracy=" << fmt(*r.accuracy) << "\n";
  if (r.inception_score) out << "# inception_score=" << fmt(*r.inception_score) << "\n";
  out << "# skipped=" << r.skipped.size() << "\n";
  return out.str();
}

}  // namespace archstyle
