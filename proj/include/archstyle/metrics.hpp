#pragma once

#include <optional>
#include <string>
#include <vector>

#include "archstyle/image.hpp"

namespace archstyle {

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean SSIM over all fully contained windows of the luminance of a and b.
double ssim(const Image& a, const Image& b, const SsimParams& p = {});
template <class Tag>
double ssim(const Plane<Tag>& a, const Plane<Tag>& b, const SsimParams& p = {});

struct CannyParams {
  double low = 0.1;
  double high = 0.2;
  double sigma = 1.4;

  void validate() const;
};

/// Gaussian smoothing, Sobel gradients, non-maximum suppression and
/// 8-connected double-threshold hysteresis. Border pixels are never edges.
EdgeMap canny(const Luma& l, const CannyParams& p = {});

double edge_ssim(const Image& a, const Image& b, const CannyParams& canny_params = {},
                 const SsimParams& ssim_params = {});

/// |a and b| / |a or b| on binary masks; 1 when both are empty.
double iou(const Mask& a, const Mask& b);

struct ProbRow {
  std::string id;
  std::optional<int> label;
  std::vector<double> probs;
};

/// Class posteriors, one row per image.
struct ProbTable {
  std::vector<ProbRow> rows;

  int classes() const { return rows.empty() ? 0 : static_cast<int>(rows.front().probs.size()); }
  bool has_labels() const;
  void validate() const;
};

/// CSV with header `id,label,p0,...` or `id,p0,...`.
ProbTable parse_prob_table(const std::string& csv_text);
ProbTable load_prob_table(const std::string& path);

/// Argmax with ties broken toward the lowest class index.
double top1_accuracy(const ProbTable& t);

/// exp(mean KL(p(y|x) || p(y))), averaged over `splits` contiguous chunks.
double inception_score(const ProbTable& t, int splits = 1);

struct EvalParams {
  SsimParams ssim;
  CannyParams canny;
  /// Shorter side used for evaluation; 0 keeps the reference resolution.
  int eval_size = 256;
  int is_splits = 1;
};

struct EvalRow {
  std::string id;
  double ssim = 0.0;
  double e_ssim = 0.0;
  double iou = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  EvalRow mean;
  std::optional<double> accuracy;
  std::optional<double> inception_score;
  std::vector<std::string> skipped;
};

/// Pairs `<results>/<stem>.png` with `<refs>/<stem>.png`; masks come from
/// `<masks>/<stem>.png` (reference) and `<masks>/<stem>_result.png`. Stems
/// missing any file are skipped and listed. Rows are sorted by stem.
EvalReport eval_corpus(const std::string& results_dir, const std::string& refs_dir,
                       const std::string& masks_dir, const std::optional<std::string>& probs_path,
                       const EvalParams& params = {});

std::string format_report_csv(const EvalReport& r, const EvalParams& params);

}  // namespace archstyle
