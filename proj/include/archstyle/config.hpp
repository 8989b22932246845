#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "archstyle/blending.hpp"
#include "archstyle/losses.hpp"
#include "archstyle/metrics.hpp"
#include "archstyle/network.hpp"
#include "archstyle/segmentation.hpp"

namespace archstyle {

using KeyValues = std::map<std::string, std::string>;

/// `key = value` lines; `#` starts a comment. Duplicate keys are rejected.
KeyValues parse_key_values(const std::string& text);
KeyValues load_key_values(const std::string& path);

/// Maps aliases (lambda_cs, lambda_cc) onto their canonical names.
std::string canonical_key(const std::string& key);

struct RunConfig {
  NetConfig net;
  LossWeights weights;
  nn::AdamParams adam;
  BlendParams blend;
  EvalParams eval;
  int iterations = 1000;
  int batch_size = 2;
  int checkpoint_every = 0;
  double mask_threshold = 0.5;
  FillPolicy fill = FillPolicy::kRegionMean;
  int infer_size = 512;
  std::uint64_t seed = 0;
  /// Canonical keys that were set explicitly.
  std::set<std::string> explicit_keys;
};

/// Unknown keys and malformed values raise ValidationError.
void apply_key_values(const KeyValues& kv, RunConfig& cfg);

std::string net_config_to_text(const NetConfig& c);
NetConfig net_config_from_text(const std::string& text);

}  // namespace archstyle
