#pragma once

#include <optional>

#include "archstyle/blending.hpp"
#include "archstyle/network.hpp"
#include "archstyle/segmentation.hpp"

namespace archstyle {

struct TransferInputs {
  Image input;
  Mask input_mask;
  Image style;
  Mask style_mask;
};

struct TransferOptions {
  Direction direction = Direction::kOneToTwo;
  /// Shorter side used for inference (rounded to a multiple of 4).
  int size = 512;
  FillPolicy fill = FillPolicy::kRegionMean;
  std::optional<BlendParams> blend;
};

struct TransferResult {
  Image image;
  /// Composite before blending, at input resolution.
  Image composite;
  std::optional<BlendResult> blend;
};

/// Inference dims: shorter side scaled to `size`, each side rounded to a multiple of 4, at least 32.
Dims inference_dims(Dims d, int size);

/// Splits both images by their masks, translates each branch with its own
/// bundle, composites with the input mask and optionally blends against the
/// input. Output has the input's dims.
TransferResult transfer_pipeline(const TranslatorBundle& fg, const TranslatorBundle& bg, const TransferInputs& in,
                                 const TransferOptions& opts);

}  // namespace archstyle
