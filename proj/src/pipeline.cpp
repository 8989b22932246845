#include "archstyle/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "archstyle/errors.hpp"

namespace archstyle {

namespace {

int round4(double v) { return std::max(32, static_cast<int>(std::lround(v / 4.0)) * 4); }

Image resized(const Image& img, Dims d) { return img.dims() == d ? img : resize_bilinear(img, d); }

}  // namespace

Dims inference_dims(Dims d, int size) {
  if (size < 32) throw ValidationError("inference size must be >= 32");
  const Dims s = scaled_to_shorter_side(d, size);
  return {round4(s.width), round4(s.height)};
}

TransferResult transfer_pipeline(const TranslatorBundle& fg, const TranslatorBundle& bg, const TransferInputs& in,
                                 const TransferOptions& opts) {
  require_same_dims(in.input.dims(), in.input_mask.dims(), "input and input mask");
  require_same_dims(in.style.dims(), in.style_mask.dims(), "style and style mask");

  const Dims work = inference_dims(in.input.dims(), opts.size);
  const Dims style_work = inference_dims(in.style.dims(), opts.size);
  const Mask work_mask = resize_nearest(in.input_mask, work);
  const Mask style_mask = resize_nearest(in.style_mask, style_work);

  const RegionPair src = split_regions(resized(in.input, work), work_mask, opts.fill);
  const RegionPair sty = split_regions(resized(in.style, style_work), style_mask, opts.fill);

  const Image fg_out = resized(translate(fg, src.foreground, StyleSource{sty.foreground}, opts.direction), in.input.dims());
  const Image bg_out = resized(translate(bg, src.background, StyleSource{sty.background}, opts.direction), in.input.dims());

  TransferResult r;
  r.composite = alpha_composite(fg_out, bg_out, in.input_mask);
  if (opts.blend) {
    r.blend = blend_pipeline(r.composite, in.input, in.input_mask, *opts.blend);
    r.image = r.blend->image;
  } else {
    r.image = r.composite;
  }
  return r;
}

}  // namespace archstyle
