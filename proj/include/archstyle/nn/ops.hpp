#pragma once

#include <functional>
#include <span>
#include <vector>

#include "archstyle/image.hpp"
#include "archstyle/losses.hpp"
#include "archstyle/nn/autograd.hpp"

namespace archstyle::nn {

// Convolutions use zero padding. Weights are (out, in, k, k) for conv2d and
// (in, out, k, k) for the transposed convolution; biases are (c, 1, 1, 1).
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad);
Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad,
                     int output_pad);

/// y = x W^T + b on per-sample flattened features; W is (out, in, 1, 1).
Var linear(const Var& x, const Var& weight, const Var& bias);

Var instance_norm(const Var& x, float eps = 1e-5f);
/// Per-sample normalization over (C, H, W) with a per-channel affine.
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, float eps = 1e-5f);

/// Adaptive instance normalization. `mean` and `std` are (N, C, 1, 1); the
/// feature std is floored at `std_floor`. Throws on non-positive target std.
Var adain(const Var& x, const Var& mean, const Var& std, float std_floor = 1e-5f);

Var relu(const Var& x);
Var leaky_relu(const Var& x, float slope = 0.2f);
Var tanh(const Var& x);
Var softplus(const Var& x);

Var add(const Var& a, const Var& b);
/// y = scale * x + shift.
Var affine(const Var& x, float scale, float shift);

Var upsample_nearest2x(const Var& x);
/// 2x2 mean pooling; dims must be even.
Var avg_pool2x(const Var& x);
Var global_avg_pool(const Var& x);

/// Channels [begin, begin + count) of an (N, C, H, W) tensor.
Var slice_channels(const Var& x, int begin, int count);
/// Stack two batches along N.
Var concat_batch(const Var& a, const Var& b);

/// Scalar sum of weight_i * term_i over scalar Vars.
Var weighted_sum(std::span<const std::pair<double, Var>> terms);

// Loss glue: evaluate the double-precision kernels in archstyle/losses.hpp
// and route their analytic gradients back onto the tape.

/// Mean absolute difference; gradients flow into both operands.
Var l1(const Var& a, const Var& b);

/// Batch mean of kernel(out_n, ref_n). `out_unit` holds images in [0,1]
/// (N, 3, H, W); kernel returns the loss and its gradient w.r.t. out_n.
Var image_loss(const Var& out_unit, std::span<const Image> refs,
               const std::function<ValueAndGrad(const Image&, const Image&)>& kernel);

Var lsgan_generator(std::span<const Var> fake_scores);
Var lsgan_discriminator(std::span<const Var> real_scores, std::span<const Var> fake_scores);

// Image <-> tensor at the [0,1] / [-1,1] boundary.
Tensor images_to_tensor(std::span<const Image> images);
Image tensor_to_image(const Tensor& t, int n = 0);
/// Unit-range view of one sample without the [-1,1] mapping.
Image unit_tensor_to_image(const Tensor& t, int n);

/// Row-major sgemm wrapper: C = alpha op(A) op(B) + beta C.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc);

}  // namespace archstyle::nn
