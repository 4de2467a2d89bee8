#pragma once

#include "mrih/numerics/tensor.hpp"

namespace mrih {

/// Same-padded 2-D cross-correlation.
///
/// x: [Cin, H, W], kernel: [Cout, Cin, K, K] with K odd, bias: [Cout].
/// out[o, i, j] = bias[o] + sum_{c,u,v} kernel[o, c, u, v] * x[c, i + u - K/2, j + v - K/2],
/// with x taken as zero outside the image. Output is [Cout, H, W].
RealTensor conv2d(const RealTensor& x, const RealTensor& kernel, const RealTensor& bias);

/// Adjoints of conv2d given the output adjoint `grad_out`; results are accumulated.
void conv2d_backward(const RealTensor& x, const RealTensor& kernel, const RealTensor& grad_out,
                     RealTensor* grad_x, RealTensor* grad_kernel, RealTensor* grad_bias);

RealTensor relu(const RealTensor& x);

/// 2x2 mean pooling over the last two axes (even sizes).
RealTensor avg_pool2(const RealTensor& x);

/// Nearest-neighbour 2x upsampling over the last two axes.
RealTensor upsample2(const RealTensor& x);

}  // namespace mrih
