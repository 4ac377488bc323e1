#pragma once

// Plain serial kernels written directly from the defining formulas. They are
// slow on purpose and exist to check the optimized versions and to benchmark
// against them.

#include "micclass/cnn.hpp"
#include "micclass/denoise_dsp.hpp"
#include "micclass/matrix.hpp"

namespace micclass::reference {

Matrix nlm_denoise(const Matrix& v, const NlmParams& p);
Matrix bilateral_denoise(const Matrix& v, const BilateralParams& p);

Tensor4 conv2d_forward(const Tensor4& x, const Conv2d& layer);
Tensor4 conv2d_backward(const Tensor4& x, const Conv2d& layer, const Tensor4& grad_out,
                        Conv2dGrads& grads);

}  // namespace micclass::reference
