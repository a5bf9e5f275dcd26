#pragma once
#include "geoinv/tensor.hpp"

namespace geoinv {

// Elementwise with trailing-dim broadcasting (extents equal or 1).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scalar_mul(const Tensor& a, float s);
Tensor scalar_add(const Tensor& a, float s);
inline Tensor neg(const Tensor& a) { return scalar_mul(a, -1.0f); }

Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a);                  // exact erf form
Tensor silu(const Tensor& a);
Tensor sqrt_smooth(const Tensor& a, float eps = 1e-12f);
Tensor softmax_lastdim(const Tensor& a);
Tensor layernorm_lastdim(const Tensor& a, float eps = 1e-5f);  // no affine

// (..., m, k) x (..., k, n); leading dims broadcast (equal or 1).
Tensor matmul(const Tensor& a, const Tensor& b);

// x: (B, C, S...) row-major, w: (C, Cout) -> (B, Cout, S...)
Tensor channel_linear(const Tensor& x, const Tensor& w);

// x: (B, C, H, W), w: (Cout, C, kh, kw)
Tensor conv2d(const Tensor& x, const Tensor& w, int stride = 1, int pad = 0);
// x: (B, C, X, Y, T), w: (Cout, C, kx, ky, kt)
Tensor conv3d(const Tensor& x, const Tensor& w, int stride = 1, int pad = 0);
Tensor avg_pool2d(const Tensor& x, int k);
Tensor avg_pool3d(const Tensor& x, int k);
Tensor upsample_nearest3d(const Tensor& x, int k);

Tensor sum_all(const Tensor& a);   // 64-bit accumulation
Tensor mean_all(const Tensor& a);
Tensor sum_rows(const Tensor& a);  // (r, c) -> (r)

Tensor reshape(const Tensor& a, Shape s);
Tensor permute(const Tensor& a, const std::vector<int>& axes);
// pads.size() == 2*ndim: (before, after) per axis, zero fill
Tensor pad(const Tensor& a, const std::vector<int64_t>& pads);
Tensor crop(const Tensor& a, const std::vector<int64_t>& offsets, Shape extents);
Tensor concat(const Tensor& a, const Tensor& b, int axis);
Tensor broadcast_to(const Tensor& a, Shape s);

// Full-spectrum DFT over `axes` of a real tensor; output appends a trailing
// re/im pair. irfft drops it again, taking the real part of the inverse.
Tensor rfft(const Tensor& a, const std::vector<int>& axes);
Tensor irfft(const Tensor& a, const std::vector<int>& axes);

// Truncated spectral mixing: x (B, Ci, D..., 2) complex, weights
// (Ci, Co, 2*m..., 2) over the kept corner modes (first/last m per axis).
Tensor mode_mix(const Tensor& x, const Tensor& w, const std::vector<int>& modes);

}  // namespace geoinv
