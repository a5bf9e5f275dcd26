#pragma once
#include <cstdint>
#include <vector>

namespace geoinv::fft {

// Mixed-radix (2/3/5, generic odd fallback) complex DFT on interleaved
// (re,im) data. Forward kernel is exp(-2*pi*i/n); no scaling is applied in
// either direction. Per-length execution plans are cached and thread-safe.

// Transform one contiguous line of n complex values in place.
void transform_line(int n, double* data, bool inverse);
void transform_line(int n, float* data, bool inverse);

// Batched transform over one axis of a row-major complex tensor. `shape`
// excludes the trailing re/im pair.
void transform_axis(double* data, const std::vector<int64_t>& shape, int axis,
                    bool inverse);
void transform_axis(float* data, const std::vector<int64_t>& shape, int axis,
                    bool inverse);

}  // namespace geoinv::fft
