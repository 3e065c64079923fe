#pragma once

#include "cinerecon/core/types.hpp"

namespace cinerecon {

// Centered, orthonormal 2D Fourier transforms: zero frequency sits at
// (h/2, w/2) and Parseval equality holds, so fft2c and ifft2c are exact
// adjoints (and inverses) of each other. Arbitrary sizes are supported.
//
// Frame-level variants transform a single (h, w) plane; `in` and `out` may
// alias. Volume-level variants transform every frame of a (T, H, W) array.

void fft2c_frame(const cxd* in, cxd* out, int h, int w);
void ifft2c_frame(const cxd* in, cxd* out, int h, int w);

CArray fft2c(const CArray& image);
CArray ifft2c(const CArray& kspace);

}  // namespace cinerecon
