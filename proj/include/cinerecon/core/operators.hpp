#pragma once

#include "cinerecon/core/types.hpp"

namespace cinerecon {

// Equispaced Cartesian line mask with a seeded random offset plus a
// contiguous fully-sampled center block around w/2. Deterministic for fixed
// arguments. Accelerations outside {4, 8, 10} require allow_nonstandard.
SamplingMask make_mask(int width, int acceleration, int center_lines,
                       std::uint64_t seed, bool allow_nonstandard = false);

// y = E x: per-frame centered FFT followed by line-mask multiplication.
// Unsampled entries are exactly zero. The overload without a mask models a
// fully sampled acquisition.
KSpaceData forward_operator(const CineSlice& slice, const SamplingMask& mask);
KSpaceData forward_operator(const CineSlice& slice);

// E^H y: line-mask multiplication then per-frame centered inverse FFT. This
// is the zero-filled reconstruction used as the network input.
CineSlice adjoint_operator(const KSpaceData& kspace);

// Symmetric image-domain zero padding up to (target_h, target_w); the
// original size is recorded on the result so center_crop inverts it exactly.
CineSlice zero_pad(const CineSlice& slice, int target_h, int target_w);

// Exact inverse of zero_pad for the recorded original size.
CineSlice center_crop(const CineSlice& slice, int original_h, int original_w);

// Offsets used by zero_pad/center_crop (top, left) for a given size pair.
std::pair<int, int> pad_offsets(int h, int w, int target_h, int target_w);

}  // namespace cinerecon
