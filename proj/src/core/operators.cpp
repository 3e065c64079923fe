#include "cinerecon/core/operators.hpp"

#include <random>

#include "cinerecon/core/fft.hpp"

namespace cinerecon {

SamplingMask make_mask(int width, int acceleration, int center_lines,
                       std::uint64_t seed, bool allow_nonstandard) {
  const bool standard = acceleration == 4 || acceleration == 8 || acceleration == 10;
  require_valid(standard || allow_nonstandard,
                "acceleration must be one of {4, 8, 10} unless the nonstandard flag is set");
  require_valid(acceleration >= 1, "acceleration must be >= 1");
  require_valid(width >= acceleration, "width must be >= acceleration");
  require_valid(center_lines >= 0, "center_lines must be >= 0");
  require_valid(center_lines < 2.0 * width / acceleration,
                "center_lines must be < width / acceleration * 2");

  SamplingMask mask;
  mask.lines.assign(static_cast<size_t>(width), 0);
  mask.acceleration = acceleration;
  mask.center_lines = center_lines;
  mask.seed = seed;
  mask.nonstandard = !standard;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dist(0, acceleration - 1);
  const int offset = dist(rng);
  for (int x = offset; x < width; x += acceleration) mask.lines[x] = 1;

  const int start = width / 2 - center_lines / 2;
  for (int x = start; x < start + center_lines; ++x) {
    if (x >= 0 && x < width) mask.lines[x] = 1;
  }
  return mask;
}

namespace {

void check_mask_shape(const CArray& data, const SamplingMask& mask) {
  require_valid(mask.width() == data.w(),
                "mask width does not match data width");
}

void apply_line_mask(CArray& data, const SamplingMask& mask) {
  for (int f = 0; f < data.t(); ++f) {
    for (int y = 0; y < data.h(); ++y) {
      for (int x = 0; x < data.w(); ++x) {
        if (!mask.sampled(x)) data.at(f, y, x) = cxd(0.0, 0.0);
      }
    }
  }
}

}  // namespace

KSpaceData forward_operator(const CineSlice& slice, const SamplingMask& mask) {
  check_mask_shape(slice.data, mask);
  KSpaceData out;
  out.data = fft2c(slice.data);
  apply_line_mask(out.data, mask);
  out.mask = mask;
  return out;
}

KSpaceData forward_operator(const CineSlice& slice) {
  KSpaceData out;
  out.data = fft2c(slice.data);
  out.mask = std::nullopt;
  return out;
}

CineSlice adjoint_operator(const KSpaceData& kspace) {
  require_valid(!kspace.data.empty(), "adjoint_operator: empty k-space");
  CineSlice out;
  if (kspace.mask) {
    check_mask_shape(kspace.data, *kspace.mask);
    CArray masked = kspace.data;
    apply_line_mask(masked, *kspace.mask);
    out.data = ifft2c(masked);
  } else {
    out.data = ifft2c(kspace.data);
  }
  return out;
}

std::pair<int, int> pad_offsets(int h, int w, int target_h, int target_w) {
  return {(target_h - h) / 2, (target_w - w) / 2};
}

CineSlice zero_pad(const CineSlice& slice, int target_h, int target_w) {
  const int h = slice.h(), w = slice.w();
  require_valid(h <= target_h && w <= target_w,
                "zero_pad: input larger than target size");
  if (h == target_h && w == target_w) {
    CineSlice out = slice;
    out.padded = true;
    if (!out.original_size) out.original_size = {h, w};
    return out;
  }
  auto [top, left] = pad_offsets(h, w, target_h, target_w);
  CineSlice out;
  out.data = CArray(slice.t(), target_h, target_w);
  for (int f = 0; f < slice.t(); ++f) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        out.data.at(f, top + y, left + x) = slice.data.at(f, y, x);
      }
    }
  }
  out.frame_rate_hint = slice.frame_rate_hint;
  out.padded = true;
  out.original_size = {h, w};
  return out;
}

CineSlice center_crop(const CineSlice& slice, int original_h, int original_w) {
  const int h = slice.h(), w = slice.w();
  require_valid(original_h >= 1 && original_w >= 1, "center_crop: degenerate target");
  require_valid(original_h <= h && original_w <= w,
                "center_crop: target larger than input");
  if (original_h == h && original_w == w) {
    CineSlice out = slice;
    out.padded = false;
    out.original_size = std::nullopt;
    return out;
  }
  auto [top, left] = pad_offsets(original_h, original_w, h, w);
  CineSlice out;
  out.data = CArray(slice.t(), original_h, original_w);
  for (int f = 0; f < slice.t(); ++f) {
    for (int y = 0; y < original_h; ++y) {
      for (int x = 0; x < original_w; ++x) {
        out.data.at(f, y, x) = slice.data.at(f, top + y, left + x);
      }
    }
  }
  out.frame_rate_hint = slice.frame_rate_hint;
  out.padded = false;
  return out;
}

}  // namespace cinerecon
