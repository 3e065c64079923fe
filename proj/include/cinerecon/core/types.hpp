#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cinerecon/core/errors.hpp"

namespace cinerecon {

using cxd = std::complex<double>;

// Dense complex volume of shape (T, H, W), row-major, last axis contiguous.
class CArray {
 public:
  CArray() = default;
  CArray(int t, int h, int w) : nt_(t), nh_(h), nw_(w) {
    require_valid(t >= 1 && h >= 1 && w >= 1, "CArray dimensions must be >= 1");
    v_.assign(static_cast<size_t>(t) * h * w, cxd(0.0, 0.0));
  }

  int t() const { return nt_; }
  int h() const { return nh_; }
  int w() const { return nw_; }
  size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  cxd& at(int f, int y, int x) { return v_[(static_cast<size_t>(f) * nh_ + y) * nw_ + x]; }
  const cxd& at(int f, int y, int x) const {
    return v_[(static_cast<size_t>(f) * nh_ + y) * nw_ + x];
  }

  cxd* frame(int f) { return v_.data() + static_cast<size_t>(f) * nh_ * nw_; }
  const cxd* frame(int f) const { return v_.data() + static_cast<size_t>(f) * nh_ * nw_; }

  cxd* data() { return v_.data(); }
  const cxd* data() const { return v_.data(); }

  bool same_shape(const CArray& o) const {
    return nt_ == o.nt_ && nh_ == o.nh_ && nw_ == o.nw_;
  }

  bool all_finite() const;

 private:
  int nt_ = 0, nh_ = 0, nw_ = 0;
  std::vector<cxd> v_;
};

// Cartesian phase-encode line mask over the width axis. Broadcasting the
// line vector over (T, H) yields the full binary mask M; M is idempotent.
struct SamplingMask {
  std::vector<std::uint8_t> lines;  // one entry per column, 1 = sampled
  int acceleration = 0;
  int center_lines = 0;
  std::uint64_t seed = 0;
  bool nonstandard = false;  // set when acceleration is outside {4, 8, 10}

  int width() const { return static_cast<int>(lines.size()); }
  bool sampled(int col) const { return lines[static_cast<size_t>(col)] != 0; }

  int sampled_count() const {
    int n = 0;
    for (auto b : lines) n += (b != 0);
    return n;
  }

  double effective_acceleration() const {
    int n = sampled_count();
    require_valid(n > 0, "mask samples no lines");
    return static_cast<double>(width()) / n;
  }
};

// One anatomical slice as a complex 2D+t sequence. `padded` records whether
// (h, w) is a zero-padded canvas rather than the acquired size; when it is,
// `original_size` holds the pre-padding (h, w) so center_crop can invert.
struct CineSlice {
  CArray data;
  std::optional<double> frame_rate_hint;  // frames per cardiac cycle, metadata only
  bool padded = false;
  std::optional<std::pair<int, int>> original_size;

  int t() const { return data.t(); }
  int h() const { return data.h(); }
  int w() const { return data.w(); }
};

// Frequency-domain counterpart of a CineSlice. A disengaged mask means the
// acquisition is fully sampled; otherwise entries on unsampled lines are 0.
struct KSpaceData {
  CArray data;
  std::optional<SamplingMask> mask;

  int t() const { return data.t(); }
  int h() const { return data.h(); }
  int w() const { return data.w(); }
  bool fully_sampled() const { return !mask.has_value(); }
};

}  // namespace cinerecon
