#include "cinerecon/model/dc.hpp"

#include <cmath>

#include "cinerecon/core/fft.hpp"

namespace cinerecon::model {

CArray dc_blend(const CArray& pred_kspace, const KSpaceData& y, double lambda) {
  require_valid(pred_kspace.same_shape(y.data), "data_consistency: shape mismatch");
  if (y.mask) {
    require_valid(y.mask->width() == y.w(), "data_consistency: mask width mismatch");
  }
  CArray out = pred_kspace;
  const double denom = 1.0 + lambda;
  for (int f = 0; f < out.t(); ++f) {
    for (int yy = 0; yy < out.h(); ++yy) {
      for (int xx = 0; xx < out.w(); ++xx) {
        if (!y.mask || y.mask->sampled(xx)) {
          out.at(f, yy, xx) = (out.at(f, yy, xx) + lambda * y.data.at(f, yy, xx)) / denom;
        }
      }
    }
  }
  return out;
}

CineSlice data_consistency(const CineSlice& x_pred, const KSpaceData& y, double log_lambda) {
  require_valid(x_pred.data.same_shape(y.data), "data_consistency: shape mismatch");
  const double lambda = std::exp(log_lambda);
  CineSlice out;
  out.data = ifft2c(dc_blend(fft2c(x_pred.data), y, lambda));
  out.frame_rate_hint = x_pred.frame_rate_hint;
  out.padded = x_pred.padded;
  out.original_size = x_pred.original_size;
  return out;
}

}  // namespace cinerecon::model
