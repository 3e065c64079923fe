#pragma once

#include "cinerecon/core/types.hpp"

namespace cinerecon::model {

// Soft data consistency with lambda = exp(log_lambda): in k-space, sampled
// entries become (F x_pred + lambda y) / (1 + lambda), unsampled entries
// keep the network prediction. log_lambda -> -inf reduces to the identity,
// log_lambda -> +inf to hard replacement by the measurement.
CineSlice data_consistency(const CineSlice& x_pred, const KSpaceData& y, double log_lambda);

// k-space side of the same operation (useful for tests and diagnostics)
CArray dc_blend(const CArray& pred_kspace, const KSpaceData& y, double lambda);

}  // namespace cinerecon::model
