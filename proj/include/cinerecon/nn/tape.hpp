#pragma once

#include <functional>
#include <map>
#include <vector>

#include "cinerecon/core/types.hpp"
#include "cinerecon/nn/tensor.hpp"

namespace cinerecon::nn {

// Reverse-mode autodiff over a per-forward-pass tape. Ops append nodes in
// topological order; backward() walks them in reverse. Gradients of nodes
// created via param() are accumulated into the bound Param's grad buffer.
class Tape {
 public:
  using Id = int;
  static constexpr Id kNone = -1;

  Id constant(Tensor v);
  Id param(Param& p);  // same Param yields the same node within one tape

  const Tensor& val(Id id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Tensor& grad(Id id) const;
  bool requires_grad(Id id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }
  size_t size() const { return nodes_.size(); }

  // elementwise and reductions
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id divide(Id a, Id b);
  Id scale(Id a, double c);
  Id offset(Id a, double c);
  Id relu(Id a);
  Id abs(Id a);                // subgradient 0 at the kink
  Id square(Id a);
  Id complex_abs(Id x);        // (T, 2, H, W) -> (T, 1, H, W) modulus
  Id mean_all(Id a);           // -> scalar
  Id sum_all(Id a);            // -> scalar

  // structure
  Id select_frames(Id x, int f0, int n);
  Id concat_frames(const std::vector<Id>& xs);
  Id select_channels(Id x, int c0, int n);
  Id concat_channels(const std::vector<Id>& xs);
  Id pixel_shuffle2(Id x);     // (T, 4C, H, W) -> (T, C, 2H, 2W)
  Id avg_pool2(Id x);          // (T, C, 2H, 2W) -> (T, C, H, W)
  Id upsample_nearest2(Id x);

  // zero-padded 2D convolution over the (H, W) axes, frames independent
  Id conv2d(Id x, Id w, Id b = kNone, int stride = 1, int pad = -1 /* k/2 */);

  // per-frame k-space filtering: ifft2c(filter .* fft2c(x)); filter is a
  // real (h, w) mask, self-adjoint so backward applies the same transform
  Id fft_filter(Id x, std::vector<double> filter, int h, int w);

  // soft data consistency in k-space against measured data y with
  // lambda = exp(log_lambda); unsampled bins keep the prediction
  Id data_consistency(Id x, const KSpaceData& y, Id log_lambda);

  void backward(Id root);

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily during backward
    bool needs_grad = false;
    std::function<void()> back;  // empty for leaves
    Param* bound = nullptr;
  };

  Id push(Tensor value, bool needs_grad, std::function<void()> back = {});
  Tensor& grad_buf(Id id);
  void add_into_grad(Id id, const Tensor& g);

  std::vector<Node> nodes_;
  std::map<const Param*, Id> param_ids_;
};

// channel-pair <-> complex bridges used by the DC/filter ops and the models
CArray pair_tensor_to_carray(const Tensor& t);
Tensor carray_to_pair_tensor(const CArray& a);
Tensor magnitude_tensor(const CArray& a);  // (T, 1, H, W)

}  // namespace cinerecon::nn
