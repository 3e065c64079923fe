#pragma once

#include <map>
#include <vector>

#include "cinerecon/nn/tensor.hpp"

namespace cinerecon::nn {

// Adam with optional global-norm gradient clipping.
class Adam {
 public:
  explicit Adam(std::vector<Param*> params, double lr = 3e-4, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  // clips grads to max_norm (if > 0), applies one update, returns the
  // pre-clip global gradient norm
  double step(double clip_norm = 0.0);
  void zero_grad();

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  std::int64_t steps() const { return t_; }

  // state access for checkpoint resume (keyed by param name)
  std::map<std::string, Tensor> moment1() const;
  std::map<std::string, Tensor> moment2() const;
  void restore(const std::map<std::string, Tensor>& m1,
               const std::map<std::string, Tensor>& m2, std::int64_t steps);

 private:
  std::vector<Param*> params_;
  std::vector<Tensor> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
};

}  // namespace cinerecon::nn
