#include "cinerecon/nn/adam.hpp"

#include <cmath>

namespace cinerecon::nn {

Adam::Adam(std::vector<Param*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Param* p : params_) {
    const auto& s = p->value.shape;
    m_.emplace_back(s[0], s[1], s[2], s[3]);
    v_.emplace_back(s[0], s[1], s[2], s[3]);
  }
}

double Adam::step(double clip_norm) {
  double sq = 0.0;
  for (Param* p : params_) {
    for (double g : p->grad.v) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  double scale = 1.0;
  if (clip_norm > 0.0 && norm > clip_norm) scale = clip_norm / norm;

  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Param* p = params_[i];
    for (size_t k = 0; k < p->value.v.size(); ++k) {
      const double g = p->grad.v[k] * scale;
      m_[i].v[k] = beta1_ * m_[i].v[k] + (1.0 - beta1_) * g;
      v_[i].v[k] = beta2_ * v_[i].v[k] + (1.0 - beta2_) * g * g;
      const double mhat = m_[i].v[k] / bc1;
      const double vhat = v_[i].v[k] / bc2;
      p->value.v[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
  return norm;
}

void Adam::zero_grad() {
  for (Param* p : params_) p->zero_grad();
}

std::map<std::string, Tensor> Adam::moment1() const {
  std::map<std::string, Tensor> out;
  for (size_t i = 0; i < params_.size(); ++i) out[params_[i]->name] = m_[i];
  return out;
}

std::map<std::string, Tensor> Adam::moment2() const {
  std::map<std::string, Tensor> out;
  for (size_t i = 0; i < params_.size(); ++i) out[params_[i]->name] = v_[i];
  return out;
}

void Adam::restore(const std::map<std::string, Tensor>& m1,
                   const std::map<std::string, Tensor>& m2, std::int64_t steps) {
  for (size_t i = 0; i < params_.size(); ++i) {
    auto it1 = m1.find(params_[i]->name);
    auto it2 = m2.find(params_[i]->name);
    require(it1 != m1.end() && it2 != m2.end(), ErrorCategory::state,
            "optimizer state missing for parameter " + params_[i]->name);
    require(it1->second.same_shape(m_[i]) && it2->second.same_shape(v_[i]),
            ErrorCategory::state, "optimizer state shape mismatch for " + params_[i]->name);
    m_[i] = it1->second;
    v_[i] = it2->second;
  }
  t_ = steps;
}

}  // namespace cinerecon::nn
