#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cinerecon/core/errors.hpp"

namespace cinerecon::nn {

// Dense 4-D real tensor, row-major (d0, d1, d2, d3). Model activations use
// the (T, C, H, W) convention; scalars are (1, 1, 1, 1); conv weights are
// (Cout, Cin, kh, kw); biases are (1, C, 1, 1).
struct Tensor {
  std::array<int, 4> shape{0, 0, 0, 0};
  std::vector<double> v;

  Tensor() = default;
  Tensor(int a, int b, int c, int d) : shape{a, b, c, d} {
    require_valid(a >= 1 && b >= 1 && c >= 1 && d >= 1, "tensor dims must be >= 1");
    v.assign(numel(), 0.0);
  }

  static Tensor zeros(int a, int b, int c, int d) { return Tensor(a, b, c, d); }

  static Tensor scalar(double x) {
    Tensor t(1, 1, 1, 1);
    t.v[0] = x;
    return t;
  }

  static Tensor randn(int a, int b, int c, int d, std::mt19937_64& rng, double stdev) {
    Tensor t(a, b, c, d);
    std::normal_distribution<double> g(0.0, stdev);
    for (auto& x : t.v) x = g(rng);
    return t;
  }

  std::int64_t numel() const {
    return static_cast<std::int64_t>(shape[0]) * shape[1] * shape[2] * shape[3];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  double& at(int a, int b, int c, int d) {
    return v[((static_cast<size_t>(a) * shape[1] + b) * shape[2] + c) * shape[3] + d];
  }
  double at(int a, int b, int c, int d) const {
    return v[((static_cast<size_t>(a) * shape[1] + b) * shape[2] + c) * shape[3] + d];
  }

  // contiguous (d2, d3) plane at (a, b)
  double* plane(int a, int b) {
    return v.data() + (static_cast<size_t>(a) * shape[1] + b) * shape[2] * shape[3];
  }
  const double* plane(int a, int b) const {
    return v.data() + (static_cast<size_t>(a) * shape[1] + b) * shape[2] * shape[3];
  }

  std::string shape_str() const {
    return "(" + std::to_string(shape[0]) + "," + std::to_string(shape[1]) + "," +
           std::to_string(shape[2]) + "," + std::to_string(shape[3]) + ")";
  }
};

// Named trainable tensor with its gradient accumulator.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
    grad = Tensor(value.shape[0], value.shape[1], value.shape[2], value.shape[3]);
  }

  void zero_grad() { std::fill(grad.v.begin(), grad.v.end(), 0.0); }
};

}  // namespace cinerecon::nn
