#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "cinerecon/core/types.hpp"
#include "cinerecon/nn/tape.hpp"

namespace testutil {

using cinerecon::CArray;
using cinerecon::cxd;
using cinerecon::nn::Param;
using cinerecon::nn::Tape;
using cinerecon::nn::Tensor;

inline CArray random_carray(int t, int h, int w, std::mt19937_64& rng, double scale = 1.0) {
  CArray a(t, h, w);
  std::normal_distribution<double> g(0.0, scale);
  for (size_t i = 0; i < a.size(); ++i) a.data()[i] = cxd(g(rng), g(rng));
  return a;
}

inline Tensor random_tensor(int a, int b, int c, int d, std::mt19937_64& rng,
                            double scale = 1.0) {
  return Tensor::randn(a, b, c, d, rng, scale);
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

inline cxd inner(const CArray& a, const CArray& b) {
  cxd s(0.0, 0.0);
  for (size_t i = 0; i < a.size(); ++i) s += std::conj(a.data()[i]) * b.data()[i];
  return s;
}

// O(n^2) direct centered orthonormal DFT, the oracle for fft2c
inline std::vector<cxd> dft2c_direct(const std::vector<cxd>& img, int h, int w, bool inverse) {
  const double pi = 3.14159265358979323846;
  std::vector<cxd> out(static_cast<size_t>(h) * w);
  const double sign = inverse ? 1.0 : -1.0;
  const double scale = 1.0 / std::sqrt(static_cast<double>(h) * w);
  for (int ky = 0; ky < h; ++ky) {
    for (int kx = 0; kx < w; ++kx) {
      const double fy = ky - h / 2;
      const double fx = kx - w / 2;
      cxd acc(0.0, 0.0);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double yy = y - h / 2;
          const double xx = x - w / 2;
          const double phase = 2.0 * pi * (fy * yy / h + fx * xx / w);
          acc += img[static_cast<size_t>(y) * w + x] * std::polar(1.0, sign * phase);
        }
      }
      out[static_cast<size_t>(ky) * w + kx] = acc * scale;
    }
  }
  return out;
}

// central-difference gradient check over a sampled subset of a parameter's
// entries; build must construct the full graph and return the scalar loss
struct GradCheckResult {
  double max_rel_err = 0.0;
  int checked = 0;
};

inline GradCheckResult grad_check(Param& p, const std::function<double()>& loss_value,
                                  const std::function<void()>& backward_into_params,
                                  int max_entries, std::mt19937_64& rng, double h = 1e-5) {
  p.zero_grad();
  backward_into_params();
  Tensor analytic = p.grad;

  std::vector<size_t> idx(p.value.v.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  const size_t n = std::min<size_t>(static_cast<size_t>(max_entries), idx.size());

  GradCheckResult res;
  for (size_t k = 0; k < n; ++k) {
    const size_t i = idx[k];
    const double orig = p.value.v[i];
    p.value.v[i] = orig + h;
    const double lp = loss_value();
    p.value.v[i] = orig - h;
    const double lm = loss_value();
    p.value.v[i] = orig;
    const double numeric = (lp - lm) / (2.0 * h);
    const double denom = std::max({std::fabs(numeric), std::fabs(analytic.v[i]), 1e-6});
    res.max_rel_err = std::max(res.max_rel_err, std::fabs(numeric - analytic.v[i]) / denom);
    ++res.checked;
  }
  return res;
}

// direct 7-loop convolution oracle matching Tape::conv2d semantics
inline Tensor conv2d_direct(const Tensor& x, const Tensor& w, const Tensor* bias, int stride,
                            int pad) {
  const int T = x.shape[0], Ci = x.shape[1], H = x.shape[2], W = x.shape[3];
  const int Co = w.shape[0], kh = w.shape[2], kw = w.shape[3];
  const int Ho = (H + 2 * pad - kh) / stride + 1;
  const int Wo = (W + 2 * pad - kw) / stride + 1;
  Tensor out(T, Co, Ho, Wo);
  for (int f = 0; f < T; ++f) {
    for (int co = 0; co < Co; ++co) {
      for (int oy = 0; oy < Ho; ++oy) {
        for (int ox = 0; ox < Wo; ++ox) {
          double acc = bias ? bias->v[static_cast<size_t>(co)] : 0.0;
          for (int ci = 0; ci < Ci; ++ci) {
            for (int ky = 0; ky < kh; ++ky) {
              for (int kx = 0; kx < kw; ++kx) {
                const int iy = oy * stride + ky - pad;
                const int ix = ox * stride + kx - pad;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                acc += x.at(f, ci, iy, ix) * w.at(co, ci, ky, kx);
              }
            }
          }
          out.at(f, co, oy, ox) = acc;
        }
      }
    }
  }
  return out;
}

// direct Gaussian-window SSIM oracle: per-pixel window loops, no filtering
// shortcuts; matches the stated protocol (sigma 1.5, valid positions)
inline double ssim_direct(const std::vector<double>& a, const std::vector<double>& b, int h,
                          int w, int window, double k1, double k2, double data_range) {
  const int r = (window - 1) / 2;
  std::vector<double> g(static_cast<size_t>(window) * window);
  double gsum = 0.0;
  for (int y = 0; y < window; ++y) {
    for (int x = 0; x < window; ++x) {
      const double dy = y - r, dx = x - r;
      g[static_cast<size_t>(y) * window + x] =
          std::exp(-(dy * dy + dx * dx) / (2.0 * 1.5 * 1.5));
      gsum += g[static_cast<size_t>(y) * window + x];
    }
  }
  for (auto& v : g) v /= gsum;

  const double c1 = (k1 * data_range) * (k1 * data_range);
  const double c2 = (k2 * data_range) * (k2 * data_range);
  double acc = 0.0;
  int count = 0;
  for (int cy = r; cy < h - r; ++cy) {
    for (int cx = r; cx < w - r; ++cx) {
      double ma = 0.0, mb = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const double wgt = g[static_cast<size_t>(dy + r) * window + (dx + r)];
          ma += wgt * a[static_cast<size_t>(cy + dy) * w + (cx + dx)];
          mb += wgt * b[static_cast<size_t>(cy + dy) * w + (cx + dx)];
        }
      }
      double va = 0.0, vb = 0.0, cov = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const double wgt = g[static_cast<size_t>(dy + r) * window + (dx + r)];
          const double da = a[static_cast<size_t>(cy + dy) * w + (cx + dx)] - ma;
          const double db = b[static_cast<size_t>(cy + dy) * w + (cx + dx)] - mb;
          va += wgt * da * da;
          vb += wgt * db * db;
          cov += wgt * da * db;
        }
      }
      acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return acc / count;
}

}  // namespace testutil
