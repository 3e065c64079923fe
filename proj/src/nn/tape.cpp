#include "cinerecon/nn/tape.hpp"

#include <cmath>
#include <memory>

#include "cinerecon/core/fft.hpp"

namespace cinerecon::nn {

namespace {

// valid output range [o0, o1] for kernel position kpos so that the input
// index ox*s + kpos - pad stays inside [0, in_size)
inline std::pair<int, int> conv_range(int out_size, int in_size, int kpos, int pad, int s) {
  int o0 = 0;
  if (pad - kpos > 0) o0 = (pad - kpos + s - 1) / s;
  const int hi = in_size - 1 - kpos + pad;
  if (hi < 0) return {1, 0};  // empty
  const int o1 = std::min(out_size - 1, hi / s);
  return {o0, o1};
}

}  // namespace

CArray pair_tensor_to_carray(const Tensor& t) {
  require_valid(t.shape[1] == 2, "expected a 2-channel (re, im) tensor");
  CArray a(t.shape[0], t.shape[2], t.shape[3]);
  const size_t plane = static_cast<size_t>(t.shape[2]) * t.shape[3];
  for (int f = 0; f < t.shape[0]; ++f) {
    const double* re = t.plane(f, 0);
    const double* im = t.plane(f, 1);
    cxd* out = a.frame(f);
    for (size_t i = 0; i < plane; ++i) out[i] = cxd(re[i], im[i]);
  }
  return a;
}

Tensor carray_to_pair_tensor(const CArray& a) {
  Tensor t(a.t(), 2, a.h(), a.w());
  const size_t plane = static_cast<size_t>(a.h()) * a.w();
  for (int f = 0; f < a.t(); ++f) {
    double* re = t.plane(f, 0);
    double* im = t.plane(f, 1);
    const cxd* in = a.frame(f);
    for (size_t i = 0; i < plane; ++i) {
      re[i] = in[i].real();
      im[i] = in[i].imag();
    }
  }
  return t;
}

Tensor magnitude_tensor(const CArray& a) {
  Tensor t(a.t(), 1, a.h(), a.w());
  const size_t plane = static_cast<size_t>(a.h()) * a.w();
  for (int f = 0; f < a.t(); ++f) {
    double* m = t.plane(f, 0);
    const cxd* in = a.frame(f);
    for (size_t i = 0; i < plane; ++i) m[i] = std::abs(in[i]);
  }
  return t;
}

Tape::Id Tape::push(Tensor value, bool needs_grad, std::function<void()> back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::constant(Tensor v) { return push(std::move(v), false); }

Tape::Id Tape::param(Param& p) {
  auto it = param_ids_.find(&p);
  if (it != param_ids_.end()) return it->second;
  Id id = push(p.value, true);
  nodes_[static_cast<size_t>(id)].bound = &p;
  param_ids_[&p] = id;
  return id;
}

const Tensor& Tape::grad(Id id) const {
  const Node& n = nodes_[static_cast<size_t>(id)];
  require_valid(!n.grad.v.empty(), "gradient not computed for this node");
  return n.grad;
}

Tensor& Tape::grad_buf(Id id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.v.empty()) {
    const auto& s = n.value.shape;
    n.grad = Tensor(s[0], s[1], s[2], s[3]);
  }
  return n.grad;
}

void Tape::add_into_grad(Id id, const Tensor& g) {
  Tensor& buf = grad_buf(id);
  for (size_t i = 0; i < buf.v.size(); ++i) buf.v[i] += g.v[i];
}

void Tape::backward(Id root) {
  require_valid(nodes_[static_cast<size_t>(root)].value.numel() == 1,
                "backward root must be a scalar");
  grad_buf(root).v[0] = 1.0;
  for (Id i = root; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (!n.needs_grad || n.grad.v.empty()) continue;
    if (n.back) n.back();
    if (n.bound) {
      for (size_t k = 0; k < n.grad.v.size(); ++k) n.bound->grad.v[k] += n.grad.v[k];
    }
  }
}

Tape::Id Tape::add(Id a, Id b) {
  require_valid(val(a).same_shape(val(b)), "add: shape mismatch " + val(a).shape_str() +
                                               " vs " + val(b).shape_str());
  Tensor out = val(a);
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += val(b).v[i];
  bool ng = requires_grad(a) || requires_grad(b);
  Id id = push(std::move(out), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, a, b] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      if (requires_grad(a)) add_into_grad(a, g);
      if (requires_grad(b)) add_into_grad(b, g);
    };
  }
  return id;
}

Tape::Id Tape::sub(Id a, Id b) {
  require_valid(val(a).same_shape(val(b)), "sub: shape mismatch");
  Tensor out = val(a);
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] -= val(b).v[i];
  bool ng = requires_grad(a) || requires_grad(b);
  Id id = push(std::move(out), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, a, b] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      if (requires_grad(a)) add_into_grad(a, g);
      if (requires_grad(b)) {
        Tensor& gb = grad_buf(b);
        for (size_t i = 0; i < gb.v.size(); ++i) gb.v[i] -= g.v[i];
      }
    };
  }
  return id;
}

Tape::Id Tape::mul(Id a, Id b) {
  require_valid(val(a).same_shape(val(b)), "mul: shape mismatch");
  Tensor out = val(a);
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= val(b).v[i];
  bool ng = requires_grad(a) || requires_grad(b);
  Id id = push(std::move(out), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, a, b] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      if (requires_grad(a)) {
        Tensor& ga = grad_buf(a);
        const Tensor& vb = val(b);
        for (size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += g.v[i] * vb.v[i];
      }
      if (requires_grad(b)) {
        Tensor& gb = grad_buf(b);
        const Tensor& va = val(a);
        for (size_t i = 0; i < gb.v.size(); ++i) gb.v[i] += g.v[i] * va.v[i];
      }
    };
  }
  return id;
}

Tape::Id Tape::divide(Id a, Id b) {
  require_valid(val(a).same_shape(val(b)), "divide: shape mismatch");
  Tensor out = val(a);
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] /= val(b).v[i];
  bool ng = requires_grad(a) || requires_grad(b);
  Id id = push(std::move(out), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, a, b] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      const Tensor& vb = val(b);
      const Tensor& vo = val(id);
      if (requires_grad(a)) {
        Tensor& ga = grad_buf(a);
        for (size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += g.v[i] / vb.v[i];
      }
      if (requires_grad(b)) {
        Tensor& gb = grad_buf(b);
        for (size_t i = 0; i < gb.v.size(); ++i) gb.v[i] -= g.v[i] * vo.v[i] / vb.v[i];
      }
    };
  }
  return id;
}

Tape::Id Tape::scale(Id a, double c) {
  Tensor out = val(a);
  for (auto& x : out.v) x *= c;
  bool ng = requires_grad(a);
  Id id = push(std::move(out), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, a, c] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      Tensor& ga = grad_buf(a);
      for (size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += c * g.v[i];
    };
  }
  return id;
}

Tape::Id Tape::offset(Id a, double c) {
  Tensor out = val(a);
  for (auto& x : out.v) x += c;
  bool ng = requires_grad(a);
  Id id = push(std::move(out), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, a] {
      add_into_grad(a, nodes_[static_cast<size_t>(id)].grad);
    };
  }
  return id;
}

Tape::Id Tape::relu(Id a) {
  Tensor out = val(a);
  for (auto& x : out.v) x = x > 0.0 ? x : 0.0;
  bool ng = requires_grad(a);
  Id id = push(std::move(out), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, a] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      const Tensor& va = val(a);
      Tensor& ga = grad_buf(a);
      for (size_t i = 0; i < ga.v.size(); ++i) {
        if (va.v[i] > 0.0) ga.v[i] += g.v[i];
      }
    };
  }
  return id;
}

Tape::Id Tape::abs(Id a) {
  Tensor out = val(a);
  for (auto& x : out.v) x = std::fabs(x);
  bool ng = requires_grad(a);
  Id id = push(std::move(out), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, a] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      const Tensor& va = val(a);
      Tensor& ga = grad_buf(a);
      for (size_t i = 0; i < ga.v.size(); ++i) {
        if (va.v[i] > 0.0) ga.v[i] += g.v[i];
        else if (va.v[i] < 0.0) ga.v[i] -= g.v[i];
      }
    };
  }
  return id;
}

Tape::Id Tape::square(Id a) {
  Tensor out = val(a);
  for (auto& x : out.v) x *= x;
  bool ng = requires_grad(a);
  Id id = push(std::move(out), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, a] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      const Tensor& va = val(a);
      Tensor& ga = grad_buf(a);
      for (size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += 2.0 * va.v[i] * g.v[i];
    };
  }
  return id;
}

Tape::Id Tape::complex_abs(Id x) {
  const Tensor& vx = val(x);
  require_valid(vx.shape[1] == 2, "complex_abs: expected 2 channels");
  Tensor out(vx.shape[0], 1, vx.shape[2], vx.shape[3]);
  const size_t plane = static_cast<size_t>(vx.shape[2]) * vx.shape[3];
  for (int f = 0; f < vx.shape[0]; ++f) {
    const double* re = vx.plane(f, 0);
    const double* im = vx.plane(f, 1);
    double* m = out.plane(f, 0);
    for (size_t i = 0; i < plane; ++i) m[i] = std::hypot(re[i], im[i]);
  }
  bool ng = requires_grad(x);
  Id id = push(std::move(out), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, x, plane] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      const Tensor& vo = val(id);
      const Tensor& vx2 = val(x);
      Tensor& gx = grad_buf(x);
      for (int f = 0; f < vx2.shape[0]; ++f) {
        const double* re = vx2.plane(f, 0);
        const double* im = vx2.plane(f, 1);
        const double* m = vo.plane(f, 0);
        const double* gp = g.plane(f, 0);
        double* gre = gx.plane(f, 0);
        double* gim = gx.plane(f, 1);
        for (size_t i = 0; i < plane; ++i) {
          const double denom = std::max(m[i], 1e-12);
          gre[i] += gp[i] * re[i] / denom;
          gim[i] += gp[i] * im[i] / denom;
        }
      }
    };
  }
  return id;
}

Tape::Id Tape::mean_all(Id a) {
  const Tensor& va = val(a);
  double s = 0.0;
  for (double x : va.v) s += x;
  const double n = static_cast<double>(va.numel());
  bool ng = requires_grad(a);
  Id id = push(Tensor::scalar(s / n), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, a, n] {
      const double g = nodes_[static_cast<size_t>(id)].grad.v[0] / n;
      Tensor& ga = grad_buf(a);
      for (auto& x : ga.v) x += g;
    };
  }
  return id;
}

Tape::Id Tape::sum_all(Id a) {
  const Tensor& va = val(a);
  double s = 0.0;
  for (double x : va.v) s += x;
  bool ng = requires_grad(a);
  Id id = push(Tensor::scalar(s), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, a] {
      const double g = nodes_[static_cast<size_t>(id)].grad.v[0];
      Tensor& ga = grad_buf(a);
      for (auto& x : ga.v) x += g;
    };
  }
  return id;
}

Tape::Id Tape::select_frames(Id x, int f0, int n) {
  const Tensor& vx = val(x);
  require_valid(f0 >= 0 && n >= 1 && f0 + n <= vx.shape[0], "select_frames: bad range");
  Tensor out(n, vx.shape[1], vx.shape[2], vx.shape[3]);
  const size_t frame = out.v.size() / n;
  std::copy(vx.v.begin() + static_cast<std::ptrdiff_t>(f0 * frame),
            vx.v.begin() + static_cast<std::ptrdiff_t>((f0 + n) * frame), out.v.begin());
  bool ng = requires_grad(x);
  Id id = push(std::move(out), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, x, f0, frame] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      Tensor& gx = grad_buf(x);
      for (size_t i = 0; i < g.v.size(); ++i) gx.v[f0 * frame + i] += g.v[i];
    };
  }
  return id;
}

Tape::Id Tape::concat_frames(const std::vector<Id>& xs) {
  require_valid(!xs.empty(), "concat_frames: empty list");
  const Tensor& first = val(xs[0]);
  int total = 0;
  bool ng = false;
  for (Id x : xs) {
    const Tensor& v = val(x);
    require_valid(v.shape[1] == first.shape[1] && v.shape[2] == first.shape[2] &&
                      v.shape[3] == first.shape[3],
                  "concat_frames: shape mismatch");
    total += v.shape[0];
    ng = ng || requires_grad(x);
  }
  Tensor out(total, first.shape[1], first.shape[2], first.shape[3]);
  size_t off = 0;
  for (Id x : xs) {
    const Tensor& v = val(x);
    std::copy(v.v.begin(), v.v.end(), out.v.begin() + static_cast<std::ptrdiff_t>(off));
    off += v.v.size();
  }
  Id id = push(std::move(out), ng);
  if (ng) {
    std::vector<Id> parts = xs;
    nodes_[static_cast<size_t>(id)].back = [this, id, parts] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      size_t off2 = 0;
      for (Id x : parts) {
        const size_t n = val(x).v.size();
        if (requires_grad(x)) {
          Tensor& gx = grad_buf(x);
          for (size_t i = 0; i < n; ++i) gx.v[i] += g.v[off2 + i];
        }
        off2 += n;
      }
    };
  }
  return id;
}

Tape::Id Tape::select_channels(Id x, int c0, int n) {
  const Tensor& vx = val(x);
  require_valid(c0 >= 0 && n >= 1 && c0 + n <= vx.shape[1], "select_channels: bad range");
  Tensor out(vx.shape[0], n, vx.shape[2], vx.shape[3]);
  const size_t plane = static_cast<size_t>(vx.shape[2]) * vx.shape[3];
  for (int f = 0; f < vx.shape[0]; ++f) {
    for (int c = 0; c < n; ++c) {
      std::copy(vx.plane(f, c0 + c), vx.plane(f, c0 + c) + plane, out.plane(f, c));
    }
  }
  bool ng = requires_grad(x);
  Id id = push(std::move(out), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, x, c0, n, plane] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      Tensor& gx = grad_buf(x);
      for (int f = 0; f < g.shape[0]; ++f) {
        for (int c = 0; c < n; ++c) {
          const double* gp = g.plane(f, c);
          double* dst = gx.plane(f, c0 + c);
          for (size_t i = 0; i < plane; ++i) dst[i] += gp[i];
        }
      }
    };
  }
  return id;
}

Tape::Id Tape::concat_channels(const std::vector<Id>& xs) {
  require_valid(!xs.empty(), "concat_channels: empty list");
  const Tensor& first = val(xs[0]);
  int total = 0;
  bool ng = false;
  for (Id x : xs) {
    const Tensor& v = val(x);
    require_valid(v.shape[0] == first.shape[0] && v.shape[2] == first.shape[2] &&
                      v.shape[3] == first.shape[3],
                  "concat_channels: shape mismatch");
    total += v.shape[1];
    ng = ng || requires_grad(x);
  }
  Tensor out(first.shape[0], total, first.shape[2], first.shape[3]);
  const size_t plane = static_cast<size_t>(first.shape[2]) * first.shape[3];
  for (int f = 0; f < first.shape[0]; ++f) {
    int co = 0;
    for (Id x : xs) {
      const Tensor& v = val(x);
      for (int c = 0; c < v.shape[1]; ++c, ++co) {
        std::copy(v.plane(f, c), v.plane(f, c) + plane, out.plane(f, co));
      }
    }
  }
  Id id = push(std::move(out), ng);
  if (ng) {
    std::vector<Id> parts = xs;
    nodes_[static_cast<size_t>(id)].back = [this, id, parts, plane] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      for (int f = 0; f < g.shape[0]; ++f) {
        int co = 0;
        for (Id x : parts) {
          const int nc = val(x).shape[1];
          if (requires_grad(x)) {
            Tensor& gx = grad_buf(x);
            for (int c = 0; c < nc; ++c) {
              const double* gp = g.plane(f, co + c);
              double* dst = gx.plane(f, c);
              for (size_t i = 0; i < plane; ++i) dst[i] += gp[i];
            }
          }
          co += nc;
        }
      }
    };
  }
  return id;
}

Tape::Id Tape::pixel_shuffle2(Id x) {
  const Tensor& vx = val(x);
  require_valid(vx.shape[1] % 4 == 0, "pixel_shuffle2: channels must be divisible by 4");
  const int T = vx.shape[0], C = vx.shape[1] / 4, H = vx.shape[2], W = vx.shape[3];
  Tensor out(T, C, 2 * H, 2 * W);
  for (int f = 0; f < T; ++f) {
    for (int c = 0; c < C; ++c) {
      double* op = out.plane(f, c);
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const double* ip = vx.plane(f, c * 4 + dy * 2 + dx);
          for (int y = 0; y < H; ++y) {
            for (int xx = 0; xx < W; ++xx) {
              op[(2 * y + dy) * (2 * W) + 2 * xx + dx] = ip[y * W + xx];
            }
          }
        }
      }
    }
  }
  bool ng = requires_grad(x);
  Id id = push(std::move(out), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, x, T, C, H, W] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      Tensor& gx = grad_buf(x);
      for (int f = 0; f < T; ++f) {
        for (int c = 0; c < C; ++c) {
          const double* gp = g.plane(f, c);
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              double* dst = gx.plane(f, c * 4 + dy * 2 + dx);
              for (int y = 0; y < H; ++y) {
                for (int xx = 0; xx < W; ++xx) {
                  dst[y * W + xx] += gp[(2 * y + dy) * (2 * W) + 2 * xx + dx];
                }
              }
            }
          }
        }
      }
    };
  }
  return id;
}

Tape::Id Tape::avg_pool2(Id x) {
  const Tensor& vx = val(x);
  require_valid(vx.shape[2] % 2 == 0 && vx.shape[3] % 2 == 0,
                "avg_pool2: spatial dims must be even");
  const int T = vx.shape[0], C = vx.shape[1], H = vx.shape[2] / 2, W = vx.shape[3] / 2;
  Tensor out(T, C, H, W);
  for (int f = 0; f < T; ++f) {
    for (int c = 0; c < C; ++c) {
      const double* ip = vx.plane(f, c);
      double* op = out.plane(f, c);
      for (int y = 0; y < H; ++y) {
        for (int xx = 0; xx < W; ++xx) {
          const double* r0 = ip + (2 * y) * (2 * W) + 2 * xx;
          const double* r1 = r0 + 2 * W;
          op[y * W + xx] = 0.25 * (r0[0] + r0[1] + r1[0] + r1[1]);
        }
      }
    }
  }
  bool ng = requires_grad(x);
  Id id = push(std::move(out), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, x, T, C, H, W] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      Tensor& gx = grad_buf(x);
      for (int f = 0; f < T; ++f) {
        for (int c = 0; c < C; ++c) {
          const double* gp = g.plane(f, c);
          double* dst = gx.plane(f, c);
          for (int y = 0; y < H; ++y) {
            for (int xx = 0; xx < W; ++xx) {
              const double gv = 0.25 * gp[y * W + xx];
              double* r0 = dst + (2 * y) * (2 * W) + 2 * xx;
              double* r1 = r0 + 2 * W;
              r0[0] += gv; r0[1] += gv; r1[0] += gv; r1[1] += gv;
            }
          }
        }
      }
    };
  }
  return id;
}

Tape::Id Tape::upsample_nearest2(Id x) {
  const Tensor& vx = val(x);
  const int T = vx.shape[0], C = vx.shape[1], H = vx.shape[2], W = vx.shape[3];
  Tensor out(T, C, 2 * H, 2 * W);
  for (int f = 0; f < T; ++f) {
    for (int c = 0; c < C; ++c) {
      const double* ip = vx.plane(f, c);
      double* op = out.plane(f, c);
      for (int y = 0; y < 2 * H; ++y) {
        const double* row = ip + (y / 2) * W;
        for (int xx = 0; xx < 2 * W; ++xx) op[y * 2 * W + xx] = row[xx / 2];
      }
    }
  }
  bool ng = requires_grad(x);
  Id id = push(std::move(out), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, x, T, C, H, W] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      Tensor& gx = grad_buf(x);
      for (int f = 0; f < T; ++f) {
        for (int c = 0; c < C; ++c) {
          const double* gp = g.plane(f, c);
          double* dst = gx.plane(f, c);
          for (int y = 0; y < 2 * H; ++y) {
            double* row = dst + (y / 2) * W;
            for (int xx = 0; xx < 2 * W; ++xx) row[xx / 2] += gp[y * 2 * W + xx];
          }
        }
      }
    };
  }
  return id;
}

Tape::Id Tape::conv2d(Id x, Id w, Id b, int stride, int pad) {
  const Tensor& vx = val(x);
  const Tensor& vw = val(w);
  const int T = vx.shape[0], Ci = vx.shape[1], H = vx.shape[2], W = vx.shape[3];
  const int Co = vw.shape[0], kh = vw.shape[2], kw = vw.shape[3];
  require_valid(vw.shape[1] == Ci, "conv2d: weight Cin mismatch: x " + vx.shape_str() +
                                       " w " + vw.shape_str());
  require_valid(kh == kw, "conv2d: only square kernels supported");
  require_valid(stride >= 1, "conv2d: stride must be >= 1");
  if (pad < 0) pad = kh / 2;
  const int Ho = (H + 2 * pad - kh) / stride + 1;
  const int Wo = (W + 2 * pad - kw) / stride + 1;
  require_valid(Ho >= 1 && Wo >= 1, "conv2d: output would be empty");
  if (b != kNone) {
    require_valid(val(b).shape[1] == Co && val(b).numel() == Co,
                  "conv2d: bias must be (1, Cout, 1, 1)");
  }

  Tensor out(T, Co, Ho, Wo);
  for (int f = 0; f < T; ++f) {
    for (int co = 0; co < Co; ++co) {
      double* op = out.plane(f, co);
      if (b != kNone) {
        const double bv = val(b).v[static_cast<size_t>(co)];
        std::fill(op, op + static_cast<size_t>(Ho) * Wo, bv);
      }
      for (int ci = 0; ci < Ci; ++ci) {
        const double* xp = vx.plane(f, ci);
        const double* wp = vw.plane(co, ci);
        for (int ky = 0; ky < kh; ++ky) {
          auto [oy0, oy1] = conv_range(Ho, H, ky, pad, stride);
          for (int kx = 0; kx < kw; ++kx) {
            const double wv = wp[ky * kw + kx];
            if (wv == 0.0) continue;
            auto [ox0, ox1] = conv_range(Wo, W, kx, pad, stride);
            for (int oy = oy0; oy <= oy1; ++oy) {
              const double* xrow = xp + (oy * stride + ky - pad) * W + (kx - pad);
              double* orow = op + oy * Wo;
              if (stride == 1) {
                for (int ox = ox0; ox <= ox1; ++ox) orow[ox] += wv * xrow[ox];
              } else {
                for (int ox = ox0; ox <= ox1; ++ox) orow[ox] += wv * xrow[ox * stride];
              }
            }
          }
        }
      }
    }
  }

  bool ng = requires_grad(x) || requires_grad(w) || (b != kNone && requires_grad(b));
  Id id = push(std::move(out), ng);
  if (ng) {
    nodes_[static_cast<size_t>(id)].back = [this, id, x, w, b, stride, pad, T, Ci, H, W,
                                            Co, kh, kw, Ho, Wo] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      const Tensor& vx2 = val(x);
      const Tensor& vw2 = val(w);

      if (b != kNone && requires_grad(b)) {
        Tensor& gb = grad_buf(b);
        for (int f = 0; f < T; ++f) {
          for (int co = 0; co < Co; ++co) {
            const double* gp = g.plane(f, co);
            double s = 0.0;
            for (size_t i = 0; i < static_cast<size_t>(Ho) * Wo; ++i) s += gp[i];
            gb.v[static_cast<size_t>(co)] += s;
          }
        }
      }

      if (requires_grad(w)) {
        Tensor& gw = grad_buf(w);
        for (int co = 0; co < Co; ++co) {
          for (int ci = 0; ci < Ci; ++ci) {
            double* gwp = gw.plane(co, ci);
            for (int ky = 0; ky < kh; ++ky) {
              auto [oy0, oy1] = conv_range(Ho, H, ky, pad, stride);
              for (int kx = 0; kx < kw; ++kx) {
                auto [ox0, ox1] = conv_range(Wo, W, kx, pad, stride);
                double acc = 0.0;
                for (int f = 0; f < T; ++f) {
                  const double* gp = g.plane(f, co);
                  const double* xp = vx2.plane(f, ci);
                  for (int oy = oy0; oy <= oy1; ++oy) {
                    const double* xrow = xp + (oy * stride + ky - pad) * W + (kx - pad);
                    const double* grow = gp + oy * Wo;
                    if (stride == 1) {
                      for (int ox = ox0; ox <= ox1; ++ox) acc += grow[ox] * xrow[ox];
                    } else {
                      for (int ox = ox0; ox <= ox1; ++ox) acc += grow[ox] * xrow[ox * stride];
                    }
                  }
                }
                gwp[ky * kw + kx] += acc;
              }
            }
          }
        }
      }

      if (requires_grad(x)) {
        Tensor& gx = grad_buf(x);
        for (int f = 0; f < T; ++f) {
          for (int co = 0; co < Co; ++co) {
            const double* gp = g.plane(f, co);
            for (int ci = 0; ci < Ci; ++ci) {
              double* dxp = gx.plane(f, ci);
              const double* wp = vw2.plane(co, ci);
              for (int ky = 0; ky < kh; ++ky) {
                auto [oy0, oy1] = conv_range(Ho, H, ky, pad, stride);
                for (int kx = 0; kx < kw; ++kx) {
                  const double wv = wp[ky * kw + kx];
                  if (wv == 0.0) continue;
                  auto [ox0, ox1] = conv_range(Wo, W, kx, pad, stride);
                  for (int oy = oy0; oy <= oy1; ++oy) {
                    double* dxrow = dxp + (oy * stride + ky - pad) * W + (kx - pad);
                    const double* grow = gp + oy * Wo;
                    if (stride == 1) {
                      for (int ox = ox0; ox <= ox1; ++ox) dxrow[ox] += wv * grow[ox];
                    } else {
                      for (int ox = ox0; ox <= ox1; ++ox) dxrow[ox * stride] += wv * grow[ox];
                    }
                  }
                }
              }
            }
          }
        }
      }
    };
  }
  return id;
}

namespace {

CArray apply_fft_filter(const Tensor& t, const std::vector<double>& filter, int h, int w) {
  CArray a = pair_tensor_to_carray(t);
  CArray k(a.t(), h, w);
  for (int f = 0; f < a.t(); ++f) {
    fft2c_frame(a.frame(f), k.frame(f), h, w);
    cxd* kp = k.frame(f);
    for (size_t i = 0; i < static_cast<size_t>(h) * w; ++i) kp[i] *= filter[i];
    ifft2c_frame(k.frame(f), a.frame(f), h, w);
  }
  return a;
}

}  // namespace

Tape::Id Tape::fft_filter(Id x, std::vector<double> filter, int h, int w) {
  const Tensor& vx = val(x);
  require_valid(vx.shape[1] == 2 && vx.shape[2] == h && vx.shape[3] == w,
                "fft_filter: expected (T, 2, h, w) input");
  require_valid(filter.size() == static_cast<size_t>(h) * w, "fft_filter: filter size");
  Tensor out = carray_to_pair_tensor(apply_fft_filter(vx, filter, h, w));
  bool ng = requires_grad(x);
  Id id = push(std::move(out), ng);
  if (ng) {
    auto filt = std::make_shared<std::vector<double>>(std::move(filter));
    nodes_[static_cast<size_t>(id)].back = [this, id, x, filt, h, w] {
      // real diagonal in k-space sandwiched by unitary transforms: self-adjoint
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      add_into_grad(x, carray_to_pair_tensor(apply_fft_filter(g, *filt, h, w)));
    };
  }
  return id;
}

Tape::Id Tape::data_consistency(Id x, const KSpaceData& y, Id log_lambda) {
  const Tensor& vx = val(x);
  require_valid(vx.shape[1] == 2, "data_consistency: expected 2-channel input");
  require_valid(vx.shape[0] == y.t() && vx.shape[2] == y.h() && vx.shape[3] == y.w(),
                "data_consistency: prediction/measurement shape mismatch");
  if (y.mask) {
    require_valid(y.mask->width() == y.w(), "data_consistency: mask width mismatch");
  }
  require_valid(val(log_lambda).numel() == 1, "data_consistency: log_lambda must be scalar");

  const double lambda = std::exp(val(log_lambda).v[0]);
  const int T = y.t(), H = y.h(), W = y.w();

  auto sampled = [&](int col) { return !y.mask || y.mask->sampled(col); };

  CArray xk(T, H, W);
  {
    CArray xi = pair_tensor_to_carray(vx);
    for (int f = 0; f < T; ++f) fft2c_frame(xi.frame(f), xk.frame(f), H, W);
  }
  CArray blended(T, H, W);
  for (int f = 0; f < T; ++f) {
    for (int yy = 0; yy < H; ++yy) {
      for (int xx = 0; xx < W; ++xx) {
        const cxd k = xk.at(f, yy, xx);
        blended.at(f, yy, xx) =
            sampled(xx) ? (k + lambda * y.data.at(f, yy, xx)) / (1.0 + lambda) : k;
      }
    }
  }
  CArray outc(T, H, W);
  for (int f = 0; f < T; ++f) ifft2c_frame(blended.frame(f), outc.frame(f), H, W);

  bool ng = requires_grad(x) || requires_grad(log_lambda);
  Id id = push(carray_to_pair_tensor(outc), ng);
  if (ng) {
    auto pred_k = std::make_shared<CArray>(std::move(xk));
    auto meas = std::make_shared<KSpaceData>(y);
    nodes_[static_cast<size_t>(id)].back = [this, id, x, log_lambda, pred_k, meas, lambda,
                                            T, H, W] {
      const Tensor& g = nodes_[static_cast<size_t>(id)].grad;
      auto sampled2 = [&](int col) { return !meas->mask || meas->mask->sampled(col); };

      CArray gk(T, H, W);
      {
        CArray gi = pair_tensor_to_carray(g);
        for (int f = 0; f < T; ++f) fft2c_frame(gi.frame(f), gk.frame(f), H, W);
      }

      if (requires_grad(log_lambda)) {
        const double inv_sq = 1.0 / ((1.0 + lambda) * (1.0 + lambda));
        double acc = 0.0;
        for (int f = 0; f < T; ++f) {
          for (int yy = 0; yy < H; ++yy) {
            for (int xx = 0; xx < W; ++xx) {
              if (!sampled2(xx)) continue;
              const cxd d = (meas->data.at(f, yy, xx) - pred_k->at(f, yy, xx)) * inv_sq;
              const cxd gb = gk.at(f, yy, xx);
              acc += gb.real() * d.real() + gb.imag() * d.imag();
            }
          }
        }
        grad_buf(log_lambda).v[0] += lambda * acc;
      }

      if (requires_grad(x)) {
        const double shrink = 1.0 / (1.0 + lambda);
        for (int f = 0; f < T; ++f) {
          for (int yy = 0; yy < H; ++yy) {
            for (int xx = 0; xx < W; ++xx) {
              if (sampled2(xx)) gk.at(f, yy, xx) *= shrink;
            }
          }
        }
        CArray gi(T, H, W);
        for (int f = 0; f < T; ++f) ifft2c_frame(gk.frame(f), gi.frame(f), H, W);
        add_into_grad(x, carray_to_pair_tensor(gi));
      }
    };
  }
  return id;
}

}  // namespace cinerecon::nn
