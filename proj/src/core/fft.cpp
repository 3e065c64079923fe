#include "cinerecon/core/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace cinerecon {

bool CArray::all_finite() const {
  for (const auto& z : v_) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

namespace {

// FFTW's planner is not thread safe; executing a cached plan on fresh
// buffers via fftw_execute_dft is. Plans are created FFTW_UNALIGNED so they
// accept arbitrary heap buffers.
class PlanCache {
 public:
  fftw_plan get(int h, int w, int sign) {
    std::scoped_lock lk(mu_);
    auto key = std::make_tuple(h, w, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<cxd> dummy(static_cast<size_t>(h) * w);
    fftw_plan p = fftw_plan_dft_2d(
        h, w, reinterpret_cast<fftw_complex*>(dummy.data()),
        reinterpret_cast<fftw_complex*>(dummy.data()), sign,
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    require(p != nullptr, ErrorCategory::validation, "fftw plan creation failed");
    plans_.emplace(key, p);
    return p;
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

// roll by -floor(n/2): moves the center element to index 0
inline int ifftshift_src(int i, int n) { return (i + n / 2) % n; }
// roll by +floor(n/2): moves index 0 to the center
inline int fftshift_src(int i, int n) { return (i + n - n / 2) % n; }

void centered_transform(const cxd* in, cxd* out, int h, int w, int sign) {
  require_valid(h >= 1 && w >= 1, "fft2c: dimensions must be >= 1");
  for (size_t i = 0; i < static_cast<size_t>(h) * w; ++i) {
    require_valid(std::isfinite(in[i].real()) && std::isfinite(in[i].imag()),
                  "fft2c: non-finite input entry");
  }

  std::vector<cxd> buf(static_cast<size_t>(h) * w);
  std::vector<cxd> res(static_cast<size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    int sy = ifftshift_src(y, h);
    for (int x = 0; x < w; ++x) {
      buf[static_cast<size_t>(y) * w + x] = in[static_cast<size_t>(sy) * w + ifftshift_src(x, w)];
    }
  }

  fftw_plan plan = plan_cache().get(h, w, sign);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(buf.data()),
                   reinterpret_cast<fftw_complex*>(res.data()));

  const double scale = 1.0 / std::sqrt(static_cast<double>(h) * w);
  for (int y = 0; y < h; ++y) {
    int sy = fftshift_src(y, h);
    for (int x = 0; x < w; ++x) {
      out[static_cast<size_t>(y) * w + x] =
          res[static_cast<size_t>(sy) * w + fftshift_src(x, w)] * scale;
    }
  }
}

}  // namespace

void fft2c_frame(const cxd* in, cxd* out, int h, int w) {
  centered_transform(in, out, h, w, FFTW_FORWARD);
}

void ifft2c_frame(const cxd* in, cxd* out, int h, int w) {
  centered_transform(in, out, h, w, FFTW_BACKWARD);
}

CArray fft2c(const CArray& image) {
  CArray out(image.t(), image.h(), image.w());
  for (int f = 0; f < image.t(); ++f) {
    fft2c_frame(image.frame(f), out.frame(f), image.h(), image.w());
  }
  return out;
}

CArray ifft2c(const CArray& kspace) {
  CArray out(kspace.t(), kspace.h(), kspace.w());
  for (int f = 0; f < kspace.t(); ++f) {
    ifft2c_frame(kspace.frame(f), out.frame(f), kspace.h(), kspace.w());
  }
  return out;
}

}  // namespace cinerecon
