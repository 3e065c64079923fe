#include "cinerecon/metrics/metrics.hpp"

#include <cmath>
#include <limits>

namespace cinerecon::metrics {

namespace {

void check_same_size(const Image2D& a, const Image2D& b) {
  require_valid(a.h == b.h && a.w == b.w, "metric: image size mismatch");
  require_valid(a.h >= 1 && a.w >= 1, "metric: empty image");
}

double max_value(const Image2D& a) {
  double m = 0.0;
  for (double x : a.v) m = std::max(m, x);
  return m;
}

std::vector<double> gaussian_profile(int window, double sigma = 1.5) {
  std::vector<double> g(static_cast<size_t>(window));
  const int r = (window - 1) / 2;
  double sum = 0.0;
  for (int i = 0; i < window; ++i) {
    const double d = i - r;
    g[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += g[static_cast<size_t>(i)];
  }
  for (auto& x : g) x /= sum;
  return g;
}

// separable Gaussian blur evaluated at valid positions only
Image2D blur_valid(const Image2D& img, const std::vector<double>& g) {
  const int win = static_cast<int>(g.size());
  const int r = (win - 1) / 2;
  Image2D horiz(img.h, img.w - 2 * r);
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < horiz.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < win; ++k) s += g[static_cast<size_t>(k)] * img.at(y, x + k);
      horiz.at(y, x) = s;
    }
  }
  Image2D out(img.h - 2 * r, horiz.w);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < win; ++k) s += g[static_cast<size_t>(k)] * horiz.at(y + k, x);
      out.at(y, x) = s;
    }
  }
  return out;
}

Image2D mul_images(const Image2D& a, const Image2D& b) {
  Image2D out(a.h, a.w);
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

Image2D crop_center(const Image2D& img, int ch, int cw) {
  const int top = (img.h - ch) / 2;
  const int left = (img.w - cw) / 2;
  Image2D out(ch, cw);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) out.at(y, x) = img.at(top + y, left + x);
  }
  return out;
}

}  // namespace

Image2D magnitude_frame(const CArray& a, int frame) {
  require_valid(frame >= 0 && frame < a.t(), "magnitude_frame: frame out of range");
  Image2D out(a.h(), a.w());
  const cxd* p = a.frame(frame);
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = std::abs(p[i]);
  return out;
}

double nmse(const Image2D& pred, const Image2D& ref) {
  check_same_size(pred, ref);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < ref.v.size(); ++i) {
    const double d = pred.v[i] - ref.v[i];
    num += d * d;
    den += ref.v[i] * ref.v[i];
  }
  require_valid(den > 0.0, "nmse: reference is all-zero");
  return num / den;
}

double psnr(const Image2D& pred, const Image2D& ref, std::optional<double> data_range) {
  check_same_size(pred, ref);
  double mse = 0.0;
  for (size_t i = 0; i < ref.v.size(); ++i) {
    const double d = pred.v[i] - ref.v[i];
    mse += d * d;
  }
  mse /= static_cast<double>(ref.v.size());
  const double range = data_range.value_or(max_value(ref));
  require_valid(range > 0.0, "psnr: data range must be positive");
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(range * range / mse);
}

double ssim(const Image2D& pred, const Image2D& ref, int window, double k1, double k2,
            std::optional<double> data_range) {
  check_same_size(pred, ref);
  require_valid(window >= 3 && window % 2 == 1, "ssim: window must be odd and >= 3");
  require_valid(window <= pred.h && window <= pred.w, "ssim: window larger than image");

  const double range = std::max(data_range.value_or(max_value(ref)), 1e-12);
  const double c1 = (k1 * range) * (k1 * range);
  const double c2 = (k2 * range) * (k2 * range);

  const auto g = gaussian_profile(window);
  Image2D mu_p = blur_valid(pred, g);
  Image2D mu_r = blur_valid(ref, g);
  Image2D e_pp = blur_valid(mul_images(pred, pred), g);
  Image2D e_rr = blur_valid(mul_images(ref, ref), g);
  Image2D e_pr = blur_valid(mul_images(pred, ref), g);

  double acc = 0.0;
  for (size_t i = 0; i < mu_p.v.size(); ++i) {
    const double mp = mu_p.v[i], mr = mu_r.v[i];
    const double vp = e_pp.v[i] - mp * mp;
    const double vr = e_rr.v[i] - mr * mr;
    const double cov = e_pr.v[i] - mp * mr;
    acc += ((2.0 * mp * mr + c1) * (2.0 * cov + c2)) /
           ((mp * mp + mr * mr + c1) * (vp + vr + c2));
  }
  return acc / static_cast<double>(mu_p.v.size());
}

nlohmann::json MetricReport::to_json() const {
  return {{"ssim", ssim},
          {"nmse", nmse},
          {"psnr", psnr},
          {"protocol", protocol},
          {"n_frames_evaluated", n_frames_evaluated}};
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  MetricReport r;
  r.ssim = j.at("ssim").get<double>();
  r.nmse = j.at("nmse").get<double>();
  r.psnr = j.at("psnr").get<double>();
  r.protocol = j.at("protocol").get<std::string>();
  r.n_frames_evaluated = j.at("n_frames_evaluated").get<int>();
  return r;
}

std::pair<int, int> challenge_crop_dims(int h, int w) { return {h / 2, w / 3}; }

namespace {

MetricReport score_frames(const std::vector<Image2D>& preds, const std::vector<Image2D>& refs,
                          const std::string& protocol, int window) {
  double range = 0.0;
  for (const auto& r : refs) range = std::max(range, max_value(r));
  MetricReport report;
  report.protocol = protocol;
  report.n_frames_evaluated = static_cast<int>(refs.size());
  for (size_t f = 0; f < refs.size(); ++f) {
    report.ssim += ssim(preds[f], refs[f], window, 0.01, 0.03, range);
    report.nmse += nmse(preds[f], refs[f]);
    report.psnr += psnr(preds[f], refs[f], range);
  }
  const double n = static_cast<double>(refs.size());
  report.ssim /= n;
  report.nmse /= n;
  report.psnr /= n;
  return report;
}

}  // namespace

ChallengeReport challenge_eval(const CineSlice& pred, const CineSlice& ref, int window) {
  require_valid(pred.data.same_shape(ref.data), "challenge_eval: shape mismatch");
  require_valid(ref.t() >= 3, "challenge_eval: need at least 3 time frames");

  std::vector<Image2D> full_pred, full_ref;
  for (int f = 0; f < ref.t(); ++f) {
    full_pred.push_back(magnitude_frame(pred.data, f));
    full_ref.push_back(magnitude_frame(ref.data, f));
  }

  const auto [ch, cw] = challenge_crop_dims(ref.h(), ref.w());
  require_valid(ch >= window && cw >= window,
                "challenge_eval: image too small for the crop protocol");
  std::vector<Image2D> crop_pred, crop_ref;
  for (int f = 0; f < 3; ++f) {
    crop_pred.push_back(crop_center(full_pred[static_cast<size_t>(f)], ch, cw));
    crop_ref.push_back(crop_center(full_ref[static_cast<size_t>(f)], ch, cw));
  }

  ChallengeReport out;
  out.full_image = score_frames(full_pred, full_ref, "full_image", window);
  out.challenge_crop = score_frames(crop_pred, crop_ref, "challenge_crop", window);
  return out;
}

}  // namespace cinerecon::metrics
