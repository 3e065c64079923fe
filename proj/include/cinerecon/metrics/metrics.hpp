#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "cinerecon/core/types.hpp"

namespace cinerecon::metrics {

struct Image2D {
  int h = 0, w = 0;
  std::vector<double> v;

  Image2D() = default;
  Image2D(int h_, int w_) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, 0.0) {}

  double& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
};

Image2D magnitude_frame(const CArray& a, int frame);

// ||pred - ref||^2 / ||ref||^2
double nmse(const Image2D& pred, const Image2D& ref);

// 10 log10(data_range^2 / MSE); data_range defaults to max(ref)
double psnr(const Image2D& pred, const Image2D& ref,
            std::optional<double> data_range = std::nullopt);

// Mean local SSIM over Gaussian-weighted windows (sigma 1.5) at positions
// where the full window fits; data_range defaults to max(ref).
double ssim(const Image2D& pred, const Image2D& ref, int window = 7, double k1 = 0.01,
            double k2 = 0.03, std::optional<double> data_range = std::nullopt);

struct MetricReport {
  double ssim = 0.0;
  double nmse = 0.0;
  double psnr = 0.0;
  std::string protocol;  // full_image | challenge_crop
  int n_frames_evaluated = 0;

  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
};

struct ChallengeReport {
  MetricReport full_image;
  MetricReport challenge_crop;
};

// Crop covering 1/6 of the image area: (h/2, w/3), floored, centered.
std::pair<int, int> challenge_crop_dims(int h, int w);

// Scores magnitude images under both protocols: the full-image report uses
// every frame, the challenge protocol uses the first 3 frames restricted to
// the central sixth of the image. Metrics are averaged over frames with the
// data range taken from the evaluated reference region.
ChallengeReport challenge_eval(const CineSlice& pred, const CineSlice& ref, int window = 7);

}  // namespace cinerecon::metrics
