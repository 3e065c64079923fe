#include "cinerecon/losses/losses.hpp"

#include <algorithm>
#include <cmath>

#include "cinerecon/core/fft.hpp"

namespace cinerecon::losses {

using nn::Tape;
using nn::Tensor;

namespace {

constexpr double kTargetEps = 1e-8;  // guards zero targets in the perp term

Tensor gaussian_kernel(int window, double sigma = 1.5) {
  Tensor k(1, 1, window, window);
  const int r = (window - 1) / 2;
  double sum = 0.0;
  for (int y = 0; y < window; ++y) {
    for (int x = 0; x < window; ++x) {
      const double dy = y - r, dx = x - r;
      const double g = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
      k.at(0, 0, y, x) = g;
      sum += g;
    }
  }
  for (auto& v : k.v) v /= sum;
  return k;
}

double max_magnitude(const CArray& a) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i]));
  return m;
}

void check_shapes(const Tape& tape, Tape::Id pred, const CArray& target) {
  const auto& s = tape.val(pred).shape;
  require_valid(s[1] == 2, "loss: prediction must be a 2-channel complex pair");
  require_valid(s[0] == target.t() && s[2] == target.h() && s[3] == target.w(),
                "loss: prediction/target shape mismatch");
}

CArray filtered_copy(const CArray& a, const std::vector<double>& filter) {
  CArray out(a.t(), a.h(), a.w());
  CArray k(1, a.h(), a.w());
  const size_t plane = static_cast<size_t>(a.h()) * a.w();
  for (int f = 0; f < a.t(); ++f) {
    fft2c_frame(a.frame(f), k.frame(0), a.h(), a.w());
    for (size_t i = 0; i < plane; ++i) k.frame(0)[i] *= filter[i];
    ifft2c_frame(k.frame(0), out.frame(f), a.h(), a.w());
  }
  return out;
}

}  // namespace

std::string loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::l1: return "l1";
    case LossKind::l2: return "l2";
    case LossKind::ssim: return "ssim";
    case LossKind::perp: return "perp";
    case LossKind::l1_split: return "l1_split";
  }
  return "?";
}

LossKind loss_kind_from_name(const std::string& s) {
  if (s == "l1") return LossKind::l1;
  if (s == "l2") return LossKind::l2;
  if (s == "ssim") return LossKind::ssim;
  if (s == "perp") return LossKind::perp;
  if (s == "l1_split") return LossKind::l1_split;
  throw Error(ErrorCategory::config, "unknown loss kind: " + s);
}

void LossConfig::validate() const {
  require(!terms.empty(), ErrorCategory::config, "loss config needs at least one term");
  double sum = 0.0;
  for (const auto& t : terms) {
    require(t.weight >= 0.0, ErrorCategory::config, "loss weights must be >= 0");
    sum += t.weight;
  }
  require(sum > 0.0, ErrorCategory::config, "loss weights must sum to > 0");
  require(highpass_cutoff > 0.0 && highpass_cutoff < 1.0, ErrorCategory::config,
          "highpass_cutoff must lie in (0, 1)");
  require(highpass_weight_ratio > 0.0, ErrorCategory::config,
          "highpass_weight_ratio must be > 0");
  require(ssim_window >= 3 && ssim_window % 2 == 1, ErrorCategory::config,
          "ssim_window must be odd and >= 3");
}

LossConfig loss_preset(const std::string& name) {
  LossConfig cfg;
  if (name == "perp") {
    cfg.terms = {{LossKind::perp, 1.0}};
  } else if (name == "l1") {
    cfg.terms = {{LossKind::l1, 1.0}};
  } else if (name == "l2") {
    cfg.terms = {{LossKind::l2, 1.0}};
  } else if (name == "perp_l1") {
    cfg.terms = {{LossKind::perp, 1.0}, {LossKind::l1, 1.0}};
  } else if (name == "perp_l1_split") {
    cfg.terms = {{LossKind::perp, 1.0}, {LossKind::l1_split, 1.0}};
  } else if (name == "perp_ssim_l1_split") {
    cfg.terms = {{LossKind::perp, 1.0}, {LossKind::ssim, 1.0}, {LossKind::l1_split, 1.0}};
  } else if (name == "l1_ssim") {
    cfg.terms = {{LossKind::l1, 1.0}, {LossKind::ssim, 1.0}};
  } else {
    throw Error(ErrorCategory::config, "unknown loss preset: " + name);
  }
  return cfg;
}

std::vector<std::string> loss_preset_names() {
  return {"perp", "l1", "l2", "perp_l1", "perp_l1_split", "perp_ssim_l1_split", "l1_ssim"};
}

std::pair<double, double> band_weights(double weight_ratio) {
  require_valid(weight_ratio > 0.0, "band weight ratio must be > 0");
  return {2.0 * weight_ratio / (1.0 + weight_ratio), 2.0 / (1.0 + weight_ratio)};
}

std::vector<double> highpass_filter(int h, int w, double cutoff) {
  require_valid(cutoff > 0.0 && cutoff < 1.0, "cutoff must lie in (0, 1)");
  std::vector<double> filt(static_cast<size_t>(h) * w);
  const double cy = h / 2, cx = w / 2;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double fy = (y - cy) / (h / 2.0);
      const double fx = (x - cx) / (w / 2.0);
      const double rho = std::hypot(fy, fx) / cutoff;
      const double r4 = rho * rho * rho * rho;
      filt[static_cast<size_t>(y) * w + x] = r4 / (1.0 + r4);
    }
  }
  return filt;
}

Tape::Id l1_loss_node(Tape& tape, Tape::Id pred, const CArray& target) {
  check_shapes(tape, pred, target);
  Tape::Id t = tape.constant(nn::carray_to_pair_tensor(target));
  return tape.mean_all(tape.complex_abs(tape.sub(pred, t)));
}

Tape::Id l2_loss_node(Tape& tape, Tape::Id pred, const CArray& target) {
  check_shapes(tape, pred, target);
  Tape::Id t = tape.constant(nn::carray_to_pair_tensor(target));
  Tape::Id d = tape.sub(pred, t);
  // |z|^2 = re^2 + im^2; the mean runs over complex entries, so sum the two
  // channel squares and average over (T, H, W)
  Tape::Id re = tape.select_channels(d, 0, 1);
  Tape::Id im = tape.select_channels(d, 1, 1);
  return tape.mean_all(tape.add(tape.square(re), tape.square(im)));
}

Tape::Id perp_loss_node(Tape& tape, Tape::Id pred, const CArray& target) {
  check_shapes(tape, pred, target);
  const auto& s = tape.val(pred).shape;
  Tensor re_t(s[0], 1, s[2], s[3]), im_t(s[0], 1, s[2], s[3]);
  Tensor mag_t(s[0], 1, s[2], s[3]), inv_mag(s[0], 1, s[2], s[3]);
  size_t i = 0;
  for (int f = 0; f < target.t(); ++f) {
    for (int y = 0; y < target.h(); ++y) {
      for (int x = 0; x < target.w(); ++x, ++i) {
        const cxd t = target.at(f, y, x);
        re_t.v[i] = t.real();
        im_t.v[i] = t.imag();
        const double m = std::abs(t);
        mag_t.v[i] = m;
        inv_mag.v[i] = 1.0 / std::max(m, kTargetEps);
      }
    }
  }
  Tape::Id re_p = tape.select_channels(pred, 0, 1);
  Tape::Id im_p = tape.select_channels(pred, 1, 1);
  Tape::Id cross = tape.sub(tape.mul(re_p, tape.constant(std::move(im_t))),
                            tape.mul(im_p, tape.constant(std::move(re_t))));
  Tape::Id perp = tape.mul(tape.abs(cross), tape.constant(std::move(inv_mag)));
  Tape::Id mag_term = tape.abs(tape.sub(tape.complex_abs(pred), tape.constant(std::move(mag_t))));
  return tape.mean_all(tape.add(perp, mag_term));
}

Tape::Id ssim_loss_node(Tape& tape, Tape::Id pred, const CArray& target, int window) {
  check_shapes(tape, pred, target);
  require_valid(window >= 3 && window % 2 == 1, "ssim window must be odd and >= 3");
  require_valid(window <= target.h() && window <= target.w(),
                "ssim window larger than image");

  const double range = std::max(max_magnitude(target), 1e-12);
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);

  Tape::Id p = tape.complex_abs(pred);                          // (T,1,H,W)
  Tape::Id t = tape.constant(nn::magnitude_tensor(target));     // (T,1,H,W)
  Tape::Id g = tape.constant(gaussian_kernel(window));

  auto blur = [&](Tape::Id x) { return tape.conv2d(x, g, Tape::kNone, 1, /*pad=*/0); };

  Tape::Id mu_p = blur(p);
  Tape::Id mu_t = blur(t);
  Tape::Id e_pp = blur(tape.mul(p, p));
  Tape::Id e_tt = blur(tape.mul(t, t));
  Tape::Id e_pt = blur(tape.mul(p, t));

  Tape::Id mu_p2 = tape.mul(mu_p, mu_p);
  Tape::Id mu_t2 = tape.mul(mu_t, mu_t);
  Tape::Id mu_pt = tape.mul(mu_p, mu_t);
  Tape::Id var_p = tape.sub(e_pp, mu_p2);
  Tape::Id var_t = tape.sub(e_tt, mu_t2);
  Tape::Id cov = tape.sub(e_pt, mu_pt);

  Tape::Id num = tape.mul(tape.offset(tape.scale(mu_pt, 2.0), c1),
                          tape.offset(tape.scale(cov, 2.0), c2));
  Tape::Id den = tape.mul(tape.offset(tape.add(mu_p2, mu_t2), c1),
                          tape.offset(tape.add(var_p, var_t), c2));
  Tape::Id ssim_map = tape.divide(num, den);
  return tape.offset(tape.scale(tape.mean_all(ssim_map), -1.0), 1.0);
}

Tape::Id l1_split_loss_node(Tape& tape, Tape::Id pred, const CArray& target, double cutoff,
                            double weight_ratio) {
  check_shapes(tape, pred, target);
  auto [w_hi, w_lo] = band_weights(weight_ratio);
  std::vector<double> hp = highpass_filter(target.h(), target.w(), cutoff);
  // weighted recombination of the two complementary bands in one filter;
  // ratio 1:1 reduces it to the identity and hence to plain l1
  std::vector<double> combined(hp.size());
  for (size_t i = 0; i < hp.size(); ++i) combined[i] = w_hi * hp[i] + w_lo * (1.0 - hp[i]);

  Tape::Id fp = tape.fft_filter(pred, std::move(combined), target.h(), target.w());
  std::vector<double> combined2(hp.size());
  for (size_t i = 0; i < hp.size(); ++i) combined2[i] = w_hi * hp[i] + w_lo * (1.0 - hp[i]);
  CArray ft = filtered_copy(target, combined2);
  Tape::Id t = tape.constant(nn::carray_to_pair_tensor(ft));
  return tape.mean_all(tape.complex_abs(tape.sub(fp, t)));
}

Tape::Id combined_loss_node(Tape& tape, Tape::Id pred, const CArray& target,
                            const LossConfig& config, LossBreakdown* breakdown) {
  config.validate();
  check_shapes(tape, pred, target);
  Tape::Id total = Tape::kNone;
  if (breakdown) breakdown->terms.clear();
  for (const auto& term : config.terms) {
    Tape::Id node = Tape::kNone;
    switch (term.kind) {
      case LossKind::l1: node = l1_loss_node(tape, pred, target); break;
      case LossKind::l2: node = l2_loss_node(tape, pred, target); break;
      case LossKind::ssim: node = ssim_loss_node(tape, pred, target, config.ssim_window); break;
      case LossKind::perp: node = perp_loss_node(tape, pred, target); break;
      case LossKind::l1_split:
        node = l1_split_loss_node(tape, pred, target, config.highpass_cutoff,
                                  config.highpass_weight_ratio);
        break;
    }
    if (breakdown) {
      breakdown->terms.emplace_back(loss_kind_name(term.kind), tape.val(node).v[0]);
    }
    Tape::Id weighted = tape.scale(node, term.weight);
    total = (total == Tape::kNone) ? weighted : tape.add(total, weighted);
  }
  if (breakdown) breakdown->total = tape.val(total).v[0];
  return total;
}

namespace {

double eval_plain(const CArray& pred, const CArray& target,
                  const std::function<Tape::Id(Tape&, Tape::Id)>& build) {
  Tape tape;
  Tape::Id p = tape.constant(nn::carray_to_pair_tensor(pred));
  return tape.val(build(tape, p)).v[0];
}

}  // namespace

double l1_loss(const CArray& pred, const CArray& target) {
  return eval_plain(pred, target,
                    [&](Tape& t, Tape::Id p) { return l1_loss_node(t, p, target); });
}

double l2_loss(const CArray& pred, const CArray& target) {
  return eval_plain(pred, target,
                    [&](Tape& t, Tape::Id p) { return l2_loss_node(t, p, target); });
}

double perp_loss(const CArray& pred, const CArray& target) {
  return eval_plain(pred, target,
                    [&](Tape& t, Tape::Id p) { return perp_loss_node(t, p, target); });
}

double ssim_loss(const CArray& pred, const CArray& target, int window) {
  return eval_plain(pred, target, [&](Tape& t, Tape::Id p) {
    return ssim_loss_node(t, p, target, window);
  });
}

L1SplitResult l1_split_loss(const CArray& pred, const CArray& target,
                            const LossConfig& config) {
  config.validate();
  L1SplitResult out;
  out.total = eval_plain(pred, target, [&](Tape& t, Tape::Id p) {
    return l1_split_loss_node(t, p, target, config.highpass_cutoff,
                              config.highpass_weight_ratio);
  });
  auto [w_hi, w_lo] = band_weights(config.highpass_weight_ratio);
  std::vector<double> hp = highpass_filter(target.h(), target.w(), config.highpass_cutoff);
  std::vector<double> lp(hp.size());
  for (size_t i = 0; i < hp.size(); ++i) lp[i] = 1.0 - hp[i];
  out.high_term = w_hi * l1_loss(filtered_copy(pred, hp), filtered_copy(target, hp));
  out.low_term = w_lo * l1_loss(filtered_copy(pred, lp), filtered_copy(target, lp));
  return out;
}

LossBreakdown combined_loss(const CArray& pred, const CArray& target,
                            const LossConfig& config) {
  LossBreakdown breakdown;
  Tape tape;
  Tape::Id p = tape.constant(nn::carray_to_pair_tensor(pred));
  combined_loss_node(tape, p, target, config, &breakdown);
  return breakdown;
}

}  // namespace cinerecon::losses
