#pragma once

#include <string>
#include <vector>

#include "cinerecon/core/types.hpp"
#include "cinerecon/nn/tape.hpp"

namespace cinerecon::losses {

enum class LossKind { l1, l2, ssim, perp, l1_split };

std::string loss_kind_name(LossKind k);
LossKind loss_kind_from_name(const std::string& s);

struct LossTerm {
  LossKind kind;
  double weight = 1.0;
};

struct LossConfig {
  std::vector<LossTerm> terms;
  double highpass_cutoff = 0.25;        // fraction of Nyquist, in (0, 1)
  double highpass_weight_ratio = 2.0;   // high : low frequency emphasis
  int ssim_window = 7;

  void validate() const;
};

// Named presets; the Table-style combination names use equal weights.
// "l1_ssim" is the refinement/end-to-end objective.
LossConfig loss_preset(const std::string& name);
std::vector<std::string> loss_preset_names();

// --- tape builders (training path); the target enters as a constant -------

nn::Tape::Id l1_loss_node(nn::Tape& tape, nn::Tape::Id pred, const CArray& target);
nn::Tape::Id l2_loss_node(nn::Tape& tape, nn::Tape::Id pred, const CArray& target);
nn::Tape::Id perp_loss_node(nn::Tape& tape, nn::Tape::Id pred, const CArray& target);
// operates on magnitudes with data range = target max
nn::Tape::Id ssim_loss_node(nn::Tape& tape, nn::Tape::Id pred, const CArray& target,
                            int window = 7);
nn::Tape::Id l1_split_loss_node(nn::Tape& tape, nn::Tape::Id pred, const CArray& target,
                                double cutoff, double weight_ratio);

struct LossBreakdown {
  double total = 0.0;
  std::vector<std::pair<std::string, double>> terms;
};

nn::Tape::Id combined_loss_node(nn::Tape& tape, nn::Tape::Id pred, const CArray& target,
                                const LossConfig& config, LossBreakdown* breakdown = nullptr);

// --- plain evaluation wrappers --------------------------------------------

double l1_loss(const CArray& pred, const CArray& target);
double l2_loss(const CArray& pred, const CArray& target);
double perp_loss(const CArray& pred, const CArray& target);
double ssim_loss(const CArray& pred, const CArray& target, int window = 7);

struct L1SplitResult {
  double total = 0.0;      // the optimized value: l1 of the band-weighted recombination
  double high_term = 0.0;  // diagnostic per-band terms
  double low_term = 0.0;
};
L1SplitResult l1_split_loss(const CArray& pred, const CArray& target,
                            const LossConfig& config);

LossBreakdown combined_loss(const CArray& pred, const CArray& target,
                            const LossConfig& config);

// Radial Butterworth-style (order 2) high-pass k-space mask at the given
// fraction-of-Nyquist cutoff, laid out to match fft2c indexing. The
// complementary low-pass is 1 - high-pass, so the bands partition exactly.
std::vector<double> highpass_filter(int h, int w, double cutoff);

// band weights (w_high, w_low) normalized so ratio 1:1 gives (1, 1)
std::pair<double, double> band_weights(double weight_ratio);

}  // namespace cinerecon::losses
