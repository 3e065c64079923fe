#pragma once

#include <memory>

#include "cinerecon/model/config.hpp"
#include "cinerecon/model/layers.hpp"

namespace cinerecon::model {

// CRNN reconstruction backbone: per cascade a BCRNN unit (plus an optional
// second one), three iteration-recurrent units, a plain CNN back to two
// channels, a residual connection and a data-consistency step. Hidden
// states propagate over time within a cascade and across cascades.
class CrnnModel {
 public:
  struct Cascade {
    BcrnnUnit bcrnn1;
    std::optional<BcrnnUnit> bcrnn2;
    std::array<CrnnIterUnit, 3> iter_units;
    ConvLayer out_conv;
    Param log_lambda;

    void collect(std::vector<Param*>& out);
    std::int64_t parameter_count() const;
  };

  CrnnModel(const ReconModelConfig& cfg, std::uint64_t seed);

  // zero_filled: (T, 2, H, W) node; returns the final cascade's DC output
  Tape::Id forward(Tape& tape, Tape::Id zero_filled, const KSpaceData& y,
                   bool trainable = true) const;

  Cascade& cascade(int i) { return cascades_[weight_sharing_ ? 0 : static_cast<size_t>(i)]; }
  const Cascade& cascade(int i) const {
    return cascades_[weight_sharing_ ? 0 : static_cast<size_t>(i)];
  }
  int num_cascades() const { return n_cascades_; }

  void collect(std::vector<Param*>& out);
  std::int64_t parameter_count() const;

 private:
  int n_cascades_;
  bool weight_sharing_;
  bool extra_bcrnn_;
  std::vector<Cascade> cascades_;
};

// Lightweight refinement head: learned stride-2 downsample, a stack of
// residual convolution blocks, a final convolution and sub-pixel upsample
// back to the input size, wrapped in a global residual connection (all-zero
// weights give the identity map). Frames are processed independently.
class RefinementModel {
 public:
  RefinementModel(const ReconModelConfig& cfg, std::uint64_t seed);

  Tape::Id forward(Tape& tape, Tape::Id x, bool trainable = true) const;

  void collect(std::vector<Param*>& out);
  std::int64_t parameter_count() const;
  void zero_init();

 private:
  struct Block {
    ConvLayer c1, c2;
  };
  ConvLayer down_;         // 2 -> C, stride 2
  std::vector<Block> blocks_;
  ConvLayer pre_shuffle_;  // C -> 8, feeds pixel shuffle to 2 channels at 2x
};

// Slice-by-slice 2D U-Net baseline: weight-shared cascades of a two-level
// encoder/decoder with residual output, each followed by data consistency.
// No temporal modelling: frames are independent.
class UnetModel {
 public:
  UnetModel(const ReconModelConfig& cfg, std::uint64_t seed);

  Tape::Id forward(Tape& tape, Tape::Id zero_filled, const KSpaceData& y,
                   bool trainable = true) const;

  void collect(std::vector<Param*>& out);
  std::int64_t parameter_count() const;
  int num_cascades() const { return n_cascades_; }

 private:
  struct ConvBlock {
    ConvLayer a, b;
    Tape::Id apply(Tape& tape, Tape::Id x, bool trainable) const;
    void collect(std::vector<Param*>& out);
    std::int64_t parameter_count() const;
  };
  Tape::Id unet_body(Tape& tape, Tape::Id x, bool trainable) const;

  int n_cascades_;
  ConvBlock enc0_, enc1_, bottleneck_, dec1_, dec0_;
  ConvLayer final_;
  Param log_lambda_;
};

// Facade bundling a backbone (CRNN or U-Net) with the optional refinement
// module, exposing forward passes for training and plain inference.
class ReconstructionModel {
 public:
  ReconModelConfig config;
  std::unique_ptr<CrnnModel> crnn;
  std::unique_ptr<UnetModel> unet;
  std::unique_ptr<RefinementModel> refinement;

  static ReconstructionModel create(const ReconModelConfig& cfg, std::uint64_t seed);

  // returns {backbone output, final output}; the two coincide without a
  // refinement module
  std::pair<Tape::Id, Tape::Id> forward(Tape& tape, Tape::Id zero_filled,
                                        const KSpaceData& y, bool backbone_trainable = true,
                                        bool refinement_trainable = true) const;

  // plain inference from undersampled k-space
  CineSlice reconstruct(const KSpaceData& y) const;

  std::vector<Param*> parameters();
  std::vector<Param*> backbone_parameters();
  std::vector<Param*> refinement_parameters();
  std::int64_t parameter_count() const;
  std::int64_t backbone_parameter_count() const;
};

}  // namespace cinerecon::model
