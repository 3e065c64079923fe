#pragma once

#include <filesystem>
#include <functional>

#include "cinerecon/losses/losses.hpp"
#include "cinerecon/model/checkpoint.hpp"
#include "cinerecon/phantom/phantom.hpp"

namespace cinerecon::train {

struct LoadedSlice {
  std::string id;
  CineSlice image;
  std::map<int, KSpaceData> kspace;  // acceleration -> undersampled data
};

struct Dataset {
  std::vector<LoadedSlice> train, eval, test;
  std::vector<int> accelerations;

  static Dataset load(const std::filesystem::path& dir);
  static Dataset load(const std::filesystem::path& dir, const DatasetManifest& manifest);
};

struct TrainOptions {
  int epochs = 30;
  int batch_size = 1;
  double lr = 3e-4;
  double grad_clip_norm = 1.0;
  int early_stop_patience = 10;
  std::vector<int> accelerations = {4, 8, 10};
  losses::LossConfig loss = losses::loss_preset("perp_l1_split");
  std::uint64_t seed = 0;
  // which side of the model the optimizer updates
  bool train_backbone = true;
  bool train_refinement = true;
  // loss applies to the refinement output when present, else backbone output
  bool loss_on_final = true;
  // optimizer state to continue from (model params must already be loaded)
  const model::CheckpointExtras* resume = nullptr;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double eval_ssim = 0.0;
  double eval_nmse = 0.0;
  double grad_norm = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  int best_epoch = -1;
  double best_eval_ssim = 0.0;
  // optimizer state snapshot taken when the best epoch was recorded, so a
  // saved checkpoint can be resumed consistently
  std::map<std::string, nn::Tensor> adam_m, adam_v;
  std::int64_t adam_steps = 0;
};

// Mixed-acceleration training: each sample draws one of the configured
// acceleration rates. Writes nothing; the caller persists checkpoints.
// The model is left holding the best-by-eval-SSIM parameters.
TrainResult train_model(model::ReconstructionModel& model, const Dataset& data,
                        const TrainOptions& options,
                        const std::function<void(const EpochLog&)>& on_epoch = {});

// Mean full-image SSIM of the model over a split at the given accelerations.
double evaluate_ssim(const model::ReconstructionModel& model,
                     const std::vector<LoadedSlice>& slices,
                     const std::vector<int>& accelerations);

}  // namespace cinerecon::train
