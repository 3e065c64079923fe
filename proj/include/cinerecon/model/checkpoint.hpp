#pragma once

#include <filesystem>
#include <map>

#include "cinerecon/model/model.hpp"

namespace cinerecon::model {

// Checkpoint files are named-parameter containers with the model config
// embedded and a schema id for compatibility checks.
inline constexpr std::int64_t kCheckpointSchema = 1;

struct CheckpointExtras {
  std::int64_t epoch = 0;
  double best_eval_ssim = 0.0;
  std::map<std::string, nn::Tensor> adam_m, adam_v;  // optional resume state
  std::int64_t adam_steps = 0;
};

void save_checkpoint(const std::filesystem::path& path, ReconstructionModel& model,
                     const CheckpointExtras& extras = {});

// Creates the model from the embedded config and loads all parameters.
ReconstructionModel load_checkpoint(const std::filesystem::path& path,
                                    CheckpointExtras* extras_out = nullptr);

}  // namespace cinerecon::model
