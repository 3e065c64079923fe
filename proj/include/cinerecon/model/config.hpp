#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "cinerecon/core/errors.hpp"

namespace cinerecon {

enum class RefinementMode { none, sequential, end_to_end };

std::string refinement_mode_name(RefinementMode m);
RefinementMode refinement_mode_from_name(const std::string& s);

struct ReconModelConfig {
  std::string kind = "crnn";  // crnn | unet | oracle (oracle is a diagnostic column in eval)
  int cascades = 6;
  int channels = 48;
  bool weight_sharing = false;
  bool extra_bcrnn = true;
  RefinementMode refinement = RefinementMode::none;
  double dc_log_lambda_init = std::log(0.1);
  int kernel_size = 3;
  int refinement_channels = 32;
  int refinement_blocks = 3;
  int unet_pool_levels = 2;

  void validate() const {
    require(kind == "crnn" || kind == "unet" || kind == "oracle", ErrorCategory::config,
            "model.kind must be crnn, unet, or oracle");
    require(cascades >= 1, ErrorCategory::config, "cascades must be >= 1");
    require(channels >= 1, ErrorCategory::config, "channels must be >= 1");
    require(kernel_size >= 1 && kernel_size % 2 == 1, ErrorCategory::config,
            "kernel_size must be odd and >= 1");
    require(refinement_channels >= 1, ErrorCategory::config,
            "refinement_channels must be >= 1");
    require(refinement_blocks >= 0, ErrorCategory::config, "refinement_blocks must be >= 0");
  }

  nlohmann::json to_json() const;
  static ReconModelConfig from_json(const nlohmann::json& j);
};

}  // namespace cinerecon
