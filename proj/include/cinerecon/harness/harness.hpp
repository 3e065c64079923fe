#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cinerecon/losses/losses.hpp"
#include "cinerecon/metrics/metrics.hpp"
#include "cinerecon/model/config.hpp"
#include "cinerecon/phantom/phantom.hpp"

namespace cinerecon::harness {

// Full run configuration for the CLI. JSON file plus key=value overrides;
// every field has a default so a subcommand can run from flags alone.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string run_id = "run";
  std::filesystem::path data_dir = "data";
  std::filesystem::path checkpoint_dir = "checkpoints";
  std::filesystem::path report_dir = "reports";
  std::vector<int> accelerations = {4, 8, 10};

  ReconModelConfig model;
  losses::LossConfig loss = losses::loss_preset("perp_l1_split");
  std::string loss_preset_name = "perp_l1_split";

  struct Optimizer {
    double lr = 3e-4;
    int epochs = 30;
    int batch_size = 1;
    double grad_clip_norm = 1.0;
    int early_stop_patience = 10;
  } optimizer;

  struct Phantom {
    int n_slices = 10;
    int frames = 8;
    int height = 64;
    int width = 64;
    int n_ellipses = 4;
    double contraction_amplitude = 0.15;
    double noise_std = 0.0;
    int pad_height = 0;  // when > 0, zero-pad generated slices to this canvas
    int pad_width = 0;
  } phantom;

  struct Train {
    std::string stage1_checkpoint;  // required for refinement=sequential
    std::string resume;
  } train;

  struct Eval {
    std::string checkpoint;
    std::string baseline_checkpoint;
    bool include_oracle = false;
    std::string split = "test";
  } eval;

  struct Reconstruct {
    std::string checkpoint;
    std::string output_dir = "reconstructions";
  } reconstruct;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::optional<std::filesystem::path>& config_file,
                        const std::vector<std::string>& overrides);
};

// Aggregate metric table: rows are acceleration x metric, columns are
// models, one block per protocol. JSON round-trips losslessly (infinities
// are encoded symbolically).
class MetricTable {
 public:
  void set(const std::string& protocol, const std::string& model, int acceleration,
           const std::string& metric, double value);
  double get(const std::string& protocol, const std::string& model, int acceleration,
             const std::string& metric) const;
  bool has(const std::string& protocol, const std::string& model, int acceleration,
           const std::string& metric) const;

  const std::vector<std::string>& models() const { return models_; }
  const std::vector<int>& accelerations() const { return accelerations_; }

  nlohmann::json to_json() const;
  static MetricTable from_json(const nlohmann::json& j);
  std::string to_text() const;

  bool operator==(const MetricTable& other) const { return cells_ == other.cells_; }

 private:
  std::vector<std::string> models_;
  std::vector<int> accelerations_;
  std::map<std::string, double> cells_;
};

// 8-bit binary PGM; values are clipped to [0, scale] and normalized.
void write_pgm(const std::filesystem::path& path, const metrics::Image2D& img, double scale);

// Subcommand entry points; they throw cinerecon::Error on failure.
void cmd_gen_data(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
MetricTable cmd_eval(const RunConfig& cfg);
void cmd_reconstruct(const RunConfig& cfg, const std::vector<std::filesystem::path>& inputs,
                     const std::vector<std::filesystem::path>& references = {});

}  // namespace cinerecon::harness
