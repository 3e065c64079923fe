#include "cinerecon/model/checkpoint.hpp"

#include <cstring>

#include "cinerecon/core/container.hpp"

namespace cinerecon::model {

namespace {

std::vector<std::uint64_t> tensor_dims(const nn::Tensor& t) {
  return {static_cast<std::uint64_t>(t.shape[0]), static_cast<std::uint64_t>(t.shape[1]),
          static_cast<std::uint64_t>(t.shape[2]), static_cast<std::uint64_t>(t.shape[3])};
}

nn::Tensor tensor_from_entry(const NamedArrayFile::Entry& e, const std::string& name) {
  require(e.dims.size() == 4, ErrorCategory::state,
          "checkpoint: parameter '" + name + "' is not 4-D");
  nn::Tensor t(static_cast<int>(e.dims[0]), static_cast<int>(e.dims[1]),
               static_cast<int>(e.dims[2]), static_cast<int>(e.dims[3]));
  require(e.raw.size() == t.v.size() * 8, ErrorCategory::state,
          "checkpoint: payload size mismatch for '" + name + "'");
  std::memcpy(t.v.data(), e.raw.data(), e.raw.size());
  return t;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, ReconstructionModel& model,
                     const CheckpointExtras& extras) {
  NamedArrayFile file;
  const std::int64_t schema = kCheckpointSchema;
  file.put_i64("__schema__", {1}, &schema);
  const std::string cfg = model.config.to_json().dump();
  file.put_u8("__config__", {cfg.size()},
              reinterpret_cast<const std::uint8_t*>(cfg.data()));
  file.put_i64("__epoch__", {1}, &extras.epoch);
  const double best = extras.best_eval_ssim;
  file.put_f64("__best_eval_ssim__", {1}, &best);
  file.put_i64("__adam_steps__", {1}, &extras.adam_steps);

  for (nn::Param* p : model.parameters()) {
    file.put_f64("param/" + p->name, tensor_dims(p->value), p->value.v.data());
  }
  for (const auto& [name, t] : extras.adam_m) {
    file.put_f64("adam_m/" + name, tensor_dims(t), t.v.data());
  }
  for (const auto& [name, t] : extras.adam_v) {
    file.put_f64("adam_v/" + name, tensor_dims(t), t.v.data());
  }
  file.write(path);
}

ReconstructionModel load_checkpoint(const std::filesystem::path& path,
                                    CheckpointExtras* extras_out) {
  NamedArrayFile file = NamedArrayFile::read(path);
  require(file.has("__schema__"), ErrorCategory::state,
          "checkpoint: missing schema id in " + path.string());
  const auto schema = file.get_i64("__schema__");
  require(schema.size() == 1 && schema[0] == kCheckpointSchema, ErrorCategory::state,
          "checkpoint: unsupported schema in " + path.string());

  const auto cfg_bytes = file.get_u8("__config__");
  nlohmann::json cfg_json;
  try {
    cfg_json = nlohmann::json::parse(cfg_bytes.begin(), cfg_bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::state, std::string("checkpoint: bad embedded config: ") + e.what());
  }
  ReconModelConfig cfg = ReconModelConfig::from_json(cfg_json);

  ReconstructionModel model = ReconstructionModel::create(cfg, /*seed=*/0);
  for (nn::Param* p : model.parameters()) {
    const std::string key = "param/" + p->name;
    require(file.has(key), ErrorCategory::state, "checkpoint: missing parameter " + p->name);
    nn::Tensor t = tensor_from_entry(file.entry(key), p->name);
    require(t.same_shape(p->value), ErrorCategory::state,
            "checkpoint: shape mismatch for " + p->name);
    p->value = std::move(t);
  }

  if (extras_out) {
    extras_out->epoch = file.get_i64("__epoch__")[0];
    extras_out->best_eval_ssim = file.get_f64("__best_eval_ssim__")[0];
    extras_out->adam_steps = file.has("__adam_steps__") ? file.get_i64("__adam_steps__")[0] : 0;
    for (const auto& name : file.names()) {
      if (name.rfind("adam_m/", 0) == 0) {
        extras_out->adam_m[name.substr(7)] = tensor_from_entry(file.entry(name), name);
      } else if (name.rfind("adam_v/", 0) == 0) {
        extras_out->adam_v[name.substr(7)] = tensor_from_entry(file.entry(name), name);
      }
    }
  }
  return model;
}

}  // namespace cinerecon::model
