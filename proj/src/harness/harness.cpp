#include "cinerecon/harness/harness.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cinerecon/core/container.hpp"
#include "cinerecon/core/operators.hpp"
#include "cinerecon/train/train.hpp"

namespace cinerecon::harness {

namespace {

nlohmann::json loss_to_json(const losses::LossConfig& cfg, const std::string& preset) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : cfg.terms) {
    terms.push_back({{"kind", losses::loss_kind_name(t.kind)}, {"weight", t.weight}});
  }
  return {{"preset", preset},
          {"terms", terms},
          {"highpass_cutoff", cfg.highpass_cutoff},
          {"highpass_weight_ratio", cfg.highpass_weight_ratio},
          {"ssim_window", cfg.ssim_window}};
}

void loss_from_json(const nlohmann::json& j, losses::LossConfig& cfg, std::string& preset) {
  if (j.contains("preset")) {
    preset = j.at("preset").get<std::string>();
    cfg = losses::loss_preset(preset);
  }
  if (j.contains("terms") && !j.at("terms").empty()) {
    cfg.terms.clear();
    for (const auto& t : j.at("terms")) {
      cfg.terms.push_back({losses::loss_kind_from_name(t.at("kind").get<std::string>()),
                           t.value("weight", 1.0)});
    }
  }
  cfg.highpass_cutoff = j.value("highpass_cutoff", cfg.highpass_cutoff);
  cfg.highpass_weight_ratio = j.value("highpass_weight_ratio", cfg.highpass_weight_ratio);
  cfg.ssim_window = j.value("ssim_window", cfg.ssim_window);
  cfg.validate();
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  return {{"seed", seed},
          {"run_id", run_id},
          {"data_dir", data_dir.string()},
          {"checkpoint_dir", checkpoint_dir.string()},
          {"report_dir", report_dir.string()},
          {"accelerations", accelerations},
          {"model", model.to_json()},
          {"loss", loss_to_json(loss, loss_preset_name)},
          {"optimizer",
           {{"lr", optimizer.lr},
            {"epochs", optimizer.epochs},
            {"batch_size", optimizer.batch_size},
            {"grad_clip_norm", optimizer.grad_clip_norm},
            {"early_stop_patience", optimizer.early_stop_patience}}},
          {"phantom",
           {{"n_slices", phantom.n_slices},
            {"frames", phantom.frames},
            {"height", phantom.height},
            {"width", phantom.width},
            {"n_ellipses", phantom.n_ellipses},
            {"contraction_amplitude", phantom.contraction_amplitude},
            {"noise_std", phantom.noise_std},
            {"pad_height", phantom.pad_height},
            {"pad_width", phantom.pad_width}}},
          {"train",
           {{"stage1_checkpoint", train.stage1_checkpoint}, {"resume", train.resume}}},
          {"eval",
           {{"checkpoint", eval.checkpoint},
            {"baseline_checkpoint", eval.baseline_checkpoint},
            {"include_oracle", eval.include_oracle},
            {"split", eval.split}}},
          {"reconstruct",
           {{"checkpoint", reconstruct.checkpoint},
            {"output_dir", reconstruct.output_dir}}}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    cfg.seed = j.value("seed", cfg.seed);
    cfg.run_id = j.value("run_id", cfg.run_id);
    cfg.data_dir = j.value("data_dir", cfg.data_dir.string());
    cfg.checkpoint_dir = j.value("checkpoint_dir", cfg.checkpoint_dir.string());
    cfg.report_dir = j.value("report_dir", cfg.report_dir.string());
    if (j.contains("accelerations")) {
      cfg.accelerations = j.at("accelerations").get<std::vector<int>>();
    }
    if (j.contains("model")) cfg.model = ReconModelConfig::from_json(j.at("model"));
    if (j.contains("loss")) loss_from_json(j.at("loss"), cfg.loss, cfg.loss_preset_name);
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      cfg.optimizer.lr = o.value("lr", cfg.optimizer.lr);
      cfg.optimizer.epochs = o.value("epochs", cfg.optimizer.epochs);
      cfg.optimizer.batch_size = o.value("batch_size", cfg.optimizer.batch_size);
      cfg.optimizer.grad_clip_norm = o.value("grad_clip_norm", cfg.optimizer.grad_clip_norm);
      cfg.optimizer.early_stop_patience =
          o.value("early_stop_patience", cfg.optimizer.early_stop_patience);
    }
    if (j.contains("phantom")) {
      const auto& p = j.at("phantom");
      cfg.phantom.n_slices = p.value("n_slices", cfg.phantom.n_slices);
      cfg.phantom.frames = p.value("frames", cfg.phantom.frames);
      cfg.phantom.height = p.value("height", cfg.phantom.height);
      cfg.phantom.width = p.value("width", cfg.phantom.width);
      cfg.phantom.n_ellipses = p.value("n_ellipses", cfg.phantom.n_ellipses);
      cfg.phantom.contraction_amplitude =
          p.value("contraction_amplitude", cfg.phantom.contraction_amplitude);
      cfg.phantom.noise_std = p.value("noise_std", cfg.phantom.noise_std);
      cfg.phantom.pad_height = p.value("pad_height", cfg.phantom.pad_height);
      cfg.phantom.pad_width = p.value("pad_width", cfg.phantom.pad_width);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      cfg.train.stage1_checkpoint = t.value("stage1_checkpoint", cfg.train.stage1_checkpoint);
      cfg.train.resume = t.value("resume", cfg.train.resume);
    }
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      cfg.eval.checkpoint = e.value("checkpoint", cfg.eval.checkpoint);
      cfg.eval.baseline_checkpoint =
          e.value("baseline_checkpoint", cfg.eval.baseline_checkpoint);
      cfg.eval.include_oracle = e.value("include_oracle", cfg.eval.include_oracle);
      cfg.eval.split = e.value("split", cfg.eval.split);
    }
    if (j.contains("reconstruct")) {
      const auto& r = j.at("reconstruct");
      cfg.reconstruct.checkpoint = r.value("checkpoint", cfg.reconstruct.checkpoint);
      cfg.reconstruct.output_dir = r.value("output_dir", cfg.reconstruct.output_dir);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::config, std::string("bad run config: ") + e.what());
  }
  for (int ar : cfg.accelerations) {
    require(ar >= 1, ErrorCategory::config, "accelerations must be positive");
  }
  return cfg;
}

RunConfig RunConfig::load(const std::optional<std::filesystem::path>& config_file,
                          const std::vector<std::string>& overrides) {
  nlohmann::json j = nlohmann::json::object();
  if (config_file) {
    std::ifstream is(*config_file);
    if (!is) throw Error(ErrorCategory::io, "cannot open config file: " + config_file->string());
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCategory::config,
                  "config file is not valid JSON: " + std::string(e.what()));
    }
  }
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    require(eq != std::string::npos && eq > 0, ErrorCategory::config,
            "--set expects key=value, got: " + kv);
    const std::string key = kv.substr(0, eq);
    const std::string raw = kv.substr(eq + 1);
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
      value = raw;  // bare strings are allowed unquoted
    }
    nlohmann::json* node = &j;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    require(!parts.empty(), ErrorCategory::config, "--set key is empty");
    for (size_t i = 0; i + 1 < parts.size(); ++i) node = &((*node)[parts[i]]);
    (*node)[parts.back()] = value;
  }
  return from_json(j);
}

void MetricTable::set(const std::string& protocol, const std::string& model,
                      int acceleration, const std::string& metric, double value) {
  const std::string key =
      protocol + "/" + model + "/" + std::to_string(acceleration) + "/" + metric;
  cells_[key] = value;
  if (std::find(models_.begin(), models_.end(), model) == models_.end()) {
    models_.push_back(model);
  }
  if (std::find(accelerations_.begin(), accelerations_.end(), acceleration) ==
      accelerations_.end()) {
    accelerations_.push_back(acceleration);
  }
}

double MetricTable::get(const std::string& protocol, const std::string& model,
                        int acceleration, const std::string& metric) const {
  const std::string key =
      protocol + "/" + model + "/" + std::to_string(acceleration) + "/" + metric;
  auto it = cells_.find(key);
  require(it != cells_.end(), ErrorCategory::validation, "metric table: missing cell " + key);
  return it->second;
}

bool MetricTable::has(const std::string& protocol, const std::string& model,
                      int acceleration, const std::string& metric) const {
  return cells_.count(protocol + "/" + model + "/" + std::to_string(acceleration) + "/" +
                      metric) > 0;
}

nlohmann::json MetricTable::to_json() const {
  nlohmann::json cells = nlohmann::json::object();
  for (const auto& [k, v] : cells_) {
    if (std::isinf(v)) {
      cells[k] = v > 0 ? "Infinity" : "-Infinity";
    } else if (std::isnan(v)) {
      cells[k] = "NaN";
    } else {
      cells[k] = v;
    }
  }
  return {{"models", models_}, {"accelerations", accelerations_}, {"cells", cells}};
}

MetricTable MetricTable::from_json(const nlohmann::json& j) {
  MetricTable t;
  t.models_ = j.at("models").get<std::vector<std::string>>();
  t.accelerations_ = j.at("accelerations").get<std::vector<int>>();
  for (const auto& [k, v] : j.at("cells").items()) {
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (s == "Infinity") {
        t.cells_[k] = std::numeric_limits<double>::infinity();
      } else if (s == "-Infinity") {
        t.cells_[k] = -std::numeric_limits<double>::infinity();
      } else {
        t.cells_[k] = std::numeric_limits<double>::quiet_NaN();
      }
    } else {
      t.cells_[k] = v.get<double>();
    }
  }
  return t;
}

std::string MetricTable::to_text() const {
  std::ostringstream os;
  const std::vector<std::string> metric_names = {"ssim", "nmse", "psnr"};
  for (const std::string protocol : {"full_image", "challenge_crop"}) {
    bool any = false;
    for (const auto& m : models_) {
      for (int ar : accelerations_) {
        if (has(protocol, m, ar, "ssim")) any = true;
      }
    }
    if (!any) continue;
    os << "[" << protocol << "]\n";
    os << "AR    Metric";
    for (const auto& m : models_) {
      os << "  " << m;
    }
    os << "\n";
    for (int ar : accelerations_) {
      for (const auto& metric : metric_names) {
        os << ar << "x    " << metric;
        for (const auto& m : models_) {
          if (has(protocol, m, ar, metric)) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.4f", get(protocol, m, ar, metric));
            os << "  " << buf;
          } else {
            os << "  -";
          }
        }
        os << "\n";
      }
    }
    os << "\n";
  }
  return os.str();
}

void write_pgm(const std::filesystem::path& path, const metrics::Image2D& img, double scale) {
  require_valid(scale > 0.0, "write_pgm: scale must be positive");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCategory::io, "cannot write image: " + path.string());
  os << "P5\n" << img.w << " " << img.h << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(img.w));
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) {
      const double v = std::clamp(img.at(y, x) / scale, 0.0, 1.0);
      row[static_cast<size_t>(x)] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    os.write(reinterpret_cast<const char*>(row.data()), img.w);
  }
}

namespace {

PhantomSpec phantom_spec_from(const RunConfig& cfg) {
  PhantomSpec spec;
  spec.frames = cfg.phantom.frames;
  spec.height = cfg.phantom.height;
  spec.width = cfg.phantom.width;
  spec.n_ellipses = cfg.phantom.n_ellipses;
  spec.contraction_amplitude = cfg.phantom.contraction_amplitude;
  spec.noise_std = cfg.phantom.noise_std;
  spec.seed = cfg.seed;
  return spec;
}

void write_train_log(const RunConfig& cfg, const train::TrainResult& result) {
  std::filesystem::create_directories(cfg.report_dir);
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : result.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"eval_ssim", e.eval_ssim},
                      {"eval_nmse", e.eval_nmse},
                      {"grad_norm", e.grad_norm}});
  }
  nlohmann::json j{{"run_id", cfg.run_id},
                   {"best_epoch", result.best_epoch},
                   {"best_eval_ssim", result.best_eval_ssim},
                   {"epochs", epochs}};
  std::ofstream os(cfg.report_dir / (cfg.run_id + "_train_log.json"));
  if (!os) throw Error(ErrorCategory::io, "cannot write training log");
  os << j.dump(2) << "\n";
}

void copy_params_by_name(model::ReconstructionModel& dst,
                         model::ReconstructionModel& src_backbone) {
  std::map<std::string, nn::Param*> src;
  for (nn::Param* p : src_backbone.parameters()) src[p->name] = p;
  for (nn::Param* p : dst.backbone_parameters()) {
    auto it = src.find(p->name);
    require(it != src.end(), ErrorCategory::state,
            "stage-1 checkpoint is missing backbone parameter " + p->name);
    require(it->second->value.same_shape(p->value), ErrorCategory::state,
            "stage-1 checkpoint shape mismatch for " + p->name);
    p->value = it->second->value;
  }
}

}  // namespace

void cmd_gen_data(const RunConfig& cfg) {
  PhantomSpec spec = phantom_spec_from(cfg);
  std::optional<std::pair<int, int>> pad_to;
  if (cfg.phantom.pad_height > 0 || cfg.phantom.pad_width > 0) {
    require(cfg.phantom.pad_height >= spec.height && cfg.phantom.pad_width >= spec.width,
            ErrorCategory::config, "phantom.pad_* must be at least the phantom size");
    pad_to = {{cfg.phantom.pad_height, cfg.phantom.pad_width}};
  }
  generate_dataset(cfg.phantom.n_slices, spec, cfg.seed, cfg.data_dir, cfg.accelerations,
                   pad_to);
}

void cmd_train(const RunConfig& cfg) {
  require(cfg.model.kind != "oracle", ErrorCategory::config,
          "the oracle diagnostic model cannot be trained");
  train::Dataset data = train::Dataset::load(cfg.data_dir);

  train::TrainOptions options;
  options.epochs = cfg.optimizer.epochs;
  options.batch_size = cfg.optimizer.batch_size;
  options.lr = cfg.optimizer.lr;
  options.grad_clip_norm = cfg.optimizer.grad_clip_norm;
  options.early_stop_patience = cfg.optimizer.early_stop_patience;
  options.accelerations = cfg.accelerations;
  options.seed = cfg.seed;
  options.loss = cfg.loss;

  model::ReconstructionModel model = model::ReconstructionModel::create(cfg.model, cfg.seed);

  switch (cfg.model.refinement) {
    case RefinementMode::none:
      options.train_refinement = false;
      break;
    case RefinementMode::sequential: {
      require(!cfg.train.stage1_checkpoint.empty(), ErrorCategory::state,
              "refinement=sequential requires a stage-1 backbone checkpoint: train with "
              "refinement=none first and pass its checkpoint as train.stage1_checkpoint");
      require(std::filesystem::exists(cfg.train.stage1_checkpoint), ErrorCategory::state,
              "stage-1 checkpoint not found: " + cfg.train.stage1_checkpoint +
                  " (train with refinement=none first)");
      model::ReconstructionModel stage1 =
          model::load_checkpoint(cfg.train.stage1_checkpoint);
      copy_params_by_name(model, stage1);
      options.train_backbone = false;
      // refinement is trained with l1 + SSIM; the perp family stays on the
      // backbone stage
      options.loss = losses::loss_preset("l1_ssim");
      break;
    }
    case RefinementMode::end_to_end:
      options.loss = losses::loss_preset("l1_ssim");
      break;
  }

  model::CheckpointExtras resume_extras;
  if (!cfg.train.resume.empty()) {
    require(std::filesystem::exists(cfg.train.resume), ErrorCategory::io,
            "resume checkpoint not found: " + cfg.train.resume);
    model::ReconstructionModel restored =
        model::load_checkpoint(cfg.train.resume, &resume_extras);
    require(restored.config.to_json() == cfg.model.to_json(), ErrorCategory::state,
            "resume checkpoint config does not match the run config");
    std::map<std::string, nn::Param*> src;
    for (nn::Param* p : restored.parameters()) src[p->name] = p;
    for (nn::Param* p : model.parameters()) {
      auto it = src.find(p->name);
      require(it != src.end(), ErrorCategory::state, "resume missing parameter " + p->name);
      p->value = it->second->value;
    }
    if (!resume_extras.adam_m.empty()) options.resume = &resume_extras;
  }

  train::TrainResult result = train::train_model(
      model, data, options, [&](const train::EpochLog& log) {
        std::cout << "epoch " << log.epoch << "  train_loss " << log.train_loss
                  << "  eval_ssim " << log.eval_ssim << "\n";
      });

  std::filesystem::create_directories(cfg.checkpoint_dir);
  model::CheckpointExtras extras;
  extras.epoch = result.best_epoch;
  extras.best_eval_ssim = result.best_eval_ssim;
  extras.adam_m = result.adam_m;
  extras.adam_v = result.adam_v;
  extras.adam_steps = result.adam_steps;
  model::save_checkpoint(cfg.checkpoint_dir / (cfg.run_id + "_best.ckpt"), model, extras);
  write_train_log(cfg, result);
}

namespace {

struct EvalColumn {
  std::string name;
  std::function<CineSlice(const train::LoadedSlice&, const KSpaceData&)> predict;
};

}  // namespace

MetricTable cmd_eval(const RunConfig& cfg) {
  train::Dataset data = train::Dataset::load(cfg.data_dir);
  const std::vector<train::LoadedSlice>* slices = nullptr;
  if (cfg.eval.split == "test") {
    slices = &data.test;
  } else if (cfg.eval.split == "eval") {
    slices = &data.eval;
  } else if (cfg.eval.split == "train") {
    slices = &data.train;
  } else {
    throw Error(ErrorCategory::config, "eval.split must be train, eval, or test");
  }
  require(!slices->empty(), ErrorCategory::state,
          "eval: split '" + cfg.eval.split + "' is empty");

  std::vector<EvalColumn> columns;
  columns.push_back({"zero_filled", [](const train::LoadedSlice&, const KSpaceData& y) {
                       return adjoint_operator(y);
                     }});

  std::optional<model::ReconstructionModel> primary;
  if (!cfg.eval.checkpoint.empty()) {
    primary.emplace(model::load_checkpoint(cfg.eval.checkpoint));
    std::string name = primary->config.kind;
    if (primary->config.refinement != RefinementMode::none) name += "_refined";
    columns.push_back({name, [&primary](const train::LoadedSlice&, const KSpaceData& y) {
                         return primary->reconstruct(y);
                       }});
  }
  std::optional<model::ReconstructionModel> baseline;
  if (!cfg.eval.baseline_checkpoint.empty()) {
    baseline.emplace(model::load_checkpoint(cfg.eval.baseline_checkpoint));
    columns.push_back({"baseline_" + baseline->config.kind,
                       [&baseline](const train::LoadedSlice&, const KSpaceData& y) {
                         return baseline->reconstruct(y);
                       }});
  }
  if (cfg.eval.include_oracle) {
    columns.push_back({"oracle", [](const train::LoadedSlice& s, const KSpaceData&) {
                         CineSlice out;
                         out.data = s.image.data;
                         return out;
                       }});
  }

  MetricTable table;
  for (int ar : cfg.accelerations) {
    for (const auto& col : columns) {
      metrics::MetricReport full_sum, crop_sum;
      for (const auto& s : *slices) {
        auto it = s.kspace.find(ar);
        require(it != s.kspace.end(), ErrorCategory::state,
                "dataset has no acceleration " + std::to_string(ar));
        CineSlice pred = col.predict(s, it->second);
        auto report = metrics::challenge_eval(pred, s.image);
        full_sum.ssim += report.full_image.ssim;
        full_sum.nmse += report.full_image.nmse;
        full_sum.psnr += report.full_image.psnr;
        crop_sum.ssim += report.challenge_crop.ssim;
        crop_sum.nmse += report.challenge_crop.nmse;
        crop_sum.psnr += report.challenge_crop.psnr;
      }
      const double n = static_cast<double>(slices->size());
      table.set("full_image", col.name, ar, "ssim", full_sum.ssim / n);
      table.set("full_image", col.name, ar, "nmse", full_sum.nmse / n);
      table.set("full_image", col.name, ar, "psnr", full_sum.psnr / n);
      table.set("challenge_crop", col.name, ar, "ssim", crop_sum.ssim / n);
      table.set("challenge_crop", col.name, ar, "nmse", crop_sum.nmse / n);
      table.set("challenge_crop", col.name, ar, "psnr", crop_sum.psnr / n);
    }
  }

  std::filesystem::create_directories(cfg.report_dir);
  {
    std::ofstream os(cfg.report_dir / (cfg.run_id + "_metrics.json"));
    if (!os) throw Error(ErrorCategory::io, "cannot write metrics report");
    os << table.to_json().dump(2) << "\n";
  }
  {
    std::ofstream os(cfg.report_dir / (cfg.run_id + "_metrics.txt"));
    if (!os) throw Error(ErrorCategory::io, "cannot write metrics report");
    os << table.to_text();
  }
  return table;
}

void cmd_reconstruct(const RunConfig& cfg, const std::vector<std::filesystem::path>& inputs,
                     const std::vector<std::filesystem::path>& references) {
  require(!inputs.empty(), ErrorCategory::validation, "reconstruct: no input files");
  require(references.empty() || references.size() == inputs.size(), ErrorCategory::validation,
          "reconstruct: number of --reference files must match the inputs");
  require(!cfg.reconstruct.checkpoint.empty(), ErrorCategory::config,
          "reconstruct: reconstruct.checkpoint is required");
  model::ReconstructionModel model = model::load_checkpoint(cfg.reconstruct.checkpoint);

  const std::filesystem::path out_dir = cfg.reconstruct.output_dir;
  std::filesystem::create_directories(out_dir);

  for (size_t i = 0; i < inputs.size(); ++i) {
    nlohmann::json meta;
    KSpaceData y = load_kspace(inputs[i], &meta);
    CineSlice recon = model.reconstruct(y);

    // crop back to the recorded acquisition size
    if (meta.contains("original_size")) {
      const int oh = meta.at("original_size").at(0).get<int>();
      const int ow = meta.at("original_size").at(1).get<int>();
      if (oh != recon.h() || ow != recon.w()) recon = center_crop(recon, oh, ow);
    }

    std::optional<CineSlice> ref;
    if (!references.empty()) {
      CineSlice r = load_cine(references[i]);
      if (r.h() != recon.h() || r.w() != recon.w()) {
        r = center_crop(r, recon.h(), recon.w());
      }
      ref = std::move(r);
    }

    double mag_scale = 0.0;
    for (size_t k = 0; k < recon.data.size(); ++k) {
      mag_scale = std::max(mag_scale, std::abs(recon.data.data()[k]));
    }
    if (mag_scale <= 0.0) mag_scale = 1.0;

    const std::string stem = inputs[i].stem().string();
    save_cine(out_dir / (stem + "_recon.nac"), recon, {{"source", inputs[i].string()}});

    double err_scale = 0.0;
    std::vector<metrics::Image2D> err_frames;
    if (ref) {
      for (int f = 0; f < recon.t(); ++f) {
        metrics::Image2D pm = metrics::magnitude_frame(recon.data, f);
        metrics::Image2D rm = metrics::magnitude_frame(ref->data, f);
        metrics::Image2D err(pm.h, pm.w);
        for (size_t k = 0; k < err.v.size(); ++k) {
          err.v[k] = std::fabs(pm.v[k] - rm.v[k]);
          err_scale = std::max(err_scale, err.v[k]);
        }
        err_frames.push_back(std::move(err));
      }
    }

    for (int f = 0; f < recon.t(); ++f) {
      write_pgm(out_dir / (stem + "_recon_f" + std::to_string(f) + ".pgm"),
                metrics::magnitude_frame(recon.data, f), mag_scale);
      if (ref) {
        write_pgm(out_dir / (stem + "_error_f" + std::to_string(f) + ".pgm"),
                  err_frames[static_cast<size_t>(f)], err_scale > 0.0 ? err_scale : 1.0);
      }
    }

    nlohmann::json record{{"input", inputs[i].string()},
                          {"frames", recon.t()},
                          {"height", recon.h()},
                          {"width", recon.w()},
                          {"magnitude_scale", mag_scale}};
    if (ref) record["error_scale"] = err_scale;  // colorbar maximum for error maps
    std::ofstream os(out_dir / (stem + "_recon_meta.json"));
    if (!os) throw Error(ErrorCategory::io, "cannot write reconstruction metadata");
    os << record.dump(2) << "\n";
  }
}

}  // namespace cinerecon::harness
