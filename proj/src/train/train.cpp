#include "cinerecon/train/train.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "cinerecon/core/container.hpp"
#include "cinerecon/core/operators.hpp"
#include "cinerecon/metrics/metrics.hpp"
#include "cinerecon/nn/adam.hpp"

namespace cinerecon::train {

Dataset Dataset::load(const std::filesystem::path& dir) {
  return load(dir, load_manifest(dir / "manifest.json"));
}

Dataset Dataset::load(const std::filesystem::path& dir, const DatasetManifest& manifest) {
  Dataset ds;
  ds.accelerations = manifest.accelerations;
  for (const auto& e : manifest.entries) {
    LoadedSlice s;
    s.id = e.id;
    s.image = load_cine(dir / e.image_file);
    for (const auto& [ar, file] : e.kspace_files) {
      s.kspace[ar] = load_kspace(dir / file);
    }
    if (e.split == "train") {
      ds.train.push_back(std::move(s));
    } else if (e.split == "eval") {
      ds.eval.push_back(std::move(s));
    } else {
      ds.test.push_back(std::move(s));
    }
  }
  return ds;
}

namespace {

const KSpaceData& kspace_for(const LoadedSlice& s, int ar) {
  auto it = s.kspace.find(ar);
  require(it != s.kspace.end(), ErrorCategory::state,
          "dataset slice " + s.id + " has no acceleration " + std::to_string(ar));
  return it->second;
}

}  // namespace

double evaluate_ssim(const model::ReconstructionModel& model,
                     const std::vector<LoadedSlice>& slices,
                     const std::vector<int>& accelerations) {
  require_valid(!slices.empty(), "evaluate_ssim: empty split");
  double acc = 0.0;
  int n = 0;
  for (const auto& s : slices) {
    for (int ar : accelerations) {
      CineSlice recon = model.reconstruct(kspace_for(s, ar));
      auto report = metrics::challenge_eval(recon, s.image);
      acc += report.full_image.ssim;
      ++n;
    }
  }
  return acc / n;
}

TrainResult train_model(model::ReconstructionModel& model, const Dataset& data,
                        const TrainOptions& options,
                        const std::function<void(const EpochLog&)>& on_epoch) {
  require_valid(options.epochs >= 1, "train: epochs must be >= 1");
  require_valid(options.batch_size >= 1, "train: batch_size must be >= 1");
  require_valid(!options.accelerations.empty(), "train: no accelerations configured");
  require(!data.train.empty(), ErrorCategory::state, "train: dataset has no train split");
  require(!data.eval.empty(), ErrorCategory::state, "train: dataset has no eval split");
  options.loss.validate();

  std::vector<nn::Param*> trainable;
  if (options.train_backbone) {
    auto b = model.backbone_parameters();
    trainable.insert(trainable.end(), b.begin(), b.end());
  }
  if (options.train_refinement) {
    auto r = model.refinement_parameters();
    trainable.insert(trainable.end(), r.begin(), r.end());
  }
  require(!trainable.empty(), ErrorCategory::state, "train: nothing to optimize");

  nn::Adam opt(trainable, options.lr);
  if (options.resume) {
    opt.restore(options.resume->adam_m, options.resume->adam_v, options.resume->adam_steps);
  }

  std::mt19937_64 order_rng(options.seed ^ 0x853c49e6748fea9bull);
  std::mt19937_64 ar_rng(options.seed ^ 0xda3e39cb94b95bdbull);
  std::uniform_int_distribution<size_t> ar_dist(0, options.accelerations.size() - 1);

  TrainResult result;
  std::vector<nn::Tensor> best_params;
  int epochs_since_best = 0;

  std::vector<size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0u);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);

    double loss_sum = 0.0;
    double norm_sum = 0.0;
    int n_steps = 0;

    for (size_t start = 0; start < order.size(); start += options.batch_size) {
      const size_t stop = std::min(order.size(), start + options.batch_size);
      nn::Tape tape;
      nn::Tape::Id batch_loss = nn::Tape::kNone;
      for (size_t k = start; k < stop; ++k) {
        const LoadedSlice& s = data.train[order[k]];
        const int ar = options.accelerations[ar_dist(ar_rng)];
        const KSpaceData& y = kspace_for(s, ar);

        CineSlice zf = adjoint_operator(y);
        nn::Tape::Id x0 = tape.constant(nn::carray_to_pair_tensor(zf.data));
        auto [backbone_out, final_out] =
            model.forward(tape, x0, y, options.train_backbone, options.train_refinement);
        nn::Tape::Id pred = options.loss_on_final ? final_out : backbone_out;
        nn::Tape::Id item_loss =
            losses::combined_loss_node(tape, pred, s.image.data, options.loss);
        batch_loss =
            (batch_loss == nn::Tape::kNone) ? item_loss : tape.add(batch_loss, item_loss);
      }
      batch_loss = tape.scale(batch_loss, 1.0 / static_cast<double>(stop - start));
      tape.backward(batch_loss);
      norm_sum += opt.step(options.grad_clip_norm);
      opt.zero_grad();
      loss_sum += tape.val(batch_loss).v[0];
      ++n_steps;
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / n_steps;
    log.grad_norm = norm_sum / n_steps;
    log.eval_ssim = evaluate_ssim(model, data.eval, options.accelerations);
    {
      double nm = 0.0;
      int n = 0;
      for (const auto& s : data.eval) {
        for (int ar : options.accelerations) {
          CineSlice recon = model.reconstruct(kspace_for(s, ar));
          nm += metrics::challenge_eval(recon, s.image).full_image.nmse;
          ++n;
        }
      }
      log.eval_nmse = nm / n;
    }
    result.epochs.push_back(log);
    if (on_epoch) on_epoch(log);

    if (result.best_epoch < 0 || log.eval_ssim > result.best_eval_ssim) {
      result.best_epoch = epoch;
      result.best_eval_ssim = log.eval_ssim;
      best_params.clear();
      for (nn::Param* p : trainable) best_params.push_back(p->value);
      result.adam_m = opt.moment1();
      result.adam_v = opt.moment2();
      result.adam_steps = opt.steps();
      epochs_since_best = 0;
    } else if (++epochs_since_best >= options.early_stop_patience) {
      break;
    }
  }

  for (size_t i = 0; i < trainable.size(); ++i) trainable[i]->value = best_params[i];
  return result;
}

}  // namespace cinerecon::train
