#include "cinerecon/model/model.hpp"

#include "cinerecon/core/operators.hpp"

namespace cinerecon::model {

void CrnnModel::Cascade::collect(std::vector<Param*>& out) {
  bcrnn1.collect(out);
  if (bcrnn2) bcrnn2->collect(out);
  for (auto& u : iter_units) u.collect(out);
  out_conv.collect(out);
  out.push_back(&log_lambda);
}

std::int64_t CrnnModel::Cascade::parameter_count() const {
  std::int64_t n = bcrnn1.parameter_count();
  if (bcrnn2) n += bcrnn2->parameter_count();
  for (const auto& u : iter_units) n += u.parameter_count();
  n += out_conv.parameter_count();
  n += 1;  // log_lambda
  return n;
}

CrnnModel::CrnnModel(const ReconModelConfig& cfg, std::uint64_t seed)
    : n_cascades_(cfg.cascades),
      weight_sharing_(cfg.weight_sharing),
      extra_bcrnn_(cfg.extra_bcrnn) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  const int n_sets = weight_sharing_ ? 1 : n_cascades_;
  const int c = cfg.channels;
  const int k = cfg.kernel_size;
  cascades_.resize(static_cast<size_t>(n_sets));
  for (int i = 0; i < n_sets; ++i) {
    const std::string base =
        weight_sharing_ ? std::string("crnn/shared") : "crnn/cascade" + std::to_string(i);
    Cascade& cas = cascades_[static_cast<size_t>(i)];
    cas.bcrnn1.init(base + "/bcrnn1", 2, c, k, rng);
    if (extra_bcrnn_) {
      cas.bcrnn2.emplace();
      cas.bcrnn2->init(base + "/bcrnn2", c, c, k, rng);
    }
    for (int u = 0; u < 3; ++u) {
      cas.iter_units[static_cast<size_t>(u)].init(base + "/crnn_i" + std::to_string(u), c, c,
                                                  k, rng);
    }
    // small-gain output conv keeps the initial residual near the DC path
    cas.out_conv.init(base + "/cnn", 2, c, k, rng, 0.1, true);
    cas.log_lambda = Param(base + "/log_lambda", Tensor::scalar(cfg.dc_log_lambda_init));
  }
}

Tape::Id CrnnModel::forward(Tape& tape, Tape::Id zero_filled, const KSpaceData& y,
                            bool trainable) const {
  require_valid(tape.val(zero_filled).shape[1] == 2, "crnn forward: expected 2 channels");

  struct Hidden {
    Tape::Id bcrnn1 = Tape::kNone;
    Tape::Id bcrnn2 = Tape::kNone;
    std::array<Tape::Id, 3> iter{Tape::kNone, Tape::kNone, Tape::kNone};
  };
  Hidden hidden;

  Tape::Id x = zero_filled;
  for (int i = 0; i < n_cascades_; ++i) {
    const Cascade& cas = cascade(i);
    auto& self = const_cast<Cascade&>(cas);

    Tape::Id b1 = cas.bcrnn1.apply(tape, x, hidden.bcrnn1, trainable);
    Tape::Id feat = b1;
    Tape::Id b2 = Tape::kNone;
    if (cas.bcrnn2) {
      b2 = cas.bcrnn2->apply(tape, feat, hidden.bcrnn2, trainable);
      feat = b2;
    }
    std::array<Tape::Id, 3> it{};
    for (int u = 0; u < 3; ++u) {
      feat = cas.iter_units[static_cast<size_t>(u)].apply(tape, feat,
                                                          hidden.iter[static_cast<size_t>(u)],
                                                          trainable);
      it[static_cast<size_t>(u)] = feat;
    }
    Tape::Id res = cas.out_conv.apply(tape, feat, trainable);
    Tape::Id pred = tape.add(x, res);
    Tape::Id ll = trainable ? tape.param(self.log_lambda) : tape.constant(cas.log_lambda.value);
    x = tape.data_consistency(pred, y, ll);

    hidden.bcrnn1 = b1;
    hidden.bcrnn2 = b2;
    hidden.iter = it;
  }
  return x;
}

void CrnnModel::collect(std::vector<Param*>& out) {
  for (auto& cas : cascades_) cas.collect(out);
}

std::int64_t CrnnModel::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& cas : cascades_) n += cas.parameter_count();
  return n;
}

RefinementModel::RefinementModel(const ReconModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed ^ 0xa02bdbf7bb3c0a7ull);
  const int c = cfg.refinement_channels;
  const int k = cfg.kernel_size;
  down_.init("refine/down", c, 2, k, rng, 1.0, true, /*stride=*/2);
  blocks_.resize(static_cast<size_t>(cfg.refinement_blocks));
  for (int i = 0; i < cfg.refinement_blocks; ++i) {
    blocks_[static_cast<size_t>(i)].c1.init("refine/block" + std::to_string(i) + "/c1", c, c,
                                            k, rng);
    blocks_[static_cast<size_t>(i)].c2.init("refine/block" + std::to_string(i) + "/c2", c, c,
                                            k, rng, 0.1);
  }
  // small-gain head so the module starts close to the identity
  pre_shuffle_.init("refine/head", 8, c, k, rng, 0.1, true);
}

void RefinementModel::zero_init() {
  auto zero = [](Param& p) { std::fill(p.value.v.begin(), p.value.v.end(), 0.0); };
  zero(down_.weight);
  zero(down_.bias);
  for (auto& b : blocks_) {
    zero(b.c1.weight);
    zero(b.c1.bias);
    zero(b.c2.weight);
    zero(b.c2.bias);
  }
  zero(pre_shuffle_.weight);
  zero(pre_shuffle_.bias);
}

Tape::Id RefinementModel::forward(Tape& tape, Tape::Id x, bool trainable) const {
  const auto& s = tape.val(x).shape;
  require_valid(s[1] == 2, "refinement: expected 2-channel input");
  require_valid(s[2] % 2 == 0 && s[3] % 2 == 0,
                "refinement: spatial dims must be divisible by 2");

  Tape::Id d = tape.relu(down_.apply(tape, x, trainable));
  for (const auto& blk : blocks_) {
    Tape::Id h = tape.relu(blk.c1.apply(tape, d, trainable));
    h = blk.c2.apply(tape, h, trainable);
    d = tape.add(d, h);
  }
  Tape::Id head = pre_shuffle_.apply(tape, d, trainable);
  Tape::Id up = tape.pixel_shuffle2(head);
  return tape.add(x, up);
}

void RefinementModel::collect(std::vector<Param*>& out) {
  down_.collect(out);
  for (auto& b : blocks_) {
    b.c1.collect(out);
    b.c2.collect(out);
  }
  pre_shuffle_.collect(out);
}

std::int64_t RefinementModel::parameter_count() const {
  std::int64_t n = down_.parameter_count() + pre_shuffle_.parameter_count();
  for (const auto& b : blocks_) n += b.c1.parameter_count() + b.c2.parameter_count();
  return n;
}

Tape::Id UnetModel::ConvBlock::apply(Tape& tape, Tape::Id x, bool trainable) const {
  Tape::Id h = tape.relu(a.apply(tape, x, trainable));
  return tape.relu(b.apply(tape, h, trainable));
}

void UnetModel::ConvBlock::collect(std::vector<Param*>& out) {
  a.collect(out);
  b.collect(out);
}

std::int64_t UnetModel::ConvBlock::parameter_count() const {
  return a.parameter_count() + b.parameter_count();
}

UnetModel::UnetModel(const ReconModelConfig& cfg, std::uint64_t seed)
    : n_cascades_(cfg.cascades) {
  cfg.validate();
  std::mt19937_64 rng(seed ^ 0x6c62272e07bb0142ull);
  const int c = cfg.channels;
  const int k = cfg.kernel_size;
  enc0_.a.init("unet/enc0/a", c, 2, k, rng);
  enc0_.b.init("unet/enc0/b", c, c, k, rng);
  enc1_.a.init("unet/enc1/a", 2 * c, c, k, rng);
  enc1_.b.init("unet/enc1/b", 2 * c, 2 * c, k, rng);
  bottleneck_.a.init("unet/bottleneck/a", 4 * c, 2 * c, k, rng);
  bottleneck_.b.init("unet/bottleneck/b", 4 * c, 4 * c, k, rng);
  dec1_.a.init("unet/dec1/a", 2 * c, 6 * c, k, rng);
  dec1_.b.init("unet/dec1/b", 2 * c, 2 * c, k, rng);
  dec0_.a.init("unet/dec0/a", c, 3 * c, k, rng);
  dec0_.b.init("unet/dec0/b", c, c, k, rng);
  final_.init("unet/final", 2, c, 1, rng, 0.1, true);
  log_lambda_ = Param("unet/log_lambda", Tensor::scalar(cfg.dc_log_lambda_init));
}

Tape::Id UnetModel::unet_body(Tape& tape, Tape::Id x, bool trainable) const {
  const auto& s = tape.val(x).shape;
  require_valid(s[2] % 4 == 0 && s[3] % 4 == 0,
                "unet: spatial dims must be divisible by 4");
  Tape::Id e0 = enc0_.apply(tape, x, trainable);
  Tape::Id e1 = enc1_.apply(tape, tape.avg_pool2(e0), trainable);
  Tape::Id bn = bottleneck_.apply(tape, tape.avg_pool2(e1), trainable);
  Tape::Id d1 = dec1_.apply(
      tape, tape.concat_channels({tape.upsample_nearest2(bn), e1}), trainable);
  Tape::Id d0 = dec0_.apply(
      tape, tape.concat_channels({tape.upsample_nearest2(d1), e0}), trainable);
  return final_.apply(tape, d0, trainable);
}

Tape::Id UnetModel::forward(Tape& tape, Tape::Id zero_filled, const KSpaceData& y,
                            bool trainable) const {
  require_valid(tape.val(zero_filled).shape[1] == 2, "unet forward: expected 2 channels");
  auto& self = const_cast<UnetModel&>(*this);
  Tape::Id x = zero_filled;
  for (int i = 0; i < n_cascades_; ++i) {
    Tape::Id pred = tape.add(x, unet_body(tape, x, trainable));
    Tape::Id ll =
        trainable ? tape.param(self.log_lambda_) : tape.constant(log_lambda_.value);
    x = tape.data_consistency(pred, y, ll);
  }
  return x;
}

void UnetModel::collect(std::vector<Param*>& out) {
  enc0_.collect(out);
  enc1_.collect(out);
  bottleneck_.collect(out);
  dec1_.collect(out);
  dec0_.collect(out);
  final_.collect(out);
  out.push_back(&log_lambda_);
}

std::int64_t UnetModel::parameter_count() const {
  return enc0_.parameter_count() + enc1_.parameter_count() + bottleneck_.parameter_count() +
         dec1_.parameter_count() + dec0_.parameter_count() + final_.parameter_count() + 1;
}

ReconstructionModel ReconstructionModel::create(const ReconModelConfig& cfg,
                                                std::uint64_t seed) {
  cfg.validate();
  ReconstructionModel m;
  m.config = cfg;
  if (cfg.kind == "crnn") {
    m.crnn = std::make_unique<CrnnModel>(cfg, seed);
  } else if (cfg.kind == "unet") {
    m.unet = std::make_unique<UnetModel>(cfg, seed);
  }
  if (cfg.refinement != RefinementMode::none && cfg.kind != "oracle") {
    m.refinement = std::make_unique<RefinementModel>(cfg, seed);
  }
  return m;
}

std::pair<Tape::Id, Tape::Id> ReconstructionModel::forward(Tape& tape, Tape::Id zero_filled,
                                                           const KSpaceData& y,
                                                           bool backbone_trainable,
                                                           bool refinement_trainable) const {
  require(crnn != nullptr || unet != nullptr, ErrorCategory::state,
          "forward called on a model without a backbone");
  Tape::Id backbone_out = crnn ? crnn->forward(tape, zero_filled, y, backbone_trainable)
                               : unet->forward(tape, zero_filled, y, backbone_trainable);
  Tape::Id final_out = backbone_out;
  if (refinement) {
    final_out = refinement->forward(tape, backbone_out, refinement_trainable);
  }
  return {backbone_out, final_out};
}

CineSlice ReconstructionModel::reconstruct(const KSpaceData& y) const {
  CineSlice zf = adjoint_operator(y);
  Tape tape;
  Tape::Id x0 = tape.constant(nn::carray_to_pair_tensor(zf.data));
  auto [backbone_out, final_out] = forward(tape, x0, y, false, false);
  (void)backbone_out;
  CineSlice out;
  out.data = nn::pair_tensor_to_carray(tape.val(final_out));
  out.frame_rate_hint = zf.frame_rate_hint;
  return out;
}

std::vector<Param*> ReconstructionModel::parameters() {
  std::vector<Param*> out = backbone_parameters();
  auto r = refinement_parameters();
  out.insert(out.end(), r.begin(), r.end());
  return out;
}

std::vector<Param*> ReconstructionModel::backbone_parameters() {
  std::vector<Param*> out;
  if (crnn) crnn->collect(out);
  if (unet) unet->collect(out);
  return out;
}

std::vector<Param*> ReconstructionModel::refinement_parameters() {
  std::vector<Param*> out;
  if (refinement) refinement->collect(out);
  return out;
}

std::int64_t ReconstructionModel::parameter_count() const {
  std::int64_t n = backbone_parameter_count();
  if (refinement) n += refinement->parameter_count();
  return n;
}

std::int64_t ReconstructionModel::backbone_parameter_count() const {
  if (crnn) return crnn->parameter_count();
  if (unet) return unet->parameter_count();
  return 0;
}

}  // namespace cinerecon::model

namespace cinerecon {

namespace {
const char* kRefinementNames[] = {"none", "sequential", "end_to_end"};
}

std::string refinement_mode_name(RefinementMode m) {
  return kRefinementNames[static_cast<int>(m)];
}

RefinementMode refinement_mode_from_name(const std::string& s) {
  for (int i = 0; i < 3; ++i) {
    if (kRefinementNames[i] == s) return static_cast<RefinementMode>(i);
  }
  throw Error(ErrorCategory::config, "unknown refinement mode: " + s);
}

nlohmann::json ReconModelConfig::to_json() const {
  return {{"kind", kind},
          {"cascades", cascades},
          {"channels", channels},
          {"weight_sharing", weight_sharing},
          {"extra_bcrnn", extra_bcrnn},
          {"refinement", refinement_mode_name(refinement)},
          {"dc_log_lambda_init", dc_log_lambda_init},
          {"kernel_size", kernel_size},
          {"refinement_channels", refinement_channels},
          {"refinement_blocks", refinement_blocks},
          {"unet_pool_levels", unet_pool_levels}};
}

ReconModelConfig ReconModelConfig::from_json(const nlohmann::json& j) {
  ReconModelConfig cfg;
  try {
    cfg.kind = j.value("kind", cfg.kind);
    cfg.cascades = j.value("cascades", cfg.cascades);
    cfg.channels = j.value("channels", cfg.channels);
    cfg.weight_sharing = j.value("weight_sharing", cfg.weight_sharing);
    cfg.extra_bcrnn = j.value("extra_bcrnn", cfg.extra_bcrnn);
    if (j.contains("refinement")) {
      cfg.refinement = refinement_mode_from_name(j.at("refinement").get<std::string>());
    }
    cfg.dc_log_lambda_init = j.value("dc_log_lambda_init", cfg.dc_log_lambda_init);
    cfg.kernel_size = j.value("kernel_size", cfg.kernel_size);
    cfg.refinement_channels = j.value("refinement_channels", cfg.refinement_channels);
    cfg.refinement_blocks = j.value("refinement_blocks", cfg.refinement_blocks);
    cfg.unet_pool_levels = j.value("unet_pool_levels", cfg.unet_pool_levels);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::config, std::string("bad model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace cinerecon
