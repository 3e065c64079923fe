#include <doctest.h>

#include "cinerecon/core/container.hpp"
#include "cinerecon/core/fft.hpp"
#include "cinerecon/core/operators.hpp"
#include "cinerecon/losses/losses.hpp"
#include "cinerecon/model/checkpoint.hpp"
#include "cinerecon/model/dc.hpp"
#include "cinerecon/model/model.hpp"
#include "cinerecon/nn/adam.hpp"
#include "cinerecon/phantom/phantom.hpp"
#include "test_util.hpp"

using namespace cinerecon;
using namespace cinerecon::model;
using nn::Param;
using nn::Tape;
using nn::Tensor;

namespace {

ReconModelConfig small_crnn(int cascades = 2, int channels = 4) {
  ReconModelConfig cfg;
  cfg.kind = "crnn";
  cfg.cascades = cascades;
  cfg.channels = channels;
  cfg.extra_bcrnn = true;
  return cfg;
}

double max_abs_diff(const CArray& a, const CArray& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace

TEST_CASE("data consistency with huge lambda hard-replaces sampled bins") {
  std::mt19937_64 rng(3);
  CineSlice x;
  x.data = testutil::random_carray(2, 8, 8, rng);
  KSpaceData y;
  y.data = testutil::random_carray(2, 8, 8, rng);
  y.mask = make_mask(8, 4, 2, 1);

  CineSlice out = data_consistency(x, y, /*log_lambda=*/30.0);
  CArray out_k = fft2c(out.data);
  for (int f = 0; f < 2; ++f) {
    for (int yy = 0; yy < 8; ++yy) {
      for (int xx = 0; xx < 8; ++xx) {
        if (y.mask->sampled(xx)) {
          CHECK(std::abs(out_k.at(f, yy, xx) - y.data.at(f, yy, xx)) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("data consistency with lambda -> 0 is the identity") {
  std::mt19937_64 rng(5);
  CineSlice x;
  x.data = testutil::random_carray(2, 8, 8, rng);
  KSpaceData y;
  y.data = testutil::random_carray(2, 8, 8, rng);
  y.mask = make_mask(8, 4, 2, 2);
  CineSlice out = data_consistency(x, y, /*log_lambda=*/-1e4);
  CHECK(max_abs_diff(out.data, x.data) < 1e-9);
}

TEST_CASE("data consistency blends a single bin as (Fx + lambda y) / (1 + lambda)") {
  CArray pred_k(1, 4, 4);
  pred_k.at(0, 1, 2) = cxd(2.0, 0.0);
  KSpaceData y;
  y.data = CArray(1, 4, 4);
  y.data.at(0, 1, 2) = cxd(1.0, 0.0);
  SamplingMask mask;
  mask.lines.assign(4, 1);
  mask.acceleration = 4;
  y.mask = mask;

  CArray blended = dc_blend(pred_k, y, /*lambda=*/0.1);
  CHECK(blended.at(0, 1, 2).real() == doctest::Approx(2.1 / 1.1).epsilon(1e-12));
  CHECK(blended.at(0, 1, 2).real() == doctest::Approx(1.9090909090909092).epsilon(1e-12));
}

TEST_CASE("data consistency fixed point: consistent predictions pass through") {
  std::mt19937_64 rng(7);
  CineSlice x;
  x.data = testutil::random_carray(2, 8, 8, rng);
  SamplingMask mask = make_mask(8, 4, 2, 3);
  KSpaceData y = forward_operator(x, mask);
  for (double log_lambda : {-3.0, 0.0, 2.0, 20.0}) {
    CineSlice out = data_consistency(x, y, log_lambda);
    CHECK(max_abs_diff(out.data, x.data) < 1e-6);
  }
}

TEST_CASE("data consistency interpolates convexly and monotonically in lambda") {
  std::mt19937_64 rng(9);
  CArray pred_k = testutil::random_carray(1, 6, 6, rng);
  KSpaceData y;
  y.data = testutil::random_carray(1, 6, 6, rng);
  y.mask = make_mask(6, 2, 2, 1, /*allow_nonstandard=*/true);

  double prev_dist = -1.0;
  for (double lambda : {0.0, 0.5, 1.0, 4.0, 50.0}) {
    CArray b = dc_blend(pred_k, y, lambda);
    const double t = lambda / (1.0 + lambda);
    double dist = 0.0;
    for (int yy = 0; yy < 6; ++yy) {
      for (int xx = 0; xx < 6; ++xx) {
        if (!y.mask->sampled(xx)) {
          CHECK(b.at(0, yy, xx) == pred_k.at(0, yy, xx));
          continue;
        }
        const cxd expect =
            pred_k.at(0, yy, xx) + t * (y.data.at(0, yy, xx) - pred_k.at(0, yy, xx));
        CHECK(std::abs(b.at(0, yy, xx) - expect) < 1e-12);
        dist = std::max(dist, std::abs(b.at(0, yy, xx) - y.data.at(0, yy, xx)));
      }
    }
    if (prev_dist >= 0.0) CHECK(dist <= prev_dist + 1e-12);
    prev_dist = dist;
  }
}

TEST_CASE("bcrnn unit maps zero input and state to zero output") {
  std::mt19937_64 rng(11);
  BcrnnUnit unit;
  unit.init("t/bcrnn", 2, 4, 3, rng);  // bias starts at zero
  Tape tape;
  Tape::Id x = tape.constant(Tensor(3, 2, 6, 6));
  Tape::Id out = unit.apply(tape, x, Tape::kNone);
  CHECK(tape.val(out).shape == std::array<int, 4>{3, 4, 6, 6});
  for (double v : tape.val(out).v) CHECK(v == 0.0);
}

TEST_CASE("bcrnn unit with T = 1 doubles the one-directional response") {
  std::mt19937_64 rng(13);
  BcrnnUnit unit;
  unit.init("t/bcrnn", 1, 1, 3, rng);
  // 1x1 spatial grid with 3x3 kernels: only the center tap contributes
  std::fill(unit.conv_input.weight.value.v.begin(), unit.conv_input.weight.value.v.end(), 0.0);
  std::fill(unit.conv_iter.weight.value.v.begin(), unit.conv_iter.weight.value.v.end(), 0.0);
  unit.conv_input.weight.value.at(0, 0, 1, 1) = 0.8;
  unit.conv_iter.weight.value.at(0, 0, 1, 1) = 0.3;
  unit.conv_input.bias.value.v[0] = 0.25;

  Tensor x(1, 1, 1, 1);
  x.v[0] = 1.2;
  Tensor prev(1, 1, 1, 1);
  prev.v[0] = 0.5;

  Tape tape;
  Tape::Id out = unit.apply(tape, tape.constant(x), tape.constant(prev));
  // one direction: relu(0.8 * 1.2 + 0.3 * 0.5 + 0.25) = 1.36; summed twice
  CHECK(tape.val(out).v[0] == doctest::Approx(2.72).epsilon(1e-12));
}

TEST_CASE("bcrnn unit propagates information over time in both directions") {
  std::mt19937_64 rng(17);
  BcrnnUnit unit;
  unit.init("t/bcrnn", 1, 2, 3, rng);
  Tensor x(4, 1, 5, 5);
  x.at(0, 0, 2, 2) = 1.0;  // single impulse in the first frame
  Tape tape;
  Tape::Id out = tape.constant(x);
  Tape::Id h = unit.apply(tape, out, Tape::kNone);
  // the forward pass carries the impulse to the last frame
  double last_energy = 0.0;
  for (int c = 0; c < 2; ++c) {
    for (int yy = 0; yy < 5; ++yy) {
      for (int xx = 0; xx < 5; ++xx) {
        last_energy += std::fabs(tape.val(h).at(3, c, yy, xx));
      }
    }
  }
  CHECK(last_energy > 0.0);
}

TEST_CASE("crnn iteration unit with zero state is a plain convolution + relu") {
  std::mt19937_64 rng(19);
  CrnnIterUnit unit;
  unit.init("t/crnn_i", 3, 4, 3, rng);
  Tensor x = testutil::random_tensor(2, 3, 6, 6, rng);

  Tape tape;
  Tape::Id out = unit.apply(tape, tape.constant(x), Tape::kNone);
  Tensor expect = testutil::conv2d_direct(x, unit.conv_input.weight.value, nullptr, 1, 1);
  for (int f = 0; f < 2; ++f) {
    for (int c = 0; c < 4; ++c) {
      for (int yy = 0; yy < 6; ++yy) {
        for (int xx = 0; xx < 6; ++xx) {
          const double pre = expect.at(f, c, yy, xx) + unit.conv_input.bias.value.v[static_cast<size_t>(c)];
          CHECK(tape.val(out).at(f, c, yy, xx) ==
                doctest::Approx(std::max(0.0, pre)).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("crnn iteration unit treats identical frames identically") {
  std::mt19937_64 rng(23);
  CrnnIterUnit unit;
  unit.init("t/crnn_i", 2, 3, 3, rng);
  Tensor frame = testutil::random_tensor(1, 2, 5, 5, rng);
  Tensor x(3, 2, 5, 5);
  for (int f = 0; f < 3; ++f) {
    std::copy(frame.v.begin(), frame.v.end(),
              x.v.begin() + static_cast<std::ptrdiff_t>(f * frame.v.size()));
  }
  Tape tape;
  Tape::Id out = unit.apply(tape, tape.constant(x), Tape::kNone);
  const size_t fsz = tape.val(out).v.size() / 3;
  for (int f = 1; f < 3; ++f) {
    for (size_t i = 0; i < fsz; ++i) {
      CHECK(tape.val(out).v[f * fsz + i] == tape.val(out).v[i]);
    }
  }
}

TEST_CASE("crnn iteration unit is equivariant to frame permutations") {
  std::mt19937_64 rng(29);
  CrnnIterUnit unit;
  unit.init("t/crnn_i", 2, 3, 3, rng);
  Tensor x = testutil::random_tensor(4, 2, 5, 5, rng);
  const std::array<int, 4> perm{2, 0, 3, 1};
  Tensor xp(4, 2, 5, 5);
  const size_t fsz = x.v.size() / 4;
  for (int f = 0; f < 4; ++f) {
    std::copy(x.v.begin() + static_cast<std::ptrdiff_t>(perm[static_cast<size_t>(f)] * fsz),
              x.v.begin() + static_cast<std::ptrdiff_t>((perm[static_cast<size_t>(f)] + 1) * fsz),
              xp.v.begin() + static_cast<std::ptrdiff_t>(f * fsz));
  }

  Tape tape;
  Tape::Id out = unit.apply(tape, tape.constant(x), Tape::kNone);
  Tape::Id out_p = unit.apply(tape, tape.constant(xp), Tape::kNone);
  for (int f = 0; f < 4; ++f) {
    for (size_t i = 0; i < fsz * 3 / 2; ++i) {
      CHECK(tape.val(out_p).v[f * (fsz * 3 / 2) + i] ==
            tape.val(out).v[perm[static_cast<size_t>(f)] * (fsz * 3 / 2) + i]);
    }
  }
}

TEST_CASE("crnn iteration unit follows the scalar recurrence over cascades") {
  std::mt19937_64 rng(31);
  CrnnIterUnit unit;
  unit.init("t/crnn_i", 1, 1, 3, rng);
  std::fill(unit.conv_input.weight.value.v.begin(), unit.conv_input.weight.value.v.end(), 0.0);
  std::fill(unit.conv_iter.weight.value.v.begin(), unit.conv_iter.weight.value.v.end(), 0.0);
  unit.conv_input.weight.value.at(0, 0, 1, 1) = 0.5;
  unit.conv_iter.weight.value.at(0, 0, 1, 1) = -0.4;
  unit.conv_input.bias.value.v[0] = 0.1;

  Tensor x(1, 1, 1, 1);
  x.v[0] = 1.0;
  Tape tape;
  Tape::Id xid = tape.constant(x);
  Tape::Id h = Tape::kNone;
  double expect = 0.0;
  for (int i = 0; i < 3; ++i) {
    h = unit.apply(tape, xid, h);
    expect = std::max(0.0, 0.5 * 1.0 - 0.4 * expect + 0.1);
  }
  // hand-unrolled: 0.6, 0.36, 0.456
  CHECK(expect == doctest::Approx(0.456).epsilon(1e-12));
  CHECK(tape.val(h).v[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("crnn forward with fully sampled data and huge lambda returns the truth") {
  std::mt19937_64 rng(37);
  ReconModelConfig cfg = small_crnn();
  cfg.dc_log_lambda_init = 30.0;
  CrnnModel model(cfg, /*seed=*/123);

  CineSlice x;
  x.data = testutil::random_carray(3, 8, 8, rng);
  KSpaceData y = forward_operator(x);  // fully sampled
  CineSlice zf = adjoint_operator(y);

  Tape tape;
  Tape::Id out =
      model.forward(tape, tape.constant(nn::carray_to_pair_tensor(zf.data)), y, false);
  CArray recon = nn::pair_tensor_to_carray(tape.val(out));
  CHECK(max_abs_diff(recon, x.data) < 1e-5);
}

TEST_CASE("zeroed output conv reduces a cascade to its DC path") {
  std::mt19937_64 rng(41);
  ReconModelConfig cfg = small_crnn(2, 4);
  CrnnModel model(cfg, 7);
  for (int i = 0; i < 2; ++i) {
    auto& cas = model.cascade(i);
    std::fill(cas.out_conv.weight.value.v.begin(), cas.out_conv.weight.value.v.end(), 0.0);
    std::fill(cas.out_conv.bias.value.v.begin(), cas.out_conv.bias.value.v.end(), 0.0);
  }

  CineSlice x;
  x.data = testutil::random_carray(2, 8, 8, rng);
  KSpaceData y;
  y.data = testutil::random_carray(2, 8, 8, rng);
  y.mask = make_mask(8, 4, 2, 5);

  Tape tape;
  Tape::Id out =
      model.forward(tape, tape.constant(nn::carray_to_pair_tensor(x.data)), y, false);
  CineSlice expect;
  expect.data = x.data;
  for (int i = 0; i < 2; ++i) {
    expect = data_consistency(expect, y, model.cascade(i).log_lambda.value.v[0]);
  }
  CHECK(max_abs_diff(nn::pair_tensor_to_carray(tape.val(out)), expect.data) < 1e-9);
}

TEST_CASE("crnn analytic gradients match central finite differences") {
  std::mt19937_64 rng(43);
  ReconModelConfig cfg = small_crnn(2, 4);
  CrnnModel model(cfg, 99);

  CArray target = testutil::random_carray(3, 8, 8, rng);
  CineSlice x;
  x.data = testutil::random_carray(3, 8, 8, rng);
  SamplingMask mask = make_mask(8, 4, 2, 11);
  KSpaceData y = forward_operator(x, mask);
  CineSlice zf = adjoint_operator(y);
  Tensor zf_t = nn::carray_to_pair_tensor(zf.data);

  auto build = [&](Tape& tape) {
    Tape::Id out = model.forward(tape, tape.constant(zf_t), y, true);
    return losses::l2_loss_node(tape, out, target);
  };
  auto loss = [&] {
    Tape t;
    return t.val(build(t)).v[0];
  };
  auto backward = [&] {
    Tape t;
    t.backward(build(t));
  };

  std::vector<Param*> params;
  model.collect(params);
  // probe a representative subset from every parameter family
  int checked_params = 0;
  for (Param* p : params) {
    const bool scalar = p->value.numel() == 1;
    const bool probe = scalar || p->name.find("bcrnn1/time") != std::string::npos ||
                       p->name.find("bcrnn2/input") != std::string::npos ||
                       p->name.find("crnn_i1/iter") != std::string::npos ||
                       p->name.find("cnn/w") != std::string::npos ||
                       p->name.find("bcrnn1/input/b") != std::string::npos;
    if (!probe) continue;
    auto res = testutil::grad_check(*p, loss, backward, scalar ? 1 : 6, rng);
    INFO(p->name);
    CHECK(res.max_rel_err < 1e-4);
    ++checked_params;
  }
  CHECK(checked_params >= 8);
}

TEST_CASE("weight sharing keeps the parameter count independent of cascades") {
  ReconModelConfig ws2 = small_crnn(2, 8);
  ws2.weight_sharing = true;
  ReconModelConfig ws5 = small_crnn(5, 8);
  ws5.weight_sharing = true;
  CrnnModel m2(ws2, 1), m5(ws5, 1);
  CHECK(m2.parameter_count() == m5.parameter_count());

  ReconModelConfig plain5 = small_crnn(5, 8);
  CrnnModel p5(plain5, 1);
  CHECK(p5.parameter_count() == 5 * m5.parameter_count());
  CHECK(m5.parameter_count() < p5.parameter_count());
}

TEST_CASE("weight-shared forward runs and differs from cascade count 1") {
  std::mt19937_64 rng(47);
  ReconModelConfig cfg = small_crnn(3, 4);
  cfg.weight_sharing = true;
  CrnnModel model(cfg, 5);
  CineSlice x;
  x.data = testutil::random_carray(2, 8, 8, rng);
  SamplingMask mask = make_mask(8, 4, 2, 1);
  KSpaceData y = forward_operator(x, mask);
  CineSlice zf = adjoint_operator(y);
  Tape tape;
  Tape::Id out =
      model.forward(tape, tape.constant(nn::carray_to_pair_tensor(zf.data)), y, false);
  CHECK(tape.val(out).shape == std::array<int, 4>{2, 2, 8, 8});
}

TEST_CASE("one optimizer step on a phantom slice decreases the training loss") {
  PhantomSpec spec;
  spec.frames = 3;
  spec.height = 32;
  spec.width = 32;
  spec.seed = 3;
  CineSlice img = generate_cine_phantom(spec);
  SamplingMask mask = make_mask(32, 4, 2, 7);
  KSpaceData y = forward_operator(img, mask);
  CineSlice zf = adjoint_operator(y);
  Tensor zf_t = nn::carray_to_pair_tensor(zf.data);

  ReconModelConfig cfg = small_crnn(1, 4);
  CrnnModel model(cfg, 11);
  std::vector<Param*> params;
  model.collect(params);
  nn::Adam opt(params, 1e-3);

  std::vector<double> losses_seen;
  for (int step = 0; step < 5; ++step) {
    Tape tape;
    Tape::Id out = model.forward(tape, tape.constant(zf_t), y, true);
    Tape::Id loss = losses::l2_loss_node(tape, out, img.data);
    losses_seen.push_back(tape.val(loss).v[0]);
    tape.backward(loss);
    opt.step(1.0);
    opt.zero_grad();
  }
  CHECK(losses_seen.back() < losses_seen.front());
}

TEST_CASE("refinement with all-zero weights is the identity map") {
  std::mt19937_64 rng(53);
  ReconModelConfig cfg = small_crnn();
  cfg.refinement = RefinementMode::end_to_end;
  cfg.refinement_channels = 8;
  cfg.refinement_blocks = 2;
  RefinementModel refine(cfg, 3);
  refine.zero_init();

  Tensor x = testutil::random_tensor(2, 2, 8, 12, rng);
  Tape tape;
  Tape::Id out = refine.forward(tape, tape.constant(x));
  for (size_t i = 0; i < x.v.size(); ++i) CHECK(tape.val(out).v[i] == x.v[i]);
}

TEST_CASE("refinement preserves the 256x512 canvas shape") {
  ReconModelConfig cfg = small_crnn();
  cfg.refinement_channels = 4;
  cfg.refinement_blocks = 1;
  RefinementModel refine(cfg, 9);
  Tensor x(1, 2, 256, 512);
  Tape tape;
  Tape::Id out = refine.forward(tape, tape.constant(x));
  CHECK(tape.val(out).shape == std::array<int, 4>{1, 2, 256, 512});
}

TEST_CASE("refinement rejects odd spatial dims") {
  ReconModelConfig cfg = small_crnn();
  RefinementModel refine(cfg, 9);
  Tensor x(1, 2, 33, 40);
  Tape tape;
  CHECK_THROWS_AS(refine.forward(tape, tape.constant(x)), Error);
}

TEST_CASE("refinement stays under 10% of a 6-cascade CRNN at paper defaults") {
  ReconModelConfig cfg;  // cascades 6, channels 48, refinement 32/3
  CrnnModel crnn(cfg, 1);
  RefinementModel refine(cfg, 1);
  CHECK(refine.parameter_count() * 10 < crnn.parameter_count());
}

TEST_CASE("refinement gradient matches finite differences") {
  std::mt19937_64 rng(59);
  ReconModelConfig cfg = small_crnn();
  cfg.refinement_channels = 4;
  cfg.refinement_blocks = 1;
  RefinementModel refine(cfg, 21);
  Tensor x = testutil::random_tensor(1, 2, 6, 6, rng);
  CArray target = testutil::random_carray(1, 6, 6, rng);

  auto build = [&](Tape& t) {
    Tape::Id out = refine.forward(t, t.constant(x), true);
    return losses::l2_loss_node(t, out, target);
  };
  std::vector<Param*> params;
  refine.collect(params);
  for (Param* p : params) {
    auto res = testutil::grad_check(
        *p,
        [&] {
          Tape t;
          return t.val(build(t)).v[0];
        },
        [&] {
          Tape t;
          t.backward(build(t));
        },
        4, rng);
    INFO(p->name);
    CHECK(res.max_rel_err < 1e-4);
  }
}

TEST_CASE("unet forward preserves shape and respects DC dominance") {
  std::mt19937_64 rng(61);
  ReconModelConfig cfg;
  cfg.kind = "unet";
  cfg.cascades = 3;
  cfg.channels = 4;
  cfg.dc_log_lambda_init = 30.0;
  UnetModel model(cfg, 3);

  CineSlice x;
  x.data = testutil::random_carray(2, 16, 16, rng);
  KSpaceData y = forward_operator(x);
  CineSlice zf = adjoint_operator(y);
  Tape tape;
  Tape::Id out =
      model.forward(tape, tape.constant(nn::carray_to_pair_tensor(zf.data)), y, false);
  CHECK(tape.val(out).shape == std::array<int, 4>{2, 2, 16, 16});
  CHECK(max_abs_diff(nn::pair_tensor_to_carray(tape.val(out)), x.data) < 1e-5);
}

TEST_CASE("unet parameter count is independent of cascade count (weight shared)") {
  ReconModelConfig a;
  a.kind = "unet";
  a.cascades = 1;
  a.channels = 4;
  ReconModelConfig b = a;
  b.cascades = 3;
  CHECK(UnetModel(a, 1).parameter_count() == UnetModel(b, 1).parameter_count());
}

TEST_CASE("unet rejects spatial dims not divisible by 4") {
  ReconModelConfig cfg;
  cfg.kind = "unet";
  cfg.channels = 4;
  UnetModel model(cfg, 3);
  KSpaceData y;
  y.data = CArray(1, 18, 16);
  Tape tape;
  CHECK_THROWS_AS(
      model.forward(tape, tape.constant(Tensor(1, 2, 18, 16)), y, false), Error);
}

TEST_CASE("checkpoints round trip parameters bit-exactly") {
  auto dir = std::filesystem::temp_directory_path() / "cinerecon_ckpt_test";
  std::filesystem::create_directories(dir);

  ReconModelConfig cfg = small_crnn(2, 4);
  cfg.refinement = RefinementMode::end_to_end;
  cfg.refinement_channels = 8;
  cfg.refinement_blocks = 1;
  ReconstructionModel model = ReconstructionModel::create(cfg, 77);

  CheckpointExtras extras;
  extras.epoch = 5;
  extras.best_eval_ssim = 0.91;
  save_checkpoint(dir / "model.ckpt", model, extras);

  CheckpointExtras loaded_extras;
  ReconstructionModel loaded = load_checkpoint(dir / "model.ckpt", &loaded_extras);
  CHECK(loaded.config.to_json() == cfg.to_json());
  CHECK(loaded_extras.epoch == 5);
  CHECK(loaded_extras.best_eval_ssim == 0.91);

  auto src = model.parameters();
  auto dst = loaded.parameters();
  REQUIRE(src.size() == dst.size());
  for (size_t i = 0; i < src.size(); ++i) {
    CHECK(src[i]->name == dst[i]->name);
    CHECK(src[i]->value.v == dst[i]->value.v);
  }
}

TEST_CASE("loading a non-checkpoint container is a state error") {
  auto dir = std::filesystem::temp_directory_path() / "cinerecon_ckpt_test";
  std::filesystem::create_directories(dir);
  NamedArrayFile file;
  const double v = 1.0;
  file.put_f64("stray", {1}, &v);
  file.write(dir / "bogus.ckpt");
  try {
    load_checkpoint(dir / "bogus.ckpt");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::state);
  }
}

TEST_CASE("model forward validates measurement shape") {
  std::mt19937_64 rng(67);
  ReconModelConfig cfg = small_crnn(1, 4);
  CrnnModel model(cfg, 3);
  KSpaceData y;
  y.data = CArray(2, 8, 8);
  Tape tape;
  CHECK_THROWS_AS(model.forward(tape, tape.constant(Tensor(2, 2, 8, 10)), y, false), Error);
}
