#include "cinerecon/model/layers.hpp"

#include <cmath>

namespace cinerecon::model {

void ConvLayer::init(const std::string& name, int c_out, int c_in, int k,
                     std::mt19937_64& rng, double gain, bool with_bias, int stride_) {
  const double fan_in = static_cast<double>(c_in) * k * k;
  const double stdev = gain * std::sqrt(2.0 / fan_in);  // He init for ReLU stacks
  weight = Param(name + "/w", Tensor::randn(c_out, c_in, k, k, rng, stdev));
  has_bias = with_bias;
  if (with_bias) bias = Param(name + "/b", Tensor(1, c_out, 1, 1));
  stride = stride_;
}

void ConvLayer::init_zero(const std::string& name, int c_out, int c_in, int k,
                          bool with_bias, int stride_) {
  weight = Param(name + "/w", Tensor(c_out, c_in, k, k));
  has_bias = with_bias;
  if (with_bias) bias = Param(name + "/b", Tensor(1, c_out, 1, 1));
  stride = stride_;
}

Tape::Id ConvLayer::apply(Tape& tape, Tape::Id x, bool trainable) const {
  auto& self = const_cast<ConvLayer&>(*this);
  Tape::Id w = trainable ? tape.param(self.weight) : tape.constant(weight.value);
  Tape::Id b = Tape::kNone;
  if (has_bias) b = trainable ? tape.param(self.bias) : tape.constant(bias.value);
  return tape.conv2d(x, w, b, stride);
}

void ConvLayer::collect(std::vector<Param*>& out) {
  out.push_back(&weight);
  if (has_bias) out.push_back(&bias);
}

std::int64_t ConvLayer::parameter_count() const {
  return weight.value.numel() + (has_bias ? bias.value.numel() : 0);
}

void BcrnnUnit::init(const std::string& name, int c_in, int channels, int k,
                     std::mt19937_64& rng) {
  conv_input.init(name + "/input", channels, c_in, k, rng, 1.0, true);
  conv_time.init(name + "/time", channels, channels, k, rng, 1.0, false);
  conv_iter.init(name + "/iter", channels, channels, k, rng, 1.0, false);
}

Tape::Id BcrnnUnit::apply(Tape& tape, Tape::Id x, Tape::Id prev_iter, bool trainable) const {
  const int T = tape.val(x).shape[0];
  // input and iteration convolutions do not depend on the time recurrence,
  // so they are evaluated once for the whole batch of frames
  Tape::Id drive = conv_input.apply(tape, x, trainable);
  if (prev_iter != Tape::kNone) {
    drive = tape.add(drive, conv_iter.apply(tape, prev_iter, trainable));
  }

  std::vector<Tape::Id> fwd(static_cast<size_t>(T));
  for (int f = 0; f < T; ++f) {
    Tape::Id pre = tape.select_frames(drive, f, 1);
    if (f > 0) pre = tape.add(pre, conv_time.apply(tape, fwd[static_cast<size_t>(f - 1)], trainable));
    fwd[static_cast<size_t>(f)] = tape.relu(pre);
  }
  std::vector<Tape::Id> bwd(static_cast<size_t>(T));
  for (int f = T - 1; f >= 0; --f) {
    Tape::Id pre = tape.select_frames(drive, f, 1);
    if (f < T - 1) pre = tape.add(pre, conv_time.apply(tape, bwd[static_cast<size_t>(f + 1)], trainable));
    bwd[static_cast<size_t>(f)] = tape.relu(pre);
  }
  std::vector<Tape::Id> merged(static_cast<size_t>(T));
  for (int f = 0; f < T; ++f) {
    merged[static_cast<size_t>(f)] = tape.add(fwd[static_cast<size_t>(f)], bwd[static_cast<size_t>(f)]);
  }
  return tape.concat_frames(merged);
}

void BcrnnUnit::collect(std::vector<Param*>& out) {
  conv_input.collect(out);
  conv_time.collect(out);
  conv_iter.collect(out);
}

std::int64_t BcrnnUnit::parameter_count() const {
  return conv_input.parameter_count() + conv_time.parameter_count() +
         conv_iter.parameter_count();
}

void CrnnIterUnit::init(const std::string& name, int c_in, int channels, int k,
                        std::mt19937_64& rng) {
  conv_input.init(name + "/input", channels, c_in, k, rng, 1.0, true);
  conv_iter.init(name + "/iter", channels, channels, k, rng, 1.0, false);
}

Tape::Id CrnnIterUnit::apply(Tape& tape, Tape::Id x, Tape::Id prev_iter,
                             bool trainable) const {
  Tape::Id pre = conv_input.apply(tape, x, trainable);
  if (prev_iter != Tape::kNone) {
    pre = tape.add(pre, conv_iter.apply(tape, prev_iter, trainable));
  }
  return tape.relu(pre);
}

void CrnnIterUnit::collect(std::vector<Param*>& out) {
  conv_input.collect(out);
  conv_iter.collect(out);
}

std::int64_t CrnnIterUnit::parameter_count() const {
  return conv_input.parameter_count() + conv_iter.parameter_count();
}

}  // namespace cinerecon::model
