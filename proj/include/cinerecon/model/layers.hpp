#pragma once

#include <optional>
#include <random>
#include <vector>

#include "cinerecon/nn/tape.hpp"

namespace cinerecon::model {

using nn::Param;
using nn::Tape;
using nn::Tensor;

// Convolution layer owning its parameters. When applied with
// trainable=false the weights enter the tape as constants, which freezes
// them (used for the sequential refinement stage).
struct ConvLayer {
  Param weight;  // (Cout, Cin, k, k)
  Param bias;    // (1, Cout, 1, 1); unused when has_bias is false
  bool has_bias = true;
  int stride = 1;

  void init(const std::string& name, int c_out, int c_in, int k, std::mt19937_64& rng,
            double gain = 1.0, bool with_bias = true, int stride_ = 1);
  void init_zero(const std::string& name, int c_out, int c_in, int k, bool with_bias = true,
                 int stride_ = 1);

  Tape::Id apply(Tape& tape, Tape::Id x, bool trainable = true) const;
  void collect(std::vector<Param*>& out);
  std::int64_t parameter_count() const;
};

// Bidirectional convolutional recurrent unit: one convolution on the layer
// input, one between temporal slices, one between iterations, all sharing a
// single bias. The same cell is evaluated forward and backward over time
// and the two responses are summed; hidden states are zero at both sequence
// ends and at the first iteration.
struct BcrnnUnit {
  ConvLayer conv_input;  // carries the bias
  ConvLayer conv_time;
  ConvLayer conv_iter;

  void init(const std::string& name, int c_in, int channels, int k, std::mt19937_64& rng);
  // x: (T, Cin, H, W); prev_iter: (T, C, H, W) output of this unit at the
  // previous cascade, or Tape::kNone
  Tape::Id apply(Tape& tape, Tape::Id x, Tape::Id prev_iter, bool trainable = true) const;
  void collect(std::vector<Param*>& out);
  std::int64_t parameter_count() const;
};

// Convolutional recurrent unit evolving only over iterations; frames are
// processed independently.
struct CrnnIterUnit {
  ConvLayer conv_input;  // carries the bias
  ConvLayer conv_iter;

  void init(const std::string& name, int c_in, int channels, int k, std::mt19937_64& rng);
  Tape::Id apply(Tape& tape, Tape::Id x, Tape::Id prev_iter, bool trainable = true) const;
  void collect(std::vector<Param*>& out);
  std::int64_t parameter_count() const;
};

}  // namespace cinerecon::model
