#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "memcap/params.hpp"
#include "memcap/tensor.hpp"

namespace memcap {

enum class Gate : std::size_t { Input = 0, Forget = 1, Output = 2, Candidate = 3 };

struct CellState {
  Tensor h;
  Tensor c;

  static CellState zeros(std::size_t hidden_dim);
};

// LSTM cell in row-vector form:
//   i = sigma(x W_xi + h W_hi)     f = sigma(x W_xf + h W_hf)
//   o = sigma(x W_xo + h W_ho)     g = tanh(x W_xg + h W_hg)
//   c' = f * c + i * g             h' = o * tanh(c')
// With biases enabled each gate adds b_*, and b_f starts at 1.
class LstmCell {
 public:
  LstmCell(std::size_t input_dim, std::size_t hidden_dim, bool use_bias, Rng& rng);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  bool has_bias() const { return has_bias_; }

  const Tensor& input_weight(Gate g) const { return w_x_[static_cast<std::size_t>(g)]; }
  const Tensor& hidden_weight(Gate g) const { return w_h_[static_cast<std::size_t>(g)]; }
  const Tensor& bias(Gate g) const { return b_[static_cast<std::size_t>(g)]; }

  ParamList parameters() const;

 private:
  std::size_t input_dim_;
  std::size_t hidden_dim_;
  bool has_bias_;
  std::array<Tensor, 4> w_x_;  // input_dim x hidden_dim
  std::array<Tensor, 4> w_h_;  // hidden_dim x hidden_dim
  std::array<Tensor, 4> b_;    // hidden_dim, undefined without bias
};

CellState lstm_step(const LstmCell& cell, const Tensor& x, const CellState& prev);

// Layer 0 reads x, layer i reads the new h of layer i-1. Returns every layer's
// new state; the last entry's h is the stack output.
std::vector<CellState> stacked_step(std::span<const LstmCell> cells, const Tensor& x,
                                    std::span<const CellState> prevs);

// Layers of LstmCell sharing one hidden size.
class LstmStack {
 public:
  LstmStack(std::size_t input_dim, std::size_t hidden_dim, std::size_t layers, bool use_bias,
            Rng& rng);

  std::span<const LstmCell> cells() const { return cells_; }
  std::size_t layers() const { return cells_.size(); }
  std::size_t input_dim() const { return cells_.front().input_dim(); }
  std::size_t hidden_dim() const { return cells_.front().hidden_dim(); }

  std::vector<CellState> zero_state() const;
  std::vector<CellState> step(const Tensor& x, std::span<const CellState> prevs) const {
    return stacked_step(cells_, x, prevs);
  }

  ParamList parameters() const;

 private:
  std::vector<LstmCell> cells_;
};

}  // namespace memcap
