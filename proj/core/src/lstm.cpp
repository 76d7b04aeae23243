#include "memcap/lstm.hpp"

#include <cmath>
#include <string>

#include "memcap/error.hpp"
#include "memcap/ops.hpp"

namespace memcap {

namespace {
constexpr const char* kGateSuffix[4] = {"i", "f", "o", "g"};
}

CellState CellState::zeros(std::size_t hidden_dim) {
  return {Tensor::zeros({hidden_dim}), Tensor::zeros({hidden_dim})};
}

LstmCell::LstmCell(std::size_t input_dim, std::size_t hidden_dim, bool use_bias, Rng& rng)
    : input_dim_(input_dim), hidden_dim_(hidden_dim), has_bias_(use_bias) {
  if (input_dim == 0 || hidden_dim == 0) throw DimensionError("LstmCell: dimensions must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (std::size_t g = 0; g < 4; ++g) {
    w_x_[g] = uniform_tensor({input_dim, hidden_dim}, bound, rng);
    w_h_[g] = uniform_tensor({hidden_dim, hidden_dim}, bound, rng);
    if (use_bias) {
      const double init = g == static_cast<std::size_t>(Gate::Forget) ? 1.0 : 0.0;
      b_[g] = Tensor::full({hidden_dim}, init, true);
    }
  }
}

ParamList LstmCell::parameters() const {
  ParamList out;
  for (std::size_t g = 0; g < 4; ++g) {
    out.push_back({std::string("W_x") + kGateSuffix[g], w_x_[g], false});
    out.push_back({std::string("W_h") + kGateSuffix[g], w_h_[g], false});
  }
  if (has_bias_) {
    for (std::size_t g = 0; g < 4; ++g) out.push_back({std::string("b_") + kGateSuffix[g], b_[g], true});
  }
  return out;
}

CellState lstm_step(const LstmCell& cell, const Tensor& x, const CellState& prev) {
  if (x.rank() != 1 || x.numel() != cell.input_dim()) {
    throw DimensionError("lstm_step: input " + shape_str(x.shape()) + " does not match input_dim " +
                         std::to_string(cell.input_dim()));
  }
  if (prev.h.numel() != cell.hidden_dim() || prev.c.numel() != cell.hidden_dim()) {
    throw DimensionError("lstm_step: state " + shape_str(prev.h.shape()) + "/" +
                         shape_str(prev.c.shape()) + " does not match hidden_dim " +
                         std::to_string(cell.hidden_dim()));
  }
  auto pre = [&](Gate g) {
    Tensor z = add(vecmat(x, cell.input_weight(g)), vecmat(prev.h, cell.hidden_weight(g)));
    return cell.has_bias() ? add(z, cell.bias(g)) : z;
  };
  Tensor i = sigmoid(pre(Gate::Input));
  Tensor f = sigmoid(pre(Gate::Forget));
  Tensor o = sigmoid(pre(Gate::Output));
  Tensor g = tanh(pre(Gate::Candidate));
  Tensor c = add(hadamard(f, prev.c), hadamard(i, g));
  Tensor h = hadamard(o, tanh(c));
  return {h, c};
}

std::vector<CellState> stacked_step(std::span<const LstmCell> cells, const Tensor& x,
                                    std::span<const CellState> prevs) {
  if (cells.empty()) throw UsageError("stacked_step: empty stack");
  if (prevs.size() != cells.size()) {
    throw UsageError("stacked_step: " + std::to_string(cells.size()) + " layers but " +
                     std::to_string(prevs.size()) + " states");
  }
  std::vector<CellState> out;
  out.reserve(cells.size());
  const Tensor* input = &x;
  for (std::size_t layer = 0; layer < cells.size(); ++layer) {
    out.push_back(lstm_step(cells[layer], *input, prevs[layer]));
    input = &out.back().h;
  }
  return out;
}

LstmStack::LstmStack(std::size_t input_dim, std::size_t hidden_dim, std::size_t layers,
                     bool use_bias, Rng& rng) {
  if (layers == 0) throw UsageError("LstmStack: at least one layer required");
  cells_.reserve(layers);
  for (std::size_t layer = 0; layer < layers; ++layer) {
    cells_.emplace_back(layer == 0 ? input_dim : hidden_dim, hidden_dim, use_bias, rng);
  }
}

std::vector<CellState> LstmStack::zero_state() const {
  return std::vector<CellState>(cells_.size(), CellState::zeros(hidden_dim()));
}

ParamList LstmStack::parameters() const {
  ParamList out;
  for (std::size_t layer = 0; layer < cells_.size(); ++layer) {
    append_params(out, cells_[layer].parameters(), "layer" + std::to_string(layer));
  }
  return out;
}

}  // namespace memcap
