#include "memcap/iam.hpp"

#include <cmath>
#include <string>

#include "memcap/error.hpp"
#include "memcap/ops.hpp"

namespace memcap {

Iam::Iam(std::size_t hidden, Rng& rng) : hidden_(hidden) {
  if (hidden == 0) throw DimensionError("Iam: hidden size must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  w_v_ = uniform_tensor({hidden, hidden}, bound, rng);
  w_g_ = uniform_tensor({hidden, hidden}, bound, rng);
  u_ = uniform_tensor({hidden}, bound, rng);
}

Iam::Iam(std::size_t hidden, std::size_t memory, bool use_bias, Rng& rng) : Iam(hidden, rng) {
  if (memory == 0) throw DimensionError("Iam: memory size must be positive");
  memory_ = memory;
  w_m_ = uniform_tensor({memory, hidden}, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  memory_cell_.emplace(hidden, memory, use_bias, rng);
}

Iam Iam::memoryless(std::size_t hidden, Rng& rng) { return Iam(hidden, rng); }

ParamList Iam::parameters() const {
  ParamList out{{"W_v", w_v_, false}, {"W_g", w_g_, false}};
  if (has_memory()) out.push_back({"W_m", w_m_, false});
  out.push_back({"u", u_, false});
  if (has_memory()) append_params(out, memory_cell_->parameters(), "memory");
  return out;
}

IamState IamState::zeros(std::size_t memory_dim) {
  return {Tensor::zeros({memory_dim}), Tensor::zeros({memory_dim}), Tensor()};
}

Tensor project_frames(const Iam& iam, const Tensor& frame_states) {
  if (frame_states.rank() != 2 || frame_states.cols() != iam.hidden_dim()) {
    throw DimensionError("attention_update: frame states " + shape_str(frame_states.shape()) +
                         " need " + std::to_string(iam.hidden_dim()) + " columns");
  }
  return matmul(frame_states, iam.frame_weight());
}

AttentionResult attention_update(const Iam& iam, const Tensor& frame_states,
                                 const Tensor& h_g_prev, const Tensor& h_m_prev) {
  return attention_update(iam, frame_states, project_frames(iam, frame_states), h_g_prev, h_m_prev);
}

AttentionResult attention_update(const Iam& iam, const Tensor& frame_states,
                                 const Tensor& projected_frames, const Tensor& h_g_prev,
                                 const Tensor& h_m_prev) {
  if (h_g_prev.rank() != 1 || h_g_prev.numel() != iam.hidden_dim()) {
    throw DimensionError("attention_update: decoder state " + shape_str(h_g_prev.shape()) +
                         " does not match " + shape_str({iam.hidden_dim()}));
  }
  if (projected_frames.shape() != frame_states.shape()) {
    throw DimensionError("attention_update: projected frames " + shape_str(projected_frames.shape()) +
                         " do not match frame states " + shape_str(frame_states.shape()));
  }
  Tensor row_term = vecmat(h_g_prev, iam.decoder_weight());
  if (iam.has_memory()) {
    if (h_m_prev.rank() != 1 || h_m_prev.numel() != iam.memory_dim()) {
      throw DimensionError("attention_update: memory state " +
                           (h_m_prev.defined() ? shape_str(h_m_prev.shape()) : std::string("<none>")) +
                           " does not match " + shape_str({iam.memory_dim()}));
    }
    row_term = add(row_term, vecmat(h_m_prev, iam.memory_weight()));
  }
  Tensor scores = tanh(add(projected_frames, row_term));
  Tensor alpha = softmax(matvec(scores, iam.score_vector()));
  return {vecmat(alpha, frame_states), alpha};
}

IamState memory_update(const Iam& iam, const IamState& state, const Tensor& context,
                       const Tensor& alpha) {
  if (!iam.has_memory()) throw UsageError("memory_update: attention has no memory cell");
  CellState next = lstm_step(iam.memory_cell(), context, {state.h_m, state.c_m});
  return {next.h, next.c, alpha};
}

}  // namespace memcap
