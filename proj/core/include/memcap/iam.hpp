#pragma once

// Iterative attention/memory. At every word step the attention update scores
// all N frame states against the previous decoder state and the previous
// memory state:
//
//   Q_A   = tanh(H_v W_v + 1_N (h_g W_g) + 1_N (h_m W_m))     N x K
//   alpha = softmax(Q_A u)                                     N
//   F     = H_v^T alpha                                        K
//
// and the memory update advances an LSTM over the attended summaries,
// h_m' = f_m(h_m, F). The memoryless form (no W_m, no f_m) is the
// single-step attention used by the ATT ablations.

#include <cstddef>
#include <optional>

#include "memcap/lstm.hpp"
#include "memcap/params.hpp"
#include "memcap/tensor.hpp"

namespace memcap {

class Iam {
 public:
  // Full attention + memory with hidden size K and memory size M.
  Iam(std::size_t hidden, std::size_t memory, bool use_bias, Rng& rng);
  // Attention only, conditioned on the decoder state.
  static Iam memoryless(std::size_t hidden, Rng& rng);

  std::size_t hidden_dim() const { return hidden_; }
  std::size_t memory_dim() const { return memory_; }
  bool has_memory() const { return memory_cell_.has_value(); }

  const Tensor& frame_weight() const { return w_v_; }    // K x K
  const Tensor& decoder_weight() const { return w_g_; }  // K x K
  const Tensor& memory_weight() const { return w_m_; }   // M x K, undefined if memoryless
  const Tensor& score_vector() const { return u_; }      // K
  const LstmCell& memory_cell() const { return *memory_cell_; }

  ParamList parameters() const;

 private:
  Iam(std::size_t hidden, Rng& rng);

  std::size_t hidden_;
  std::size_t memory_ = 0;
  Tensor w_v_;
  Tensor w_g_;
  Tensor w_m_;
  Tensor u_;
  std::optional<LstmCell> memory_cell_;
};

struct IamState {
  Tensor h_m;
  Tensor c_m;
  Tensor alpha;  // attention that produced the latest update; undefined initially

  static IamState zeros(std::size_t memory_dim);
};

struct AttentionResult {
  Tensor context;  // F-hat, length K
  Tensor alpha;    // length N
};

// H_v W_v, which does not change across word steps of one video.
Tensor project_frames(const Iam& iam, const Tensor& frame_states);

AttentionResult attention_update(const Iam& iam, const Tensor& frame_states,
                                 const Tensor& h_g_prev, const Tensor& h_m_prev);
// Same, reusing project_frames(iam, frame_states). `h_m_prev` is ignored for a
// memoryless Iam and may be undefined.
AttentionResult attention_update(const Iam& iam, const Tensor& frame_states,
                                 const Tensor& projected_frames, const Tensor& h_g_prev,
                                 const Tensor& h_m_prev);

IamState memory_update(const Iam& iam, const IamState& state, const Tensor& context,
                       const Tensor& alpha);

}  // namespace memcap
