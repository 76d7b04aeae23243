#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "memcap/lstm.hpp"
#include "memcap/params.hpp"
#include "memcap/tensor.hpp"

namespace memcap {

// Word decoder. The embedding of the previous word is concatenated with the
// context vector (the memory state h_m for the full model) and fed to the
// first layer of an LSTM stack; the top hidden state is projected onto the
// vocabulary.
class Decoder {
 public:
  Decoder(std::size_t vocab_size, std::size_t embed_dim, std::size_t context_dim,
          std::size_t hidden_dim, std::size_t layers, bool use_bias, Rng& rng);

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t embed_dim() const { return embed_dim_; }
  std::size_t context_dim() const { return context_dim_; }
  std::size_t hidden_dim() const { return stack_.hidden_dim(); }

  const Tensor& embedding() const { return w_s_; }   // |V| x E
  const Tensor& projection() const { return w_e_; }  // K x |V|
  const Tensor& output_bias() const { return b_e_; } // |V|, undefined without bias
  const LstmStack& stack() const { return stack_; }

  ParamList parameters() const;

 private:
  std::size_t vocab_size_;
  std::size_t embed_dim_;
  std::size_t context_dim_;
  Tensor w_s_;
  LstmStack stack_;
  Tensor w_e_;
  Tensor b_e_;
};

struct DecodeStep {
  Tensor h_g;                    // top-layer hidden state, K
  Tensor logits;                 // |V|
  Tensor probs;                  // softmax(logits)
  std::vector<CellState> state;  // every layer, for the next step
};

DecodeStep decode_step(const Decoder& dec, std::size_t word_id, const Tensor& context,
                       std::span<const CellState> prev);

}  // namespace memcap
