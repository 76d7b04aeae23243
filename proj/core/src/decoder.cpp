#include "memcap/decoder.hpp"

#include <array>
#include <cmath>
#include <string>

#include "memcap/error.hpp"
#include "memcap/ops.hpp"

namespace memcap {

Decoder::Decoder(std::size_t vocab_size, std::size_t embed_dim, std::size_t context_dim,
                 std::size_t hidden_dim, std::size_t layers, bool use_bias, Rng& rng)
    : vocab_size_(vocab_size),
      embed_dim_(embed_dim),
      context_dim_(context_dim),
      w_s_(uniform_tensor({vocab_size, embed_dim}, 1.0 / std::sqrt(static_cast<double>(embed_dim)), rng)),
      stack_(embed_dim + context_dim, hidden_dim, layers, use_bias, rng),
      w_e_(uniform_tensor({hidden_dim, vocab_size}, 1.0 / std::sqrt(static_cast<double>(hidden_dim)), rng)) {
  if (vocab_size == 0 || embed_dim == 0 || context_dim == 0) {
    throw DimensionError("Decoder: dimensions must be positive");
  }
  if (use_bias) b_e_ = Tensor::zeros({vocab_size}, true);
}

ParamList Decoder::parameters() const {
  ParamList out{{"W_s", w_s_, false}};
  append_params(out, stack_.parameters(), "lstm");
  out.push_back({"W_e", w_e_, false});
  if (b_e_.defined()) out.push_back({"b_e", b_e_, true});
  return out;
}

DecodeStep decode_step(const Decoder& dec, std::size_t word_id, const Tensor& context,
                       std::span<const CellState> prev) {
  if (word_id >= dec.vocab_size()) {
    throw UsageError("decode_step: token id " + std::to_string(word_id) + " outside vocabulary of " +
                     std::to_string(dec.vocab_size()));
  }
  if (context.rank() != 1 || context.numel() != dec.context_dim()) {
    throw DimensionError("decode_step: context " + shape_str(context.shape()) + " does not match " +
                         shape_str({dec.context_dim()}));
  }
  const std::array<Tensor, 2> parts{select_row(dec.embedding(), word_id), context};
  auto state = dec.stack().step(concat(parts), prev);
  Tensor h_g = state.back().h;
  Tensor logits = vecmat(h_g, dec.projection());
  if (dec.output_bias().defined()) logits = add(logits, dec.output_bias());
  Tensor probs = softmax(logits);
  return {h_g, logits, probs, std::move(state)};
}

}  // namespace memcap
