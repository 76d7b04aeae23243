#pragma once

// Temporal model: soft attention over the L locations of each frame's L x D
// feature map, threaded through a stacked LSTM over frame time.

#include <cstddef>
#include <span>
#include <vector>

#include "memcap/lstm.hpp"
#include "memcap/params.hpp"
#include "memcap/tensor.hpp"

namespace memcap {

struct TemConfig {
  std::size_t locations = 196;  // L
  std::size_t depth = 512;      // D
  std::size_t hidden = 1479;    // K
  std::size_t layers = 2;
  bool use_bias = true;

  void validate() const;
};

// Throws DimensionError unless `frame` is an L x D matrix with finite entries.
void check_frame(const Tensor& frame, std::size_t locations, std::size_t depth);

struct LocationAttention {
  Tensor context;  // F, length D
  Tensor weights;  // rho, length L
};

class Tem {
 public:
  Tem(const TemConfig& config, Rng& rng);

  const TemConfig& config() const { return config_; }
  const Tensor& location_weights() const { return w_p_; }  // L x K
  const LstmStack& stack() const { return stack_; }

  ParamList parameters() const;

 private:
  TemConfig config_;
  Tensor w_p_;
  LstmStack stack_;
};

// rho = softmax(W_p h_prev), F = sum_j rho_j X_j.
LocationAttention location_attention(const Tem& tem, const Tensor& frame, const Tensor& h_prev);

// Returns H_v (N x K), the top-layer hidden state after each frame. Location
// attention at frame t conditions on the top-layer state after frame t-1
// (zeros before the first frame). When `rhos` is given, each frame's
// attention weights are appended to it.
Tensor tem_forward(const Tem& tem, std::span<const Tensor> frames,
                   std::vector<Tensor>* rhos = nullptr);

// Stand-in encoder for the ablations without the temporal model: each frame
// is mean-pooled over locations and projected linearly, h_t = mean(X_t) W_f.
class FrameEncoder {
 public:
  FrameEncoder(std::size_t locations, std::size_t depth, std::size_t hidden, Rng& rng);

  const Tensor& projection() const { return w_f_; }  // D x K
  Tensor encode(std::span<const Tensor> frames) const;
  ParamList parameters() const;

 private:
  std::size_t locations_;
  std::size_t depth_;
  Tensor w_f_;
};

}  // namespace memcap
