#include "memcap/tem.hpp"

#include <cmath>
#include <string>

#include "memcap/error.hpp"
#include "memcap/ops.hpp"

namespace memcap {

void TemConfig::validate() const {
  if (locations == 0 || depth == 0 || hidden == 0) {
    throw DimensionError("TemConfig: L, D and K must be positive");
  }
  if (layers == 0) throw UsageError("TemConfig: layers must be at least 1");
}

void check_frame(const Tensor& frame, std::size_t locations, std::size_t depth) {
  if (frame.rank() != 2 || frame.rows() != locations || frame.cols() != depth) {
    throw DimensionError("frame map " + shape_str(frame.shape()) + " does not match " +
                         shape_str({locations, depth}));
  }
  for (double v : frame.data()) {
    if (!std::isfinite(v)) throw NumericError("frame map has non-finite entries");
  }
}

Tem::Tem(const TemConfig& config, Rng& rng)
    : config_((config.validate(), config)),
      w_p_(uniform_tensor({config.locations, config.hidden},
                          1.0 / std::sqrt(static_cast<double>(config.hidden)), rng)),
      stack_(config.depth, config.hidden, config.layers, config.use_bias, rng) {}

ParamList Tem::parameters() const {
  ParamList out{{"W_p", w_p_, false}};
  append_params(out, stack_.parameters(), "lstm");
  return out;
}

LocationAttention location_attention(const Tem& tem, const Tensor& frame, const Tensor& h_prev) {
  const auto& cfg = tem.config();
  if (frame.rank() != 2 || frame.rows() != cfg.locations || frame.cols() != cfg.depth) {
    throw DimensionError("location_attention: frame " + shape_str(frame.shape()) +
                         " does not match " + shape_str({cfg.locations, cfg.depth}));
  }
  if (h_prev.rank() != 1 || h_prev.numel() != cfg.hidden) {
    throw DimensionError("location_attention: state " + shape_str(h_prev.shape()) +
                         " does not match " + shape_str({cfg.hidden}));
  }
  Tensor rho = softmax(matvec(tem.location_weights(), h_prev));
  return {vecmat(rho, frame), rho};
}

Tensor tem_forward(const Tem& tem, std::span<const Tensor> frames, std::vector<Tensor>* rhos) {
  if (frames.empty()) throw UsageError("tem_forward: no frames");
  auto state = tem.stack().zero_state();
  std::vector<Tensor> hidden;
  hidden.reserve(frames.size());
  for (const auto& frame : frames) {
    auto att = location_attention(tem, frame, state.back().h);
    if (rhos) rhos->push_back(att.weights);
    state = tem.stack().step(att.context, state);
    hidden.push_back(state.back().h);
  }
  return stack_rows(hidden);
}

FrameEncoder::FrameEncoder(std::size_t locations, std::size_t depth, std::size_t hidden, Rng& rng)
    : locations_(locations),
      depth_(depth),
      w_f_(uniform_tensor({depth, hidden}, 1.0 / std::sqrt(static_cast<double>(depth)), rng)) {}

Tensor FrameEncoder::encode(std::span<const Tensor> frames) const {
  if (frames.empty()) throw UsageError("FrameEncoder: no frames");
  std::vector<Tensor> rows;
  rows.reserve(frames.size());
  for (const auto& frame : frames) {
    if (frame.rank() != 2 || frame.rows() != locations_ || frame.cols() != depth_) {
      throw DimensionError("FrameEncoder: frame " + shape_str(frame.shape()) + " does not match " +
                           shape_str({locations_, depth_}));
    }
    rows.push_back(vecmat(mean_rows(frame), w_f_));
  }
  return stack_rows(rows);
}

ParamList FrameEncoder::parameters() const { return {{"W_f", w_f_, false}}; }

}  // namespace memcap
