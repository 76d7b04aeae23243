#include "memcap/params.hpp"

namespace memcap {

double uniform(Rng& rng, double lo, double hi) {
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  // Rejection sampling keeps the draw unbiased for any n.
  const std::uint64_t limit = Rng::max() - Rng::max() % n;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % n);
}

Tensor uniform_tensor(Shape shape, double bound, Rng& rng, bool requires_grad) {
  std::vector<double> values(shape_numel(shape));
  for (auto& v : values) v = uniform(rng, -bound, bound);
  return Tensor::from(std::move(shape), std::move(values), requires_grad);
}

void append_params(ParamList& dst, const ParamList& src, const std::string& prefix) {
  for (const auto& p : src) dst.push_back({prefix + "." + p.name, p.tensor, p.is_bias});
}

std::size_t param_count(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

}  // namespace memcap
