#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "memcap/tensor.hpp"

namespace memcap {

using Rng = std::mt19937_64;

// Uniform double in [lo, hi) from the top 53 bits of one draw; independent of
// the standard library's distribution implementations.
double uniform(Rng& rng, double lo, double hi);
// Uniform integer in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);
// Leaf tensor with entries uniform in (-bound, bound).
Tensor uniform_tensor(Shape shape, double bound, Rng& rng, bool requires_grad = true);

struct NamedParam {
  std::string name;
  Tensor tensor;
  bool is_bias = false;  // excluded from the L2 penalty
};

using ParamList = std::vector<NamedParam>;

// Appends `src` to `dst`, prefixing every name with `prefix` + '.'.
void append_params(ParamList& dst, const ParamList& src, const std::string& prefix);

std::size_t param_count(const ParamList& params);

}  // namespace memcap
