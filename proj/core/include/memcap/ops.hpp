#pragma once

// Differentiable primitives. Vectors are rank-1, matrices rank-2, scalars
// rank-0. Broadcasting is limited to add(matrix[m x n], vector[n]), which
// adds the vector to every row.

#include <cstddef>
#include <span>

#include "memcap/tensor.hpp"

namespace memcap {

// [m x k] . [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);
// [m x k] . [k] -> [m]
Tensor matvec(const Tensor& a, const Tensor& x);
// [k] . [k x n] -> [n]   (row vector times matrix)
Tensor vecmat(const Tensor& x, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);

// Numerically stable (max-subtracted). Throws NumericError on non-finite input.
Tensor softmax(const Tensor& x);
Tensor log_softmax(const Tensor& x);

Tensor sum(const Tensor& a);
// Sum of squared entries.
Tensor sum_squares(const Tensor& a);
// Element `index` of a vector as a scalar.
Tensor pick(const Tensor& x, std::size_t index);
// Row `index` of a matrix as a vector (embedding lookup).
Tensor select_row(const Tensor& table, std::size_t index);
// Column mean of a matrix: [m x n] -> [n].
Tensor mean_rows(const Tensor& a);

// Vectors end to end.
Tensor concat(std::span<const Tensor> parts);
// Equal-length vectors as the rows of a matrix.
Tensor stack_rows(std::span<const Tensor> rows);

}  // namespace memcap
