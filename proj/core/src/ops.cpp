#include "memcap/ops.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "memcap/error.hpp"

namespace memcap {

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

Tensor make_result(Shape shape, std::vector<double> values, const char* op,
                   std::vector<NodePtr> parents, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->op = op;
  const bool track =
      grad_mode_enabled() &&
      std::any_of(parents.begin(), parents.end(), [](const NodePtr& p) { return p->requires_grad; });
  if (track) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(t.shape()));
  }
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                       shape_str(b.shape()));
}

void check_finite(const Tensor& x, const char* op) {
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite input");
  }
}

// Applies f elementwise; dfdx(y, x) gives the local derivative.
template <typename F, typename D>
Tensor unary(const Tensor& a, const char* op, F f, D dfdx) {
  std::vector<double> out(a.numel());
  auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(a.shape(), std::move(out), op, {a.node()}, [dfdx](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * dfdx(self.data[i], p.data[i]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) mismatch("matmul", a, b);
  std::vector<double> out(m * n, 0.0);
  auto A = a.data();
  auto B = b.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * B[p * n + j];
    }
  return make_result({m, n}, std::move(out), "matmul", {a.node(), b.node()},
                     [m, k, n](Node& self) {
                       Node& pa = *self.parents[0];
                       Node& pb = *self.parents[1];
                       const auto& G = self.grad;
                       if (pa.requires_grad) {
                         auto& ga = pa.grad_buffer();
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t p = 0; p < k; ++p) {
                             double acc = 0.0;
                             for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * pb.data[p * n + j];
                             ga[i * k + p] += acc;
                           }
                       }
                       if (pb.requires_grad) {
                         auto& gb = pb.grad_buffer();
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t p = 0; p < k; ++p) {
                             const double aip = pa.data[i * k + p];
                             for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * G[i * n + j];
                           }
                       }
                     });
}

Tensor matvec(const Tensor& a, const Tensor& x) {
  require_rank(a, 2, "matvec");
  require_rank(x, 1, "matvec");
  const std::size_t m = a.rows(), k = a.cols();
  if (x.numel() != k) mismatch("matvec", a, x);
  std::vector<double> out(m, 0.0);
  auto A = a.data();
  auto X = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) acc += A[i * k + p] * X[p];
    out[i] = acc;
  }
  return make_result({m}, std::move(out), "matvec", {a.node(), x.node()}, [m, k](Node& self) {
    Node& pa = *self.parents[0];
    Node& px = *self.parents[1];
    const auto& G = self.grad;
    if (pa.requires_grad) {
      auto& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += G[i] * px.data[p];
    }
    if (px.requires_grad) {
      auto& gx = px.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) gx[p] += G[i] * pa.data[i * k + p];
    }
  });
}

Tensor vecmat(const Tensor& x, const Tensor& b) {
  require_rank(x, 1, "vecmat");
  require_rank(b, 2, "vecmat");
  const std::size_t k = b.rows(), n = b.cols();
  if (x.numel() != k) mismatch("vecmat", x, b);
  std::vector<double> out(n, 0.0);
  auto X = x.data();
  auto B = b.data();
  for (std::size_t p = 0; p < k; ++p) {
    const double xp = X[p];
    for (std::size_t j = 0; j < n; ++j) out[j] += xp * B[p * n + j];
  }
  return make_result({n}, std::move(out), "vecmat", {x.node(), b.node()}, [k, n](Node& self) {
    Node& px = *self.parents[0];
    Node& pb = *self.parents[1];
    const auto& G = self.grad;
    if (px.requires_grad) {
      auto& gx = px.grad_buffer();
      for (std::size_t p = 0; p < k; ++p) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += pb.data[p * n + j] * G[j];
        gx[p] += acc;
      }
    }
    if (pb.requires_grad) {
      auto& gb = pb.grad_buffer();
      for (std::size_t p = 0; p < k; ++p) {
        const double xp = px.data[p];
        for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += xp * G[j];
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  auto A = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = A[i * n + j];
  return make_result({n, m}, std::move(out), "transpose", {a.node()}, [m, n](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) {
    std::vector<double> out(a.numel());
    auto A = a.data();
    auto B = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] + B[i];
    return make_result(a.shape(), std::move(out), "add", {a.node(), b.node()}, [](Node& self) {
      for (auto& parent : self.parents) {
        if (!parent->requires_grad) continue;
        auto& g = parent->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
    });
  }
  // Vector broadcast over the rows of a matrix, in either argument order.
  const bool a_is_matrix = a.rank() == 2 && b.rank() == 1 && b.numel() == a.cols();
  const bool b_is_matrix = b.rank() == 2 && a.rank() == 1 && a.numel() == b.cols();
  if (!a_is_matrix && !b_is_matrix) mismatch("add", a, b);
  const Tensor& mat = a_is_matrix ? a : b;
  const Tensor& vec = a_is_matrix ? b : a;
  const std::size_t m = mat.rows(), n = mat.cols();
  std::vector<double> out(m * n);
  auto M = mat.data();
  auto V = vec.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = M[i * n + j] + V[j];
  return make_result({m, n}, std::move(out), "add_rows", {mat.node(), vec.node()},
                     [m, n](Node& self) {
                       Node& pm = *self.parents[0];
                       Node& pv = *self.parents[1];
                       if (pm.requires_grad) {
                         auto& g = pm.grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                       }
                       if (pv.requires_grad) {
                         auto& g = pv.grad_buffer();
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
                       }
                     });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("hadamard", a, b);
  std::vector<double> out(a.numel());
  auto A = a.data();
  auto B = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
  return make_result(a.shape(), std::move(out), "hadamard", {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.data[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.data[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, "scale", [factor](double x) { return factor * x; },
               [factor](double, double) { return factor; });
}

Tensor tanh(const Tensor& a) {
  return unary(a, "tanh", [](double x) { return std::tanh(x); },
               [](double y, double) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
               [](double y, double) { return y * (1.0 - y); });
}

Tensor softmax(const Tensor& x) {
  require_rank(x, 1, "softmax");
  check_finite(x, "softmax");
  auto in = x.data();
  const double peak = *std::max_element(in.begin(), in.end());
  std::vector<double> out(in.size());
  double total = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) total += out[i] = std::exp(in[i] - peak);
  for (auto& v : out) v /= total;
  return make_result(x.shape(), std::move(out), "softmax", {x.node()}, [](Node& self) {
    double dot = 0.0;
    for (std::size_t i = 0; i < self.data.size(); ++i) dot += self.grad[i] * self.data[i];
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.data[i] * (self.grad[i] - dot);
  });
}

Tensor log_softmax(const Tensor& x) {
  require_rank(x, 1, "log_softmax");
  check_finite(x, "log_softmax");
  auto in = x.data();
  const double peak = *std::max_element(in.begin(), in.end());
  double total = 0.0;
  for (double v : in) total += std::exp(v - peak);
  const double log_z = peak + std::log(total);
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] - log_z;
  return make_result(x.shape(), std::move(out), "log_softmax", {x.node()}, [](Node& self) {
    double gsum = 0.0;
    for (double g : self.grad) gsum += g;
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] - std::exp(self.data[i]) * gsum;
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make_result({}, {total}, "sum", {a.node()}, [](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor sum_squares(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v * v;
  return make_result({}, {total}, "sum_squares", {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * p.data[i] * self.grad[0];
  });
}

Tensor pick(const Tensor& x, std::size_t index) {
  require_rank(x, 1, "pick");
  if (index >= x.numel()) {
    throw DimensionError("pick: index " + std::to_string(index) + " out of range for " +
                         shape_str(x.shape()));
  }
  return make_result({}, {x.data()[index]}, "pick", {x.node()}, [index](Node& self) {
    self.parents[0]->grad_buffer()[index] += self.grad[0];
  });
}

Tensor select_row(const Tensor& table, std::size_t index) {
  require_rank(table, 2, "select_row");
  const std::size_t n = table.cols();
  if (index >= table.rows()) {
    throw DimensionError("select_row: row " + std::to_string(index) + " out of range for " +
                         shape_str(table.shape()));
  }
  auto src = table.data().subspan(index * n, n);
  return make_result({n}, std::vector<double>(src.begin(), src.end()), "select_row",
                     {table.node()}, [index, n](Node& self) {
                       auto& g = self.parents[0]->grad_buffer();
                       for (std::size_t j = 0; j < n; ++j) g[index * n + j] += self.grad[j];
                     });
}

Tensor mean_rows(const Tensor& a) {
  require_rank(a, 2, "mean_rows");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(n, 0.0);
  auto A = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += A[i * n + j];
  const double inv = 1.0 / static_cast<double>(m);
  for (auto& v : out) v *= inv;
  return make_result({n}, std::move(out), "mean_rows", {a.node()}, [m, n, inv](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j] * inv;
  });
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw UsageError("concat: no inputs");
  std::vector<double> out;
  std::vector<NodePtr> parents;
  std::vector<std::size_t> offsets;
  for (const auto& part : parts) {
    require_rank(part, 1, "concat");
    offsets.push_back(out.size());
    auto d = part.data();
    out.insert(out.end(), d.begin(), d.end());
    parents.push_back(part.node());
  }
  const std::size_t total = out.size();
  return make_result({total}, std::move(out), "concat", std::move(parents),
                     [offsets](Node& self) {
                       for (std::size_t k = 0; k < self.parents.size(); ++k) {
                         Node& p = *self.parents[k];
                         if (!p.requires_grad) continue;
                         auto& g = p.grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[offsets[k] + i];
                       }
                     });
}

Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw UsageError("stack_rows: no inputs");
  const std::size_t n = rows.front().numel();
  std::vector<double> out;
  out.reserve(rows.size() * n);
  std::vector<NodePtr> parents;
  for (const auto& row : rows) {
    require_rank(row, 1, "stack_rows");
    if (row.numel() != n) mismatch("stack_rows", rows.front(), row);
    auto d = row.data();
    out.insert(out.end(), d.begin(), d.end());
    parents.push_back(row.node());
  }
  return make_result({rows.size(), n}, std::move(out), "stack_rows", std::move(parents),
                     [n](Node& self) {
                       for (std::size_t k = 0; k < self.parents.size(); ++k) {
                         Node& p = *self.parents[k];
                         if (!p.requires_grad) continue;
                         auto& g = p.grad_buffer();
                         for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[k * n + j];
                       }
                     });
}

}  // namespace memcap
