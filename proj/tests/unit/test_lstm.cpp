#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "gradcheck.hpp"
#include "memcap/error.hpp"
#include "memcap/lstm.hpp"
#include "memcap/ops.hpp"

using namespace memcap;
using memcap::testing::check_gradients;

namespace {

constexpr Gate kGates[] = {Gate::Input, Gate::Forget, Gate::Output, Gate::Candidate};

void fill(const Tensor& t, double value) {
  if (!t.defined()) return;
  auto d = Tensor(t).mutable_data();
  std::fill(d.begin(), d.end(), value);
}

void zero_cell(const LstmCell& cell) {
  for (auto g : kGates) {
    fill(cell.input_weight(g), 0.0);
    fill(cell.hidden_weight(g), 0.0);
    fill(cell.bias(g), 0.0);
  }
}

void expect_zero(const Tensor& t) {
  for (double v : t.data()) EXPECT_EQ(v, 0.0);
}

}  // namespace

TEST(LstmCell, ShapesAndParameterNames) {
  Rng rng(1);
  LstmCell cell(3, 2, true, rng);
  EXPECT_EQ(cell.input_weight(Gate::Forget).shape(), (Shape{3, 2}));
  EXPECT_EQ(cell.hidden_weight(Gate::Output).shape(), (Shape{2, 2}));
  auto params = cell.parameters();
  ASSERT_EQ(params.size(), 12u);
  EXPECT_EQ(params[0].name, "W_xi");
  EXPECT_TRUE(std::any_of(params.begin(), params.end(), [](const NamedParam& p) { return p.name == "b_f" && p.is_bias; }));

  LstmCell plain(3, 2, false, rng);
  EXPECT_EQ(plain.parameters().size(), 8u);
  EXPECT_FALSE(plain.bias(Gate::Input).defined());
}

TEST(LstmCell, ForgetBiasStartsAtOne) {
  Rng rng(2);
  LstmCell cell(4, 3, true, rng);
  for (double v : cell.bias(Gate::Forget).data()) EXPECT_EQ(v, 1.0);
  for (double v : cell.bias(Gate::Input).data()) EXPECT_EQ(v, 0.0);
}

TEST(LstmCell, ZeroWeightsGiveZeroState) {
  Rng rng(3);
  LstmCell cell(3, 2, true, rng);
  zero_cell(cell);
  auto next = lstm_step(cell, Tensor::vector({0.4, -2.0, 1.3}), CellState::zeros(2));
  expect_zero(next.h);
  expect_zero(next.c);
}

TEST(LstmCell, ZeroInputAndStateGiveZeroRegardlessOfWeights) {
  Rng rng(4);
  LstmCell cell(3, 2, false, rng);
  auto next = lstm_step(cell, Tensor::zeros({3}), CellState::zeros(2));
  expect_zero(next.h);
  expect_zero(next.c);
}

TEST(LstmCell, RejectsWrongInputSize) {
  Rng rng(5);
  LstmCell cell(3, 2, true, rng);
  EXPECT_THROW(lstm_step(cell, Tensor::zeros({4}), CellState::zeros(2)), DimensionError);
  EXPECT_THROW(lstm_step(cell, Tensor::zeros({3}), CellState::zeros(3)), DimensionError);
}

TEST(LstmCell, GradientCheck) {
  Rng rng(6);
  LstmCell cell(3, 2, false, rng);
  auto x = uniform_tensor({3}, 1.0, rng);
  CellState prev{uniform_tensor({2}, 1.0, rng, false), uniform_tensor({2}, 1.0, rng, false)};
  auto report = check_gradients(cell.parameters(), [&] {
    auto s1 = lstm_step(cell, x, prev);
    auto s2 = lstm_step(cell, x, s1);
    return sum(s2.h);
  });
  EXPECT_EQ(report.coordinates, 4u * 3 * 2 + 4u * 2 * 2);
  EXPECT_LT(report.max_rel_error, 1e-5) << report.worst;
}

TEST(LstmStack, SingleLayerMatchesCell) {
  Rng rng(7);
  LstmStack stack(3, 4, 1, true, rng);
  auto x = uniform_tensor({3}, 1.0, rng, false);
  auto state = stack.step(x, stack.zero_state());
  auto direct = lstm_step(stack.cells()[0], x, CellState::zeros(4));
  ASSERT_EQ(state.size(), 1u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(state[0].h[i], direct.h[i]);
    EXPECT_EQ(state[0].c[i], direct.c[i]);
  }
}

TEST(LstmStack, ZeroTopLayerGivesZeroOutput) {
  Rng rng(8);
  LstmStack stack(3, 2, 2, true, rng);
  zero_cell(stack.cells()[1]);
  auto state = stack.step(uniform_tensor({3}, 1.0, rng, false), stack.zero_state());
  expect_zero(state[1].h);
  bool first_nonzero = false;
  for (double v : state[0].h.data()) first_nonzero = first_nonzero || v != 0.0;
  EXPECT_TRUE(first_nonzero);
}

TEST(LstmStack, EmptyStackIsAUsageError) {
  std::vector<LstmCell> none;
  std::vector<CellState> prevs;
  EXPECT_THROW(stacked_step(none, Tensor::zeros({2}), prevs), UsageError);
}

TEST(LstmStack, ParameterPrefixes) {
  Rng rng(9);
  LstmStack stack(3, 2, 2, true, rng);
  auto params = stack.parameters();
  EXPECT_EQ(params.size(), 24u);
  EXPECT_EQ(params.front().name, "layer0.W_xi");
  EXPECT_EQ(params.back().name.substr(0, 7), "layer1.");
}

TEST(LstmStack, TwoLayerGradientCheck) {
  Rng rng(10);
  LstmStack stack(3, 2, 2, true, rng);
  auto x1 = uniform_tensor({3}, 1.0, rng);
  auto x2 = uniform_tensor({3}, 1.0, rng);
  auto params = stack.parameters();
  params.push_back({"x1", x1, false});
  auto report = check_gradients(params, [&] {
    auto s = stack.step(x1, stack.zero_state());
    s = stack.step(x2, s);
    return add(sum(s[1].h), sum(s[0].c));
  });
  EXPECT_LT(report.max_rel_error, 1e-5) << report.worst;
}
