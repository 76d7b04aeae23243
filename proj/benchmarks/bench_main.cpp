#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "memcap/lstm.hpp"
#include "memcap/metrics.hpp"
#include "memcap/model.hpp"
#include "memcap/params.hpp"
#include "memcap/training.hpp"

using namespace memcap;

namespace {

// One LSTM step at hidden size `range(0)` with inputs of the same width.
void BM_LstmStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  LstmCell cell(n, n, true, rng);
  const Tensor x = uniform_tensor({n}, 1.0, rng, false);
  const auto zero = CellState::zeros(n);
  NoGradGuard no_grad;
  for (auto _ : state) {
    auto next = lstm_step(cell, x, zero);
    benchmark::DoNotOptimize(next.h);
  }
}
BENCHMARK(BM_LstmStep)->Arg(64)->Arg(256)->Arg(512);

ModelConfig bench_model(std::size_t hidden) {
  ModelConfig c;
  c.locations = 49;
  c.depth = 64;
  c.hidden = hidden;
  c.memory = hidden / 2;
  c.embed = 32;
  c.vocab = 200;
  return c;
}

// Teacher-forced loss and backward pass for one 12-word caption over 8 frames.
void BM_TeacherForcedStep(benchmark::State& state) {
  const auto config = bench_model(static_cast<std::size_t>(state.range(0)));
  Rng rng(2);
  CaptionModel model(config, rng);
  std::vector<Tensor> frames;
  for (int i = 0; i < 8; ++i) frames.push_back(uniform_tensor({config.locations, config.depth}, 1.0, rng, false));
  TokenSeq caption{kBos};
  for (int i = 0; i < 12; ++i) caption.push_back(4 + uniform_index(rng, config.vocab - 4));
  caption.push_back(kEos);
  const std::vector<TokenId> gold(caption.begin() + 1, caption.end());
  const auto params = model.parameters();
  for (auto _ : state) {
    zero_grads(params);
    const auto tf = forward_teacher_forced(model, frames, caption);
    auto loss = nll_loss(tf.log_probs, gold, params, 1e-5);
    loss.backward();
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_TeacherForcedStep)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

// Corpus BLEU-4 over `range(0)` caption pairs with three references each.
void BM_CorpusBleu(benchmark::State& state) {
  const std::vector<std::string> lexicon{"a", "man", "woman", "is", "slicing", "playing", "the", "guitar",
                                         "tomato", "onion", "cat", "dog", "with", "ball", "running"};
  Rng rng(3);
  const auto sentence = [&] {
    Words w;
    for (std::size_t i = 0, n = 6 + uniform_index(rng, 8); i < n; ++i) w.push_back(lexicon[uniform_index(rng, lexicon.size())]);
    return w;
  };
  std::vector<EvalPair> pairs;
  for (std::int64_t i = 0; i < state.range(0); ++i) pairs.push_back({sentence(), {sentence(), sentence(), sentence()}});
  for (auto _ : state) benchmark::DoNotOptimize(bleu(pairs, 4));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CorpusBleu)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
