#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "memcap/checkpoint.hpp"
#include "memcap/data.hpp"
#include "memcap/model.hpp"
#include "memcap/params.hpp"
#include "memcap/vocabulary.hpp"

namespace memcap {

struct TrainConfig {
  double lr = 2e-5;
  double beta1 = 0.8;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 16;
  double lambda_l2 = 1e-5;
  double clip_norm = 5.0;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

// lambda * sum of squared non-bias parameters.
Tensor l2_penalty(const ParamList& params, double lambda);

// -sum_t log s-hat_t[gold_t] + l2_penalty(params, lambda). `gold` holds the
// target token of each step (the caption without its leading BOS).
Tensor nll_loss(std::span<const Tensor> log_probs, std::span<const TokenId> gold,
                const ParamList& params, double lambda);

struct AdamSettings {
  double lr = 2e-5;
  double beta1 = 0.8;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamMoments {
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;

  static AdamMoments zeros_like(const ParamList& params);
};

// One bias-corrected Adam update at step t >= 1 using each parameter's
// accumulated grad (a parameter without grad counts as zero gradient).
// Throws NumericError naming the parameter on a non-finite gradient, before
// anything is modified.
void adam_step(const ParamList& params, AdamMoments& moments, const AdamSettings& settings,
               std::uint64_t t);

double global_grad_norm(const ParamList& params);
// Rescales every grad by clip_norm / norm when the global L2 norm exceeds
// clip_norm. Returns the norm before clipping.
double clip_gradients(const ParamList& params, double clip_norm);

void zero_grads(const ParamList& params);

// Fraction of caption tokens whose teacher-forced argmax equals the gold token.
double teacher_forced_accuracy(const CaptionModel& model, std::span<const VideoSample> samples);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double wall_seconds = 0.0;
};

// Training aborted on a non-finite loss; carries the last checkpoint taken
// before the divergence.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, Checkpoint last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const Checkpoint& last_good() const { return last_good_; }

 private:
  Checkpoint last_good_;
};

// Mini-batch teacher-forced training of one model. Every (video, caption)
// pair is one example; a batch loss is the mean example NLL plus the L2
// penalty.
class Trainer {
 public:
  Trainer(CaptionModel& model, const TrainConfig& config);

  // Forward, backward, clipping and one Adam step over `batch`. Returns the
  // batch loss before the update.
  double train_step(std::span<const VideoSample* const> batch,
                    std::span<const std::size_t> caption_index);
  // One shuffled pass over every example of `train`.
  EpochLog run_epoch(std::span<const VideoSample> train, std::span<const VideoSample> val);
  // Mean example NLL plus the L2 penalty, without recording a graph.
  double evaluate_loss(std::span<const VideoSample> samples) const;

  std::uint64_t steps() const { return step_; }
  std::uint64_t epochs_done() const { return epoch_; }
  const TrainConfig& config() const { return config_; }
  CaptionModel& model() { return *model_; }

  Checkpoint checkpoint(const std::string& config_text, const std::string& vocab_text) const;
  void restore(const Checkpoint& ckpt);

 private:
  CaptionModel* model_;
  ParamList params_;
  TrainConfig config_;
  AdamMoments moments_;
  Rng shuffle_rng_;
  std::uint64_t step_ = 0;
  std::uint64_t epoch_ = 0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  Checkpoint best;  // lowest validation loss (training loss without a validation set)
  Checkpoint last;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Runs config.epochs epochs. Throws DivergenceError on a non-finite loss.
TrainResult train(CaptionModel& model, std::span<const VideoSample> train_set,
                  std::span<const VideoSample> val_set, const TrainConfig& config,
                  const std::string& config_text = {}, const std::string& vocab_text = {},
                  const EpochCallback& on_epoch = {});

struct CaptionScores {
  std::array<double, 4> bleu{};  // BLEU-1 .. BLEU-4
  double cider = 0.0;
};

// Decodes every sample with `options` and scores the output against the
// sample's reference captions.
CaptionScores evaluate_generation(const CaptionModel& model, std::span<const VideoSample> samples,
                                  const Vocabulary& vocab, const GenerateOptions& options);

}  // namespace memcap
