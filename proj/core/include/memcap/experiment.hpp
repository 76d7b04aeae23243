#pragma once

// End-to-end runs driven by a RunConfig: dataset assembly, training with
// best-validation selection, held-out scoring and the five-variant ablation
// sweep.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "memcap/config.hpp"
#include "memcap/training.hpp"

namespace memcap {

struct Dataset {
  Vocabulary vocab;
  std::vector<VideoSample> train;
  std::vector<VideoSample> val;
  std::vector<VideoSample> test;
};

// Synthetic: synth_train + synth_val + synth_test videos from one generator
// seeded with synth_seed, split in that order. Manifest: the vocabulary comes
// from the training captions; val and test are optional. `frames` > 0
// resamples every video to that many frames.
Dataset load_dataset(const RunConfig& config);

// Model initialized from config.train.seed.
CaptionModel build_model(const RunConfig& config, const Vocabulary& vocab);

GenerateOptions generate_options(const RunConfig& config);

struct RunOutcome {
  TrainResult training;
  CaptionScores test_scores;  // best-validation parameters on the held-out split
};

// Trains `model` on the dataset, restores the best checkpoint and scores the
// test split, falling back to the validation and then the training split.
RunOutcome train_and_score(const RunConfig& config, const Dataset& data, CaptionModel& model,
                           const EpochCallback& on_epoch = {});

struct AblationCell {
  AblationVariant variant;
  std::vector<std::uint64_t> seeds;
  std::vector<CaptionScores> scores;  // one per seed
};

using AblationProgress = std::function<void(AblationVariant, std::uint64_t seed, const CaptionScores&)>;

// Seed i of `seeds` runs with train.seed + i and synth_seed + i; every
// variant shares each seed's data and initialization seed.
std::vector<AblationCell> run_ablation(const RunConfig& base, std::size_t seeds,
                                       const AblationProgress& progress = {},
                                       std::span<const AblationVariant> variants = kAllVariants);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};
MeanStd mean_std(const std::vector<double>& values);

// BLEU-4 of every seed of one cell.
std::vector<double> bleu4_values(const AblationCell& cell);

}  // namespace memcap
