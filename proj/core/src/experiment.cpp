#include "memcap/experiment.hpp"

#include <cmath>

#include "memcap/error.hpp"
#include "memcap/synthetic.hpp"

namespace memcap {

namespace {

void resample(std::vector<VideoSample>& samples, std::size_t frames) {
  if (frames == 0) return;
  for (auto& s : samples) s.frames = sample_frames(s.frames, frames);
}

}  // namespace

Dataset load_dataset(const RunConfig& config) {
  Dataset data;
  if (config.dataset == "synthetic") {
    const auto spec = config.synthetic_spec();
    data.vocab = synthetic_vocabulary(spec);
    auto all = generate_synthetic(spec, config.synth_train + config.synth_val + config.synth_test);
    const auto a = all.begin();
    data.train.assign(a, a + static_cast<std::ptrdiff_t>(config.synth_train));
    data.val.assign(a + static_cast<std::ptrdiff_t>(config.synth_train),
                    a + static_cast<std::ptrdiff_t>(config.synth_train + config.synth_val));
    data.test.assign(a + static_cast<std::ptrdiff_t>(config.synth_train + config.synth_val), all.end());
  } else if (config.dataset == "manifest") {
    if (config.train_manifest.empty()) throw UsageError("dataset=manifest needs train_manifest");
    auto raw = load_manifest(config.train_manifest);
    extend_vocabulary(data.vocab, raw);
    data.train = to_samples(raw, data.vocab);
    if (!config.val_manifest.empty()) data.val = load_features(config.val_manifest, data.vocab);
    if (!config.test_manifest.empty()) data.test = load_features(config.test_manifest, data.vocab);
  } else {
    throw UsageError("dataset must be 'synthetic' or 'manifest', got '" + config.dataset + "'");
  }
  resample(data.train, config.frames);
  resample(data.val, config.frames);
  resample(data.test, config.frames);
  if (data.train.empty()) throw UsageError("training split is empty");
  for (const auto& s : data.train) {
    if (s.locations() != config.L || s.depth() != config.D) {
      throw DimensionError("sample '" + s.id + "' has " + std::to_string(s.locations()) + "x" +
                           std::to_string(s.depth()) + " frames but the config expects L=" +
                           std::to_string(config.L) + ", D=" + std::to_string(config.D));
    }
  }
  return data;
}

CaptionModel build_model(const RunConfig& config, const Vocabulary& vocab) {
  Rng rng(config.train.seed);
  return CaptionModel(config.model_config(vocab.size()), rng);
}

GenerateOptions generate_options(const RunConfig& config) {
  GenerateOptions options;
  options.mode = config.beam > 1 ? DecodeMode::Beam : DecodeMode::Greedy;
  options.beam_width = config.beam;
  options.max_len = config.max_len;
  return options;
}

RunOutcome train_and_score(const RunConfig& config, const Dataset& data, CaptionModel& model,
                           const EpochCallback& on_epoch) {
  RunOutcome out;
  out.training = train(model, data.train, data.val, config.train, config.serialize(),
                       data.vocab.serialize(), on_epoch);
  restore_parameters(model.parameters(), out.training.best);
  const auto& held_out = !data.test.empty() ? data.test : !data.val.empty() ? data.val : data.train;
  out.test_scores = evaluate_generation(model, held_out, data.vocab, generate_options(config));
  return out;
}

std::vector<AblationCell> run_ablation(const RunConfig& base, std::size_t seeds,
                                       const AblationProgress& progress,
                                       std::span<const AblationVariant> variants) {
  if (seeds == 0) throw UsageError("ablation needs at least one seed");
  if (variants.empty()) throw UsageError("ablation needs at least one variant");
  std::vector<AblationCell> cells;
  for (auto v : variants) cells.push_back({v, {}, {}});
  for (std::size_t i = 0; i < seeds; ++i) {
    RunConfig config = base;
    config.train.seed = base.train.seed + i;
    config.synth_seed = base.synth_seed + i;
    const Dataset data = load_dataset(config);
    for (auto& cell : cells) {
      config.variant = cell.variant;
      CaptionModel model = build_model(config, data.vocab);
      const auto outcome = train_and_score(config, data, model);
      cell.seeds.push_back(config.train.seed);
      cell.scores.push_back(outcome.test_scores);
      if (progress) progress(cell.variant, config.train.seed, outcome.test_scores);
    }
  }
  return cells;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

std::vector<double> bleu4_values(const AblationCell& cell) {
  std::vector<double> out;
  for (const auto& s : cell.scores) out.push_back(s.bleu[3]);
  return out;
}

}  // namespace memcap
