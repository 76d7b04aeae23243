#include "memcap/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "memcap/error.hpp"
#include "memcap/metrics.hpp"
#include "memcap/ops.hpp"

namespace memcap {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw UsageError("lr must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw UsageError("beta1 and beta2 must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw UsageError("eps must be positive");
  if (batch_size < 1) throw UsageError("batch_size must be at least 1");
  if (lambda_l2 < 0.0) throw UsageError("lambda_l2 must be non-negative");
  if (!(clip_norm > 0.0)) throw UsageError("clip_norm must be positive");
}

Tensor l2_penalty(const ParamList& params, double lambda) {
  Tensor total = Tensor::scalar(0.0);
  for (const auto& p : params) {
    if (!p.is_bias) total = add(total, sum_squares(p.tensor));
  }
  return scale(total, lambda);
}

Tensor nll_loss(std::span<const Tensor> log_probs, std::span<const TokenId> gold,
                const ParamList& params, double lambda) {
  if (log_probs.size() != gold.size()) {
    throw UsageError("nll_loss: " + std::to_string(log_probs.size()) + " predictions for " +
                     std::to_string(gold.size()) + " targets");
  }
  Tensor total = Tensor::scalar(0.0);
  for (std::size_t t = 0; t < gold.size(); ++t) total = add(total, pick(log_probs[t], gold[t]));
  Tensor loss = scale(total, -1.0);
  if (lambda != 0.0) loss = add(loss, l2_penalty(params, lambda));
  return loss;
}

AdamMoments AdamMoments::zeros_like(const ParamList& params) {
  AdamMoments m;
  for (const auto& p : params) {
    m.first.emplace_back(p.tensor.numel(), 0.0);
    m.second.emplace_back(p.tensor.numel(), 0.0);
  }
  return m;
}

void adam_step(const ParamList& params, AdamMoments& moments, const AdamSettings& s, std::uint64_t t) {
  if (t < 1) throw UsageError("adam_step: step counter starts at 1");
  if (moments.first.size() != params.size() || moments.second.size() != params.size()) {
    throw UsageError("adam_step: moments do not match parameter list");
  }
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient in parameter '" + p.name + "'");
    }
  }
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor w = params[k].tensor;
    auto data = w.mutable_data();
    auto& m = moments.first[k];
    auto& v = moments.second[k];
    const bool has = w.has_grad();
    std::span<const double> grad = has ? w.grad() : std::span<const double>{};
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = has ? grad[i] : 0.0;
      m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
      v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      data[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
    }
  }
}

double global_grad_norm(const ParamList& params) {
  double total = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) total += g * g;
  }
  return std::sqrt(total);
}

double clip_gradients(const ParamList& params, double clip_norm) {
  if (!(clip_norm > 0.0)) throw UsageError("clip_gradients: clip_norm must be positive");
  const double norm = global_grad_norm(params);
  if (norm > clip_norm) {
    const double factor = clip_norm / norm;
    for (const auto& p : params) {
      if (!p.tensor.has_grad()) continue;
      Tensor t = p.tensor;
      for (auto& g : t.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

void zero_grads(const ParamList& params) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

double teacher_forced_accuracy(const CaptionModel& model, std::span<const VideoSample> samples) {
  NoGradGuard no_grad;
  std::size_t hits = 0, total = 0;
  for (const auto& sample : samples) {
    for (const auto& caption : sample.captions) {
      auto out = forward_teacher_forced(model, sample.frames, caption);
      for (std::size_t t = 0; t < out.log_probs.size(); ++t) {
        auto lp = out.log_probs[t].data();
        const auto best = static_cast<TokenId>(std::max_element(lp.begin(), lp.end()) - lp.begin());
        hits += best == caption[t + 1];
        ++total;
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

namespace {

double example_nll(const CaptionModel& model, const VideoSample& sample, const TokenSeq& caption) {
  auto out = forward_teacher_forced(model, sample.frames, caption);
  return nll_loss(out.log_probs, std::span(caption).subspan(1), {}, 0.0).item();
}

std::string rng_text(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

}  // namespace

Trainer::Trainer(CaptionModel& model, const TrainConfig& config)
    : model_(&model),
      params_(model.parameters()),
      config_(config),
      moments_(AdamMoments::zeros_like(params_)),
      shuffle_rng_(config.seed) {
  config_.validate();
}

double Trainer::train_step(std::span<const VideoSample* const> batch,
                           std::span<const std::size_t> caption_index) {
  if (batch.empty() || batch.size() != caption_index.size()) {
    throw UsageError("train_step: batch and caption indices must be non-empty and aligned");
  }
  zero_grads(params_);
  const double inv = 1.0 / static_cast<double>(batch.size());
  double nll = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& caption = batch[b]->captions.at(caption_index[b]);
    auto out = forward_teacher_forced(*model_, batch[b]->frames, caption);
    Tensor loss = nll_loss(out.log_probs, std::span(caption).subspan(1), {}, 0.0);
    nll += loss.item();
    scale(loss, inv).backward();
  }
  double penalty = 0.0;
  if (config_.lambda_l2 > 0.0) {
    Tensor l2 = l2_penalty(params_, config_.lambda_l2);
    penalty = l2.item();
    l2.backward();
  }
  const double loss = nll * inv + penalty;
  if (!std::isfinite(loss)) throw NumericError("non-finite training loss at step " + std::to_string(step_ + 1));
  clip_gradients(params_, config_.clip_norm);
  adam_step(params_, moments_, {config_.lr, config_.beta1, config_.beta2, config_.eps}, step_ + 1);
  ++step_;
  return loss;
}

EpochLog Trainer::run_epoch(std::span<const VideoSample> train, std::span<const VideoSample> val) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::pair<std::size_t, std::size_t>> examples;
  for (std::size_t s = 0; s < train.size(); ++s)
    for (std::size_t c = 0; c < train[s].captions.size(); ++c) examples.emplace_back(s, c);
  if (examples.empty()) throw UsageError("run_epoch: training set has no captions");
  for (std::size_t i = examples.size() - 1; i > 0; --i) {
    std::swap(examples[i], examples[uniform_index(shuffle_rng_, i + 1)]);
  }

  double weighted = 0.0;
  std::vector<const VideoSample*> batch;
  std::vector<std::size_t> caption_index;
  for (std::size_t begin = 0; begin < examples.size(); begin += config_.batch_size) {
    const std::size_t end = std::min(examples.size(), begin + config_.batch_size);
    batch.clear();
    caption_index.clear();
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(&train[examples[i].first]);
      caption_index.push_back(examples[i].second);
    }
    weighted += train_step(batch, caption_index) * static_cast<double>(end - begin);
  }
  ++epoch_;
  EpochLog log;
  log.epoch = epoch_;
  log.train_loss = weighted / static_cast<double>(examples.size());
  log.val_loss = val.empty() ? std::numeric_limits<double>::quiet_NaN() : evaluate_loss(val);
  log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return log;
}

double Trainer::evaluate_loss(std::span<const VideoSample> samples) const {
  NoGradGuard no_grad;
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& sample : samples) {
    for (const auto& caption : sample.captions) {
      total += example_nll(*model_, sample, caption);
      ++count;
    }
  }
  if (count == 0) throw UsageError("evaluate_loss: no captions");
  return total / static_cast<double>(count) + l2_penalty(params_, config_.lambda_l2).item();
}

Checkpoint Trainer::checkpoint(const std::string& config_text, const std::string& vocab_text) const {
  Checkpoint ckpt;
  ckpt.config_text = config_text;
  ckpt.vocab_text = vocab_text;
  ckpt.rng_state = rng_text(shuffle_rng_);
  ckpt.step = step_;
  ckpt.epoch = epoch_;
  ckpt.blobs = snapshot_parameters(params_);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    ckpt.blobs.push_back({"adam.m/" + params_[k].name, params_[k].tensor.shape(), moments_.first[k]});
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    ckpt.blobs.push_back({"adam.v/" + params_[k].name, params_[k].tensor.shape(), moments_.second[k]});
  }
  return ckpt;
}

void Trainer::restore(const Checkpoint& ckpt) {
  restore_parameters(params_, ckpt);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const Blob* m = ckpt.find("adam.m/" + params_[k].name);
    const Blob* v = ckpt.find("adam.v/" + params_[k].name);
    if (m && v && m->values.size() == moments_.first[k].size() && v->values.size() == moments_.second[k].size()) {
      moments_.first[k] = m->values;
      moments_.second[k] = v->values;
    } else {
      std::fill(moments_.first[k].begin(), moments_.first[k].end(), 0.0);
      std::fill(moments_.second[k].begin(), moments_.second[k].end(), 0.0);
    }
  }
  if (!ckpt.rng_state.empty()) {
    std::istringstream in(ckpt.rng_state);
    in >> shuffle_rng_;
    if (!in) throw UsageError("checkpoint rng state is unreadable");
  }
  step_ = ckpt.step;
  epoch_ = ckpt.epoch;
}

TrainResult train(CaptionModel& model, std::span<const VideoSample> train_set,
                  std::span<const VideoSample> val_set, const TrainConfig& config,
                  const std::string& config_text, const std::string& vocab_text,
                  const EpochCallback& on_epoch) {
  if (train_set.empty()) throw UsageError("train: empty dataset");
  Trainer trainer(model, config);
  TrainResult result;
  result.best = trainer.checkpoint(config_text, vocab_text);
  Checkpoint last_good = result.best;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < config.epochs; ++e) {
    EpochLog log;
    try {
      log = trainer.run_epoch(train_set, val_set);
    } catch (const NumericError& err) {
      throw DivergenceError(err.what(), last_good);
    }
    const double selection = val_set.empty() ? log.train_loss : log.val_loss;
    if (!std::isfinite(selection)) {
      throw DivergenceError("non-finite loss after epoch " + std::to_string(log.epoch), last_good);
    }
    last_good = trainer.checkpoint(config_text, vocab_text);
    if (selection < best_loss) {
      best_loss = selection;
      result.best = last_good;
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  result.last = std::move(last_good);
  return result;
}

CaptionScores evaluate_generation(const CaptionModel& model, std::span<const VideoSample> samples,
                                  const Vocabulary& vocab, const GenerateOptions& options) {
  auto words_of = [&](std::span<const TokenId> ids) {
    Words out;
    for (TokenId id : ids) {
      if (id == kBos || id == kEos || id == kPad) continue;
      out.push_back(vocab.token(id));
    }
    return out;
  };
  std::vector<EvalPair> pairs;
  for (const auto& sample : samples) {
    EvalPair pair;
    pair.candidate = words_of(generate(model, sample.frames, options).words());
    for (const auto& ref : sample.captions) pair.references.push_back(words_of(ref));
    pairs.push_back(std::move(pair));
  }
  CaptionScores scores;
  const auto stats = bleu_stats(pairs);
  for (std::size_t n = 1; n <= 4; ++n) scores.bleu[n - 1] = bleu_from_stats(stats, n);
  scores.cider = cider(pairs).score;
  return scores;
}

}  // namespace memcap
