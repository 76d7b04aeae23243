#include "memcap/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "memcap/error.hpp"
#include "memcap/ops.hpp"

namespace memcap {

std::string_view variant_tag(AblationVariant v) {
  switch (v) {
    case AblationVariant::AttNoTem: return "ATT_NO_TEM";
    case AblationVariant::AttTem: return "ATT_TEM";
    case AblationVariant::NoIamTem: return "NO_IAM_TEM";
    case AblationVariant::IamNoTem: return "IAM_NO_TEM";
    case AblationVariant::IamTem: return "IAM_TEM";
  }
  return "?";
}

AblationVariant parse_variant(std::string_view tag) {
  for (auto v : kAllVariants) {
    if (variant_tag(v) == tag) return v;
  }
  throw UsageError("unknown variant '" + std::string(tag) +
                   "' (expected ATT_NO_TEM, ATT_TEM, NO_IAM_TEM, IAM_NO_TEM or IAM_TEM)");
}

bool uses_tem(AblationVariant v) {
  return v == AblationVariant::AttTem || v == AblationVariant::NoIamTem || v == AblationVariant::IamTem;
}

bool uses_memory(AblationVariant v) {
  return v == AblationVariant::IamNoTem || v == AblationVariant::IamTem;
}

bool uses_attention(AblationVariant v) { return v != AblationVariant::NoIamTem; }

void ModelConfig::validate() const {
  if (locations == 0 || depth == 0 || hidden == 0 || memory == 0 || embed == 0) {
    throw DimensionError("model dimensions L, D, K, M, E must be positive");
  }
  if (vocab <= kUnk) throw UsageError("model vocabulary must contain more than the reserved tokens");
  if (tem_layers == 0 || decoder_layers == 0) throw UsageError("LSTM stacks need at least one layer");
}

namespace {

std::size_t context_dim(const ModelConfig& c) { return uses_memory(c.variant) ? c.memory : c.hidden; }

std::optional<Tem> make_tem(const ModelConfig& c, Rng& rng) {
  c.validate();
  if (!uses_tem(c.variant)) return std::nullopt;
  return Tem(TemConfig{c.locations, c.depth, c.hidden, c.tem_layers, c.use_bias}, rng);
}

std::optional<FrameEncoder> make_encoder(const ModelConfig& c, Rng& rng) {
  if (uses_tem(c.variant)) return std::nullopt;
  return FrameEncoder(c.locations, c.depth, c.hidden, rng);
}

std::optional<Iam> make_iam(const ModelConfig& c, Rng& rng) {
  if (uses_memory(c.variant)) return Iam(c.hidden, c.memory, c.use_bias, rng);
  if (uses_attention(c.variant)) return Iam::memoryless(c.hidden, rng);
  return std::nullopt;
}

}  // namespace

CaptionModel::CaptionModel(const ModelConfig& config, Rng& rng)
    : config_(config),
      tem_(make_tem(config, rng)),
      encoder_(make_encoder(config, rng)),
      iam_(make_iam(config, rng)),
      decoder_(config.vocab, config.embed, context_dim(config), config.hidden,
               config.decoder_layers, config.use_bias, rng) {}

Tensor CaptionModel::encode(std::span<const Tensor> frames) const {
  if (frames.empty()) throw UsageError("encode: no frames");
  for (const auto& frame : frames) check_frame(frame, config_.locations, config_.depth);
  return tem_ ? tem_forward(*tem_, frames) : encoder_->encode(frames);
}

ParamList CaptionModel::parameters() const {
  ParamList out;
  if (tem_) append_params(out, tem_->parameters(), "tem");
  if (encoder_) append_params(out, encoder_->parameters(), "encoder");
  if (iam_) append_params(out, iam_->parameters(), "iam");
  append_params(out, decoder_.parameters(), "decoder");
  return out;
}

DecodingSession::DecodingSession(const CaptionModel& model, std::span<const Tensor> frames)
    : model_(&model),
      frame_states_(model.encode(frames)),
      decoder_state_(model.decoder().stack().zero_state()) {
  if (const Iam* iam = model.iam()) {
    projected_ = project_frames(*iam, frame_states_);
    if (iam->has_memory()) memory_ = IamState::zeros(iam->memory_dim());
  } else {
    mean_states_ = mean_rows(frame_states_);
  }
}

DecodingSession::Step DecodingSession::step(TokenId prev_word) {
  const Iam* iam = model_->iam();
  Tensor context;
  Tensor alpha;
  if (iam) {
    auto att = attention_update(*iam, frame_states_, projected_, decoder_state(), memory_.h_m);
    ++counters_.attention_updates;
    alpha = att.alpha;
    if (iam->has_memory()) {
      memory_ = memory_update(*iam, memory_, att.context, att.alpha);
      ++counters_.memory_updates;
      context = memory_.h_m;
    } else {
      context = att.context;
    }
  } else {
    // A fixed mean over frame states weighs every frame equally.
    const std::size_t n = frame_states_.rows();
    alpha = Tensor::full({n}, 1.0 / static_cast<double>(n));
    context = mean_states_;
  }
  auto out = decode_step(model_->decoder(), prev_word, context, decoder_state_);
  ++counters_.decode_steps;
  decoder_state_ = std::move(out.state);
  return {out.logits, out.probs, log_softmax(out.logits), alpha};
}

TeacherForcedResult forward_teacher_forced(const CaptionModel& model,
                                           std::span<const Tensor> frames,
                                           std::span<const TokenId> caption) {
  if (caption.size() < 2 || caption.front() != kBos) {
    throw UsageError("forward_teacher_forced: caption must start with BOS and hold at least one target");
  }
  DecodingSession session(model, frames);
  TeacherForcedResult out;
  for (std::size_t t = 0; t + 1 < caption.size(); ++t) {
    auto step = session.step(caption[t]);
    out.probs.push_back(step.probs);
    out.log_probs.push_back(step.log_probs);
    out.alphas.push_back(step.alpha);
  }
  out.counters = session.counters();
  return out;
}

double Hypothesis::normalized_score() const {
  return tokens.empty() ? 0.0 : total_log_prob / static_cast<double>(tokens.size());
}

TokenSeq Generation::words() const {
  TokenSeq out = tokens;
  if (!out.empty() && out.back() == kEos) out.pop_back();
  return out;
}

namespace {

std::vector<double> to_vector(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

Generation greedy(const CaptionModel& model, std::span<const Tensor> frames, std::size_t max_len) {
  DecodingSession session(model, frames);
  Generation out;
  TokenId prev = kBos;
  double total = 0.0;
  while (out.tokens.size() < max_len) {
    auto step = session.step(prev);
    auto lp = step.log_probs.data();
    const auto best = static_cast<TokenId>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    out.tokens.push_back(best);
    out.alphas.push_back(to_vector(step.alpha));
    out.log_probs.push_back(lp[best]);
    total += lp[best];
    prev = best;
    if (best == kEos) break;
  }
  out.score = total / static_cast<double>(out.tokens.size());
  return out;
}

Generation beam(const CaptionModel& model, std::span<const Tensor> frames, std::size_t width,
                std::size_t max_len) {
  struct Live {
    DecodingSession session;
    Hypothesis hyp;
  };
  std::vector<Live> live{{DecodingSession(model, frames), {}}};
  std::vector<Hypothesis> finalized;

  for (std::size_t len = 0; len < max_len && !live.empty() && finalized.size() < width; ++len) {
    struct Candidate {
      double score;
      std::size_t parent;
      TokenId token;
    };
    std::vector<Candidate> candidates;
    std::vector<DecodingSession::Step> steps;
    for (std::size_t h = 0; h < live.size(); ++h) {
      auto& entry = live[h];
      TokenId prev = entry.hyp.tokens.empty() ? kBos : entry.hyp.tokens.back();
      steps.push_back(entry.session.step(prev));
      auto lp = steps.back().log_probs.data();
      std::vector<TokenId> order(lp.size());
      for (TokenId i = 0; i < order.size(); ++i) order[i] = i;
      const std::size_t keep = std::min(width, order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                        [&](TokenId a, TokenId b) { return lp[a] > lp[b] || (lp[a] == lp[b] && a < b); });
      for (std::size_t r = 0; r < keep; ++r) {
        candidates.push_back({entry.hyp.total_log_prob + lp[order[r]], h, order[r]});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      return std::tie(b.score, a.parent, a.token) < std::tie(a.score, b.parent, b.token);
    });
    candidates.resize(std::min(candidates.size(), width - finalized.size()));

    std::vector<Live> next;
    for (const auto& cand : candidates) {
      Live child{live[cand.parent].session, live[cand.parent].hyp};
      const auto& step = steps[cand.parent];
      child.hyp.tokens.push_back(cand.token);
      child.hyp.alphas.push_back(to_vector(step.alpha));
      child.hyp.log_probs.push_back(step.log_probs.data()[cand.token]);
      child.hyp.total_log_prob = cand.score;
      if (cand.token == kEos) {
        finalized.push_back(std::move(child.hyp));
      } else {
        next.push_back(std::move(child));
      }
    }
    live = std::move(next);
  }
  // Hypotheses cut off by max_len are finalized as they stand.
  for (auto& entry : live) finalized.push_back(std::move(entry.hyp));

  const auto best = std::max_element(finalized.begin(), finalized.end(),
                                     [](const Hypothesis& a, const Hypothesis& b) {
                                       return a.normalized_score() < b.normalized_score();
                                     });
  Generation out;
  out.tokens = best->tokens;
  out.alphas = best->alphas;
  out.log_probs = best->log_probs;
  out.score = best->normalized_score();
  out.finalized = std::move(finalized);
  return out;
}

}  // namespace

Generation generate(const CaptionModel& model, std::span<const Tensor> frames,
                    const GenerateOptions& options) {
  if (options.max_len < 1) throw UsageError("generate: max_len must be at least 1");
  if (options.mode == DecodeMode::Beam && options.beam_width < 1) {
    throw UsageError("generate: beam width must be at least 1");
  }
  NoGradGuard no_grad;
  if (options.mode == DecodeMode::Greedy) return greedy(model, frames, options.max_len);
  return beam(model, frames, options.beam_width, options.max_len);
}

}  // namespace memcap
