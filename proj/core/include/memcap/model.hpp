#pragma once

// Full captioning model: an encoder producing one state per frame (the
// temporal model, or the mean-pool encoder in the NO_TEM ablations), a
// per-word context source (iterative attention/memory, single-step
// attention, or a fixed mean over frame states) and the word decoder.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "memcap/decoder.hpp"
#include "memcap/iam.hpp"
#include "memcap/params.hpp"
#include "memcap/tem.hpp"
#include "memcap/vocabulary.hpp"

namespace memcap {

enum class AblationVariant { AttNoTem, AttTem, NoIamTem, IamNoTem, IamTem };

inline constexpr AblationVariant kAllVariants[] = {
    AblationVariant::AttNoTem, AblationVariant::AttTem, AblationVariant::NoIamTem,
    AblationVariant::IamNoTem, AblationVariant::IamTem};

std::string_view variant_tag(AblationVariant v);
// Accepts the tags ATT_NO_TEM, ATT_TEM, NO_IAM_TEM, IAM_NO_TEM, IAM_TEM.
AblationVariant parse_variant(std::string_view tag);
bool uses_tem(AblationVariant v);
bool uses_memory(AblationVariant v);     // IAM_*
bool uses_attention(AblationVariant v);  // everything except NO_IAM_TEM

struct ModelConfig {
  std::size_t locations = 196;  // L
  std::size_t depth = 512;      // D
  std::size_t hidden = 1479;    // K
  std::size_t memory = 797;     // M
  std::size_t embed = 402;      // E
  std::size_t vocab = 0;        // |V|
  std::size_t tem_layers = 2;
  std::size_t decoder_layers = 2;
  bool use_bias = true;
  AblationVariant variant = AblationVariant::IamTem;

  void validate() const;
};

class CaptionModel {
 public:
  CaptionModel(const ModelConfig& config, Rng& rng);

  const ModelConfig& config() const { return config_; }
  const Tem* tem() const { return tem_ ? &*tem_ : nullptr; }
  const FrameEncoder* frame_encoder() const { return encoder_ ? &*encoder_ : nullptr; }
  const Iam* iam() const { return iam_ ? &*iam_ : nullptr; }
  const Decoder& decoder() const { return decoder_; }

  // H_v, one row of size K per frame.
  Tensor encode(std::span<const Tensor> frames) const;

  // Stable order; names are unique and used in checkpoints.
  ParamList parameters() const;

 private:
  ModelConfig config_;
  std::optional<Tem> tem_;
  std::optional<FrameEncoder> encoder_;
  std::optional<Iam> iam_;
  Decoder decoder_;
};

struct StepCounters {
  std::size_t attention_updates = 0;
  std::size_t memory_updates = 0;
  std::size_t decode_steps = 0;
};

// Word-by-word decoding state for one video. Cheap to copy (tensors are
// shared handles), which beam search relies on.
class DecodingSession {
 public:
  DecodingSession(const CaptionModel& model, std::span<const Tensor> frames);

  struct Step {
    Tensor logits;
    Tensor probs;
    Tensor log_probs;
    Tensor alpha;  // attention over frames used for this word
  };

  // Feeds `prev_word` and advances attention, memory and decoder by one word.
  Step step(TokenId prev_word);

  const Tensor& frame_states() const { return frame_states_; }
  const IamState& memory_state() const { return memory_; }
  const Tensor& decoder_state() const { return decoder_state_.back().h; }
  const StepCounters& counters() const { return counters_; }

 private:
  const CaptionModel* model_;
  Tensor frame_states_;
  Tensor projected_;    // H_v W_v, attention variants only
  Tensor mean_states_;  // NO_IAM context
  IamState memory_;
  std::vector<CellState> decoder_state_;
  StepCounters counters_;
};

struct TeacherForcedResult {
  std::vector<Tensor> probs;      // s-hat per predicted word
  std::vector<Tensor> log_probs;  // log s-hat per predicted word
  std::vector<Tensor> alphas;
  StepCounters counters;
};

// `caption` is BOS w_1 .. w_T EOS; predicts every token after BOS from the
// gold prefix. Throws UsageError for captions shorter than two tokens.
TeacherForcedResult forward_teacher_forced(const CaptionModel& model,
                                           std::span<const Tensor> frames,
                                           std::span<const TokenId> caption);

enum class DecodeMode { Greedy, Beam };

struct GenerateOptions {
  DecodeMode mode = DecodeMode::Greedy;
  std::size_t beam_width = 1;
  std::size_t max_len = 32;  // upper bound on emitted tokens, EOS included
};

struct Hypothesis {
  TokenSeq tokens;                          // emitted tokens, EOS included if reached
  std::vector<std::vector<double>> alphas;  // one per emitted token
  std::vector<double> log_probs;            // one per emitted token
  double total_log_prob = 0.0;

  bool finished() const { return !tokens.empty() && tokens.back() == kEos; }
  double normalized_score() const;
};

struct Generation {
  TokenSeq tokens;  // emitted tokens, EOS included if reached
  std::vector<std::vector<double>> alphas;
  std::vector<double> log_probs;
  double score = 0.0;                 // length-normalized log-probability
  std::vector<Hypothesis> finalized;  // beam search only

  TokenSeq words() const;  // tokens without the trailing EOS
};

Generation generate(const CaptionModel& model, std::span<const Tensor> frames,
                    const GenerateOptions& options);

}  // namespace memcap
