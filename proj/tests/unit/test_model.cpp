#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gradcheck.hpp"
#include "memcap/decoder.hpp"
#include "memcap/error.hpp"
#include "memcap/model.hpp"
#include "memcap/ops.hpp"
#include "memcap/training.hpp"

using namespace memcap;
using memcap::testing::check_gradients;

namespace {

ModelConfig tiny_config(AblationVariant variant = AblationVariant::IamTem) {
  ModelConfig c;
  c.locations = 4;
  c.depth = 5;
  c.hidden = 6;
  c.memory = 7;
  c.embed = 4;
  c.vocab = 12;
  c.tem_layers = 1;
  c.decoder_layers = 2;
  c.variant = variant;
  return c;
}

std::vector<Tensor> random_frames(std::size_t n, const ModelConfig& c, Rng& rng) {
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(uniform_tensor({c.locations, c.depth}, 1.0, rng, false));
  return out;
}

double total(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

Tensor summed_nll(const CaptionModel& model, std::span<const Tensor> frames, const TokenSeq& caption) {
  auto tf = forward_teacher_forced(model, frames, caption);
  std::vector<TokenId> gold(caption.begin() + 1, caption.end());
  return nll_loss(tf.log_probs, gold, {}, 0.0);
}

}  // namespace

TEST(Variant, TagsRoundTrip) {
  for (auto v : kAllVariants) EXPECT_EQ(parse_variant(variant_tag(v)), v);
  EXPECT_EQ(variant_tag(AblationVariant::NoIamTem), "NO_IAM_TEM");
  EXPECT_THROW(parse_variant("IAM"), UsageError);
  EXPECT_TRUE(uses_tem(AblationVariant::AttTem));
  EXPECT_FALSE(uses_tem(AblationVariant::IamNoTem));
  EXPECT_FALSE(uses_attention(AblationVariant::NoIamTem));
  EXPECT_TRUE(uses_memory(AblationVariant::IamNoTem));
  EXPECT_FALSE(uses_memory(AblationVariant::AttTem));
}

TEST(Decoder, ZeroWeightsGiveUniformDistribution) {
  Rng rng(1);
  Decoder dec(12, 4, 7, 6, 2, true, rng);
  for (const auto& p : dec.parameters()) {
    auto d = Tensor(p.tensor).mutable_data();
    std::fill(d.begin(), d.end(), 0.0);
  }
  auto step = decode_step(dec, 5, uniform_tensor({7}, 1.0, rng, false), dec.stack().zero_state());
  for (double p : step.probs.data()) EXPECT_NEAR(p, 1.0 / 12, 1e-15);
}

TEST(Decoder, MemoryReachesTheOutput) {
  Rng rng(2);
  Decoder dec(12, 4, 7, 6, 2, true, rng);
  auto a = decode_step(dec, 5, uniform_tensor({7}, 1.0, rng, false), dec.stack().zero_state());
  auto b = decode_step(dec, 5, uniform_tensor({7}, 1.0, rng, false), dec.stack().zero_state());
  bool differs = false;
  for (std::size_t i = 0; i < 12; ++i) differs = differs || a.logits[i] != b.logits[i];
  EXPECT_TRUE(differs);
}

TEST(Decoder, RejectsBadInputs) {
  Rng rng(3);
  Decoder dec(12, 4, 7, 6, 1, false, rng);
  EXPECT_THROW(decode_step(dec, 12, Tensor::zeros({7}), dec.stack().zero_state()), UsageError);
  EXPECT_THROW(decode_step(dec, 1, Tensor::zeros({6}), dec.stack().zero_state()), DimensionError);
  EXPECT_FALSE(dec.output_bias().defined());
}

TEST(Decoder, CrossEntropyGradientCheck) {
  Rng rng(4);
  Decoder dec(12, 4, 7, 6, 2, true, rng);
  auto context = uniform_tensor({7}, 1.0, rng);
  auto params = dec.parameters();
  params.push_back({"context", context, false});
  auto report = check_gradients(params, [&] {
    auto first = decode_step(dec, kBos, context, dec.stack().zero_state());
    auto second = decode_step(dec, 7, context, first.state);
    return scale(pick(log_softmax(second.logits), 9), -1.0);
  });
  EXPECT_LT(report.max_rel_error, 1e-6) << report.worst;
}

TEST(CaptionModel, ParameterPrefixesFollowVariant) {
  Rng rng(5);
  auto has_prefix = [](const ParamList& ps, std::string_view prefix) {
    return std::any_of(ps.begin(), ps.end(), [&](const NamedParam& p) { return p.name.starts_with(prefix); });
  };
  auto full = CaptionModel(tiny_config(), rng).parameters();
  EXPECT_TRUE(has_prefix(full, "tem."));
  EXPECT_TRUE(has_prefix(full, "iam.memory."));
  EXPECT_FALSE(has_prefix(full, "encoder."));
  auto no_tem = CaptionModel(tiny_config(AblationVariant::AttNoTem), rng).parameters();
  EXPECT_TRUE(has_prefix(no_tem, "encoder.W_f"));
  EXPECT_FALSE(has_prefix(no_tem, "iam.W_m"));
  auto no_iam = CaptionModel(tiny_config(AblationVariant::NoIamTem), rng).parameters();
  EXPECT_FALSE(has_prefix(no_iam, "iam."));
}

TEST(CaptionModel, ConfigValidation) {
  auto c = tiny_config();
  c.vocab = 3;
  Rng rng(6);
  EXPECT_THROW(CaptionModel(c, rng), UsageError);
}

TEST(TeacherForcing, SingleWordCountsEachStageOnce) {
  Rng rng(7);
  CaptionModel model(tiny_config(), rng);
  auto frames = random_frames(3, model.config(), rng);
  auto tf = forward_teacher_forced(model, frames, TokenSeq{kBos, kEos});
  EXPECT_EQ(tf.counters.attention_updates, 1u);
  EXPECT_EQ(tf.counters.memory_updates, 1u);
  EXPECT_EQ(tf.counters.decode_steps, 1u);
  EXPECT_EQ(tf.probs.size(), 1u);
}

TEST(TeacherForcing, DistributionsAreNormalizedForEveryVariant) {
  Rng rng(8);
  for (auto v : kAllVariants) {
    CaptionModel model(tiny_config(v), rng);
    auto frames = random_frames(3, model.config(), rng);
    auto tf = forward_teacher_forced(model, frames, TokenSeq{kBos, 5, 6, 7, kEos});
    ASSERT_EQ(tf.probs.size(), 4u) << variant_tag(v);
    for (std::size_t t = 0; t < 4; ++t) {
      EXPECT_NEAR(total(tf.probs[t].data()), 1.0, 1e-12);
      EXPECT_NEAR(total(tf.alphas[t].data()), 1.0, 1e-12);
      for (double p : tf.probs[t].data()) EXPECT_GE(p, 0.0);
    }
    if (v == AblationVariant::NoIamTem) {
      for (double a : tf.alphas[0].data()) EXPECT_NEAR(a, 1.0 / 3, 1e-15);
      EXPECT_EQ(tf.counters.attention_updates, 0u);
    }
  }
}

TEST(TeacherForcing, RejectsMalformedCaptions) {
  Rng rng(9);
  CaptionModel model(tiny_config(), rng);
  auto frames = random_frames(2, model.config(), rng);
  EXPECT_THROW(forward_teacher_forced(model, frames, TokenSeq{kBos}), UsageError);
  EXPECT_THROW(forward_teacher_forced(model, frames, TokenSeq{5, kEos}), UsageError);
}

TEST(TeacherForcing, FullModelGradientCheck) {
  Rng rng(10);
  CaptionModel model(tiny_config(), rng);
  auto frames = random_frames(3, model.config(), rng);
  const TokenSeq caption{kBos, 4, 9, 5, kEos};
  auto report = check_gradients(model.parameters(), [&] { return summed_nll(model, frames, caption); });
  EXPECT_LT(report.max_rel_error, 1e-4) << report.worst;
}

TEST(TeacherForcing, AblationVariantsGradientCheck) {
  Rng rng(11);
  for (auto v : {AblationVariant::AttNoTem, AblationVariant::AttTem, AblationVariant::NoIamTem,
                 AblationVariant::IamNoTem}) {
    CaptionModel model(tiny_config(v), rng);
    auto frames = random_frames(2, model.config(), rng);
    const TokenSeq caption{kBos, 6, 8, kEos};
    auto report = check_gradients(model.parameters(), [&] { return summed_nll(model, frames, caption); });
    EXPECT_LT(report.max_rel_error, 1e-4) << variant_tag(v) << " " << report.worst;
  }
}

TEST(Generate, BeamOfOneEqualsGreedy) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    Rng rng(seed);
    CaptionModel model(tiny_config(kAllVariants[seed % 5]), rng);
    auto frames = random_frames(3, model.config(), rng);
    auto greedy = generate(model, frames, {DecodeMode::Greedy, 1, 10});
    auto beam = generate(model, frames, {DecodeMode::Beam, 1, 10});
    EXPECT_EQ(greedy.tokens, beam.tokens) << "seed " << seed;
  }
}

TEST(Generate, RespectsMaxLengthAndCarriesAttention) {
  Rng rng(12);
  CaptionModel model(tiny_config(), rng);
  auto frames = random_frames(4, model.config(), rng);
  auto out = generate(model, frames, {DecodeMode::Greedy, 1, 3});
  EXPECT_LE(out.tokens.size(), 3u);
  ASSERT_EQ(out.alphas.size(), out.tokens.size());
  ASSERT_EQ(out.log_probs.size(), out.tokens.size());
  for (const auto& a : out.alphas) {
    EXPECT_EQ(a.size(), 4u);
    EXPECT_NEAR(total(a), 1.0, 1e-12);
  }
  EXPECT_THROW(generate(model, frames, {DecodeMode::Greedy, 1, 0}), UsageError);
  EXPECT_THROW(generate(model, frames, {DecodeMode::Beam, 0, 5}), UsageError);
}

TEST(Generate, LogProbsAgreeWithTeacherForcing) {
  Rng rng(13);
  CaptionModel model(tiny_config(), rng);
  auto frames = random_frames(3, model.config(), rng);
  auto out = generate(model, frames, {DecodeMode::Beam, 3, 6});
  TokenSeq caption{kBos};
  caption.insert(caption.end(), out.tokens.begin(), out.tokens.end());
  if (caption.back() != kEos) caption.push_back(kEos);
  auto tf = forward_teacher_forced(model, frames, caption);
  double sum_lp = 0.0;
  for (std::size_t t = 0; t < out.tokens.size(); ++t) {
    EXPECT_NEAR(out.log_probs[t], tf.log_probs[t][out.tokens[t]], 1e-12);
    sum_lp += out.log_probs[t];
  }
  EXPECT_NEAR(out.score, sum_lp / static_cast<double>(out.tokens.size()), 1e-12);
}

TEST(Generate, BeamReturnsBestFinalizedHypothesis) {
  Rng rng(14);
  CaptionModel model(tiny_config(), rng);
  auto frames = random_frames(3, model.config(), rng);
  auto out = generate(model, frames, {DecodeMode::Beam, 4, 8});
  ASSERT_FALSE(out.finalized.empty());
  for (const auto& h : out.finalized) {
    EXPECT_LE(h.normalized_score(), out.score + 1e-15);
    EXPECT_LE(h.tokens.size(), 8u);
    EXPECT_NEAR(h.total_log_prob, total(h.log_probs), 1e-12);
  }
}

TEST(Generate, SingleStepBeamPicksTheArgmax) {
  Rng rng(15);
  CaptionModel model(tiny_config(), rng);
  auto frames = random_frames(3, model.config(), rng);
  auto greedy = generate(model, frames, {DecodeMode::Greedy, 1, 1});
  auto beam = generate(model, frames, {DecodeMode::Beam, 5, 1});
  EXPECT_EQ(beam.tokens, greedy.tokens);
  EXPECT_EQ(beam.score, greedy.score);
}

TEST(Generate, OverfitModelRegeneratesItsCaption) {
  Rng rng(16);
  auto config = tiny_config();
  config.tem_layers = 1;
  config.decoder_layers = 1;
  CaptionModel model(config, rng);
  VideoSample sample{"one", random_frames(3, config, rng), {TokenSeq{kBos, 7, 4, 9, 7, kEos}}};
  TrainConfig tc;
  tc.lr = 0.02;
  tc.batch_size = 1;
  tc.lambda_l2 = 0.0;
  Trainer trainer(model, tc);
  std::vector<VideoSample> set{sample};
  for (int epoch = 0; epoch < 150; ++epoch) trainer.run_epoch(set, {});
  auto out = generate(model, sample.frames, {DecodeMode::Greedy, 1, 10});
  EXPECT_EQ(out.tokens, (TokenSeq{7, 4, 9, 7, kEos}));
  auto beam = generate(model, sample.frames, {DecodeMode::Beam, 3, 10});
  EXPECT_EQ(beam.words(), (TokenSeq{7, 4, 9, 7}));
}
