#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "memcap/error.hpp"
#include "memcap/metrics.hpp"

using namespace memcap;

namespace {

Words split(const std::string& text) {
  std::istringstream in(text);
  Words out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

EvalPair pair(const std::string& cand, std::initializer_list<const char*> refs) {
  EvalPair p{split(cand), {}};
  for (auto r : refs) p.references.push_back(split(r));
  return p;
}

// tests/oracles/cider_oracle.py
std::vector<EvalPair> toy_corpus() {
  return {pair("a man is playing a guitar", {"a man plays a guitar", "a person is playing guitar"}),
          pair("a woman is slicing an onion", {"a woman slices an onion", "someone is cutting an onion"}),
          pair("a cat is playing", {"a kitten plays with a ball", "a cat is playing with a toy"})};
}

}  // namespace

TEST(Bleu, IdenticalCandidateScoresOne) {
  std::vector<EvalPair> pairs{pair("a man is slicing a tomato", {"a man is slicing a tomato"})};
  EXPECT_EQ(bleu(pairs, 4), 1.0);
}

TEST(Bleu, ClippedUnigramPrecision) {
  auto stats = bleu_stats(pair("the the the the the the the", {"the cat is on the mat"}));
  EXPECT_EQ(stats.matched[0], 2.0);
  EXPECT_EQ(stats.total[0], 7.0);
  EXPECT_NEAR(stats.matched[0] / stats.total[0], 2.0 / 7.0, 1e-12);
  // c = 7 > r = 6, so no brevity penalty
  std::vector<EvalPair> pairs{pair("the the the the the the the", {"the cat is on the mat"})};
  EXPECT_NEAR(bleu(pairs, 1), 2.0 / 7.0, 1e-12);
}

TEST(Bleu, NoOverlapScoresZero) {
  std::vector<EvalPair> pairs{pair("green ideas sleep", {"a cat is on the mat"})};
  EXPECT_EQ(bleu(pairs, 4), 0.0);
  EXPECT_EQ(bleu(pairs, 1), 0.0);
}

TEST(Bleu, MatchesCorpusOracle) {
  // tests/oracles/bleu_oracle.py
  std::vector<EvalPair> pairs{pair("the cat sat on the mat", {"the cat is on the mat", "there is a cat on the mat"}),
                              pair("a dog runs fast", {"a dog is running fast", "the dog runs quickly"})};
  EXPECT_NEAR(bleu(pairs, 1), 0.90000000000000002, 1e-12);
  EXPECT_NEAR(bleu(pairs, 2), 0.75, 1e-12);
  EXPECT_NEAR(bleu(pairs, 3), 0.45428014820803492, 1e-12);
  EXPECT_EQ(bleu(pairs, 4), 0.0);
  EXPECT_GT(bleu(pairs, 4, true), 0.0);
}

TEST(Bleu, BrevityPenaltyUsesClosestReference) {
  // r = 4 (closest reference), c = 3
  std::vector<EvalPair> pairs{pair("a b c", {"a b c d", "a b c d e f g h"})};
  EXPECT_NEAR(bleu(pairs, 1), std::exp(1.0 - 4.0 / 3.0), 1e-12);
  std::vector<EvalPair> tie{pair("a b c", {"a b c d", "a b"})};
  EXPECT_EQ(bleu_stats(tie).reference_length, 2.0);
}

TEST(Bleu, PermutationInvariantAndMonotoneInOrder) {
  auto pairs = toy_corpus();
  const double b4 = bleu(pairs, 4, true);
  std::reverse(pairs.begin(), pairs.end());
  EXPECT_EQ(bleu(pairs, 4, true), b4);
  for (std::size_t n = 2; n <= 4; ++n) EXPECT_LE(bleu(pairs, n), bleu(pairs, n - 1) + 1e-15);
}

TEST(Bleu, RejectsEmptyCorpusAndBadOrder) {
  EXPECT_THROW(bleu({}, 4), UsageError);
  std::vector<EvalPair> pairs{pair("a", {"a"})};
  EXPECT_THROW(bleu(pairs, 5), UsageError);
  EXPECT_THROW(bleu(pairs, 0), UsageError);
}

TEST(Cider, MatchesToyCorpusOracle) {
  auto result = cider(toy_corpus());
  ASSERT_EQ(result.per_pair.size(), 3u);
  EXPECT_NEAR(result.per_pair[0], 2.4970445182315437, 1e-9);
  EXPECT_NEAR(result.per_pair[1], 2.4010254915624212, 1e-9);
  EXPECT_NEAR(result.per_pair[2], 2.9740897122431624, 1e-9);
  EXPECT_NEAR(result.score, 2.6240532406790424, 1e-9);
  EXPECT_FALSE(result.degenerate_idf);
}

TEST(Cider, SelfSimilarityIsMaximal) {
  std::vector<EvalPair> pairs{pair("a red square moves left", {"a red square moves left"}),
                              pair("the blue circle stays still", {"the blue circle stays still"})};
  auto result = cider(pairs);
  EXPECT_NEAR(result.per_pair[0], 10.0, 1e-12);
  EXPECT_NEAR(result.per_pair[1], 10.0, 1e-12);
}

TEST(Cider, NoSharedNgramsScoresZero) {
  std::vector<EvalPair> pairs{pair("green ideas sleep", {"a dog runs"}), pair("a cat sits", {"a cat sits"})};
  EXPECT_EQ(cider(pairs).per_pair[0], 0.0);
}

TEST(Cider, DuplicatingTheCorpusKeepsPerPairScores) {
  // every candidate n-gram occurs in some reference, so doubling the corpus
  // doubles each document frequency together with the video count
  std::vector<EvalPair> once{pair("a man plays a guitar", {"a man plays a guitar", "a person is playing guitar"}),
                             pair("a woman slices", {"a woman slices an onion", "someone is cutting an onion"}),
                             pair("a cat is playing", {"a kitten plays with a ball", "a cat is playing with a toy"})};
  auto twice = once;
  twice.insert(twice.end(), once.begin(), once.end());
  auto a = cider(once);
  auto b = cider(twice);
  for (std::size_t i = 0; i < once.size(); ++i) {
    EXPECT_NEAR(a.per_pair[i], b.per_pair[i], 1e-12);
    EXPECT_NEAR(b.per_pair[i + once.size()], b.per_pair[i], 1e-12);
  }
}

TEST(Cider, SingleVideoIsFlaggedDegenerate) {
  std::vector<EvalPair> pairs{pair("a cat", {"a cat"})};
  auto result = cider(pairs);
  EXPECT_TRUE(result.degenerate_idf);
  EXPECT_EQ(result.score, 0.0);
}
