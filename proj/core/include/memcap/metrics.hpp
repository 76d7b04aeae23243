#pragma once

// Corpus-level caption metrics over whitespace-token sequences.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace memcap {

using Words = std::vector<std::string>;

struct EvalPair {
  Words candidate;
  std::vector<Words> references;  // at least one
};

inline constexpr std::size_t kMaxBleuOrder = 4;

// Sufficient statistics for corpus BLEU up to order 4.
struct BleuStats {
  std::array<double, kMaxBleuOrder> matched{};  // reference-clipped n-gram matches
  std::array<double, kMaxBleuOrder> total{};    // candidate n-grams
  double candidate_length = 0.0;
  double reference_length = 0.0;  // sum of per-sentence closest reference lengths

  BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(const EvalPair& pair);
BleuStats bleu_stats(const std::vector<EvalPair>& pairs);

// BLEU-n from accumulated statistics: geometric mean of the modified
// precisions of orders 1..n times the brevity penalty exp(1 - r/c) for c < r.
// Without smoothing any zero precision yields 0; with add_one_smoothing the
// orders n >= 2 use (matched + 1) / (total + 1).
double bleu_from_stats(const BleuStats& stats, std::size_t n, bool add_one_smoothing = false);

// Throws UsageError for an empty corpus or n outside 1..4.
double bleu(const std::vector<EvalPair>& pairs, std::size_t n, bool add_one_smoothing = false);

struct CiderResult {
  double score = 0.0;            // mean of per_pair
  std::vector<double> per_pair;  // 10 * mean over n = 1..4 of the mean reference cosine
  bool degenerate_idf = false;   // fewer than two videos: every IDF weight is zero
};

// CIDEr (plain, without the length penalty and clipping of CIDEr-D). n-gram
// vectors are term counts weighted by log(|videos| / max(1, df)), where df is
// the number of videos whose references contain the n-gram.
CiderResult cider(const std::vector<EvalPair>& pairs);

}  // namespace memcap
