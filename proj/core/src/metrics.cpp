#include "memcap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

#include "memcap/error.hpp"

namespace memcap {

namespace {

using NgramCounts = std::map<Words, double>;

NgramCounts count_ngrams(const Words& words, std::size_t n) {
  NgramCounts counts;
  if (words.size() < n) return counts;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    counts[Words(words.begin() + static_cast<std::ptrdiff_t>(i),
                 words.begin() + static_cast<std::ptrdiff_t>(i + n))] += 1.0;
  }
  return counts;
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (std::size_t k = 0; k < kMaxBleuOrder; ++k) {
    matched[k] += other.matched[k];
    total[k] += other.total[k];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
  return *this;
}

BleuStats bleu_stats(const EvalPair& pair) {
  if (pair.references.empty()) throw UsageError("bleu: candidate without references");
  BleuStats stats;
  const double c = static_cast<double>(pair.candidate.size());
  stats.candidate_length = c;
  // Closest reference length; ties go to the shorter reference.
  double best = static_cast<double>(pair.references.front().size());
  for (const auto& ref : pair.references) {
    const double r = static_cast<double>(ref.size());
    if (std::abs(r - c) < std::abs(best - c) || (std::abs(r - c) == std::abs(best - c) && r < best)) {
      best = r;
    }
  }
  stats.reference_length = best;

  for (std::size_t n = 1; n <= kMaxBleuOrder; ++n) {
    const auto cand = count_ngrams(pair.candidate, n);
    NgramCounts max_ref;
    for (const auto& ref : pair.references) {
      for (const auto& [gram, count] : count_ngrams(ref, n)) {
        auto& slot = max_ref[gram];
        slot = std::max(slot, count);
      }
    }
    for (const auto& [gram, count] : cand) {
      stats.total[n - 1] += count;
      if (auto it = max_ref.find(gram); it != max_ref.end()) stats.matched[n - 1] += std::min(count, it->second);
    }
  }
  return stats;
}

BleuStats bleu_stats(const std::vector<EvalPair>& pairs) {
  BleuStats stats;
  for (const auto& pair : pairs) stats += bleu_stats(pair);
  return stats;
}

double bleu_from_stats(const BleuStats& stats, std::size_t n, bool add_one_smoothing) {
  if (n < 1 || n > kMaxBleuOrder) throw UsageError("bleu: order must be in 1..4");
  if (stats.candidate_length == 0.0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double matched = stats.matched[k];
    double total = stats.total[k];
    if (add_one_smoothing && k > 0) {
      matched += 1.0;
      total += 1.0;
    }
    if (matched == 0.0 || total == 0.0) return 0.0;
    log_sum += std::log(matched / total);
  }
  const double c = stats.candidate_length;
  const double r = stats.reference_length;
  const double penalty = c < r ? 1.0 - r / c : 0.0;
  return std::exp(log_sum / static_cast<double>(n) + penalty);
}

double bleu(const std::vector<EvalPair>& pairs, std::size_t n, bool add_one_smoothing) {
  if (pairs.empty()) throw UsageError("bleu: empty candidate set");
  return bleu_from_stats(bleu_stats(pairs), n, add_one_smoothing);
}

CiderResult cider(const std::vector<EvalPair>& pairs) {
  CiderResult result;
  if (pairs.empty()) return result;
  result.degenerate_idf = pairs.size() < 2;
  const double videos = static_cast<double>(pairs.size());

  // Document frequency: number of videos whose reference set contains the n-gram.
  std::map<Words, double> df;
  for (const auto& pair : pairs) {
    std::set<Words> seen;
    for (const auto& ref : pair.references)
      for (std::size_t n = 1; n <= 4; ++n)
        for (const auto& entry : count_ngrams(ref, n)) seen.insert(entry.first);
    for (const auto& gram : seen) df[gram] += 1.0;
  }
  auto weigh = [&](const NgramCounts& counts) {
    NgramCounts vec;
    for (const auto& [gram, tf] : counts) {
      auto it = df.find(gram);
      const double freq = it == df.end() ? 1.0 : std::max(1.0, it->second);
      vec[gram] = tf * std::log(videos / freq);
    }
    return vec;
  };
  auto norm = [](const NgramCounts& v) {
    double s = 0.0;
    for (const auto& entry : v) s += entry.second * entry.second;
    return std::sqrt(s);
  };

  double total = 0.0;
  for (const auto& pair : pairs) {
    if (pair.references.empty()) throw UsageError("cider: candidate without references");
    double per_order_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto cand = weigh(count_ngrams(pair.candidate, n));
      const double cand_norm = norm(cand);
      double sim_sum = 0.0;
      for (const auto& ref_words : pair.references) {
        const auto ref = weigh(count_ngrams(ref_words, n));
        const double ref_norm = norm(ref);
        if (cand_norm == 0.0 || ref_norm == 0.0) continue;
        double dot = 0.0;
        for (const auto& [gram, w] : cand) {
          if (auto it = ref.find(gram); it != ref.end()) dot += w * it->second;
        }
        sim_sum += dot / (cand_norm * ref_norm);
      }
      per_order_sum += sim_sum / static_cast<double>(pair.references.size());
    }
    const double score = 10.0 * per_order_sum / 4.0;
    result.per_pair.push_back(score);
    total += score;
  }
  result.score = total / videos;
  return result;
}

}  // namespace memcap
