#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace memcap {

using TokenId = std::size_t;
using TokenSeq = std::vector<TokenId>;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;

// Bidirectional token <-> id map. Ids 0..3 are PAD, BOS, EOS, UNK.
class Vocabulary {
 public:
  Vocabulary();

  // Returns the id of `token`, inserting it if new.
  TokenId add(std::string_view token);
  std::optional<TokenId> find(std::string_view token) const;
  TokenId id_or_unk(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }

  // Ids -> space-separated words, dropping control tokens.
  std::string decode(std::span<const TokenId> ids) const;

  // One token per line in id order; the reserved tokens come first.
  std::string serialize() const;
  static Vocabulary deserialize(std::string_view text);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

}  // namespace memcap
