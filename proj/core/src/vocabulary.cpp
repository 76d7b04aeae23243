#include "memcap/vocabulary.hpp"

#include <sstream>

#include "memcap/error.hpp"

namespace memcap {

Vocabulary::Vocabulary() {
  for (const char* reserved : {"<pad>", "<bos>", "<eos>", "<unk>"}) add(reserved);
}

TokenId Vocabulary::add(std::string_view token) {
  if (auto it = ids_.find(std::string(token)); it != ids_.end()) return it->second;
  const TokenId id = tokens_.size();
  tokens_.emplace_back(token);
  ids_.emplace(tokens_.back(), id);
  return id;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  if (auto it = ids_.find(std::string(token)); it != ids_.end()) return it->second;
  return std::nullopt;
}

TokenId Vocabulary::id_or_unk(std::string_view token) const { return find(token).value_or(kUnk); }

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw UsageError("token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::deserialize(std::string_view text) {
  Vocabulary vocab;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (index < 4) {
      if (line != vocab.tokens_[index]) throw UsageError("vocabulary: reserved token mismatch at id " + std::to_string(index));
    } else if (vocab.add(line) != index) {
      throw UsageError("vocabulary: duplicate token '" + line + "'");
    }
    ++index;
  }
  if (index < 4) throw UsageError("vocabulary: missing reserved tokens");
  return vocab;
}

}  // namespace memcap
