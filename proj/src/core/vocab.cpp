#include "steer/core/vocab.hpp"

#include <algorithm>
#include <unordered_set>

namespace steer {

Vocab::Vocab(std::vector<std::string> symbols, TokenId eos_id)
    : symbols_(std::move(symbols)), eos_id_(eos_id) {
  if (symbols_.size() < 2) {
    throw Error("vocabulary needs at least 2 symbols");
  }
  if (eos_id_ < 0 || eos_id_ >= static_cast<TokenId>(symbols_.size())) {
    throw Error("eos_id out of range");
  }
  std::unordered_set<std::string_view> seen;
  for (TokenId id = 0; id < size(); ++id) {
    const std::string& s = symbols_[id];
    if (s.empty() && id != eos_id_) {
      throw Error("only the EOS symbol may be empty");
    }
    if (!seen.insert(s).second) {
      throw Error("duplicate vocabulary symbol: \"" + s + "\"");
    }
  }
}

TokenSeq encode(const Vocab& vocab, std::string_view text) {
  TokenSeq out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    TokenId best = -1;
    std::size_t best_len = 0;
    for (TokenId id = 0; id < vocab.size(); ++id) {
      if (id == vocab.eos()) continue;
      const std::string& sym = vocab.symbol(id);
      if (sym.size() > best_len && text.substr(pos, sym.size()) == sym) {
        best = id;
        best_len = sym.size();
      }
    }
    if (best < 0) {
      throw UntokenizableText(std::string(text), pos);
    }
    out.push_back(best);
    pos += best_len;
  }
  return out;
}

std::string decode(const Vocab& vocab, const TokenSeq& seq) {
  std::string out;
  for (TokenId id : seq) {
    if (id == vocab.eos()) continue;
    out += vocab.symbol(id);
  }
  return out;
}

bool is_complete(const Vocab& vocab, const TokenSeq& seq) {
  return !seq.empty() && seq.back() == vocab.eos();
}

void validate_token_seq(const Vocab& vocab, const TokenSeq& seq) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    TokenId id = seq[i];
    if (id < 0 || id >= vocab.size()) {
      throw Error("token id " + std::to_string(id) + " out of range");
    }
    if (id == vocab.eos() && i + 1 != seq.size()) {
      throw Error("EOS may only appear as the final token");
    }
  }
}

}  // namespace steer
