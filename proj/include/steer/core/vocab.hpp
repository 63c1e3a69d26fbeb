#pragma once

/**
 * Vocabularies and token sequences.
 *
 * A Vocab is an ordered list of distinct symbol strings plus a designated
 * end-of-sequence entry. Token sequences index into one Vocab; a sequence
 * is "complete" iff its final (and only) EOS sits at the end.
 *
 * Text <-> token conversion is greedy longest-match over the symbol table,
 * which keeps decode(encode(t)) == t for any tokenizable t. The EOS symbol
 * never participates in matching and decodes to the empty string.
 */

#include <string>
#include <string_view>
#include <vector>

#include "steer/core/errors.hpp"

namespace steer {

using TokenId = int;
using TokenSeq = std::vector<TokenId>;

class Vocab {
 public:
  /// `symbols` must be distinct; only the EOS entry may be empty.
  Vocab(std::vector<std::string> symbols, TokenId eos_id);

  int size() const { return static_cast<int>(symbols_.size()); }
  TokenId eos() const { return eos_id_; }
  const std::string& symbol(TokenId id) const { return symbols_.at(id); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  bool operator==(const Vocab& other) const = default;

 private:
  std::vector<std::string> symbols_;
  TokenId eos_id_;
};

/// Greedy longest-match segmentation (ties to the longer symbol; the EOS
/// symbol never matches). Throws UntokenizableText with the first offset
/// where no symbol applies.
TokenSeq encode(const Vocab& vocab, std::string_view text);

/// Concatenation of symbols; EOS contributes nothing.
std::string decode(const Vocab& vocab, const TokenSeq& seq);

/// True iff the sequence ends in EOS (EOS anywhere else is invalid).
bool is_complete(const Vocab& vocab, const TokenSeq& seq);

/// Checks the TokenSeq invariants: ids in range, EOS at most once and final.
void validate_token_seq(const Vocab& vocab, const TokenSeq& seq);

}  // namespace steer
