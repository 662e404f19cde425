#ifndef BTFILTER_TEXTNORM_HPP
#define BTFILTER_TEXTNORM_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace btf {

// A normalized, whitespace-tokenized sentence. The original surface form is
// kept so provenance and reporting never depend on the tokenizer.
struct TokenSeq {
  std::string surface;              // original line, newline-stripped
  std::vector<std::string> tokens;  // no whitespace, no empties

  std::size_t token_count() const { return tokens.size(); }

  // Normalized rendering: tokens joined by single spaces.
  std::string joined() const;

  bool operator==(const TokenSeq& other) const { return tokens == other.tokens; }
};

// NFC-normalize, drop zero-width/BOM characters, strip and collapse
// whitespace runs to single spaces. Total and idempotent.
std::string normalize(std::string_view line);

// normalize() then split on spaces. Empty input gives zero tokens.
TokenSeq tokenize(std::string_view line);

// A TokenSeq whose tokens are already known to be normalized and
// whitespace-free (used on translator output paths).
TokenSeq from_tokens(std::vector<std::string> tokens);

}  // namespace btf

#endif
