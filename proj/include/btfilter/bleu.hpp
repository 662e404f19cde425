#ifndef BTFILTER_BLEU_HPP
#define BTFILTER_BLEU_HPP

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "btfilter/textnorm.hpp"

namespace btf {

inline constexpr int kMaxBleuOrder = 4;

// One n-gram precision as a fraction. The numerator is fractional because
// zero-match orders >= 2 are floored at 0.1 (denominator untouched).
struct Precision {
  double matched = 0.0;
  std::int64_t total = 0;

  double value() const { return total > 0 ? matched / static_cast<double>(total) : 0.0; }
};

struct BleuBreakdown {
  std::array<Precision, kMaxBleuOrder> precisions{};
  int effective_order = 1;
  double brevity_penalty = 1.0;
  double score = 0.0;
  std::int64_t hyp_len = 0;
  std::int64_t ref_len = 0;
};

// Contiguous n-token windows with multiplicity. Tokens never contain
// whitespace, so a space-joined key is unambiguous.
std::unordered_map<std::string, std::int64_t> ngram_counts(const TokenSeq& seq, int n);

// Smoothed sentence-level BLEU: clipped precisions up to order
// min(4, hyp_len), 0.1 numerator floor for zero-match orders >= 2,
// brevity penalty exp(1 - ref_len/hyp_len) when the hypothesis is shorter.
// Either side empty scores 0.
BleuBreakdown sentence_bleu(const TokenSeq& hypothesis, const TokenSeq& reference);

// Aggregate BLEU with precisions pooled over all pairs and the brevity
// penalty taken from summed lengths.
BleuBreakdown corpus_bleu(const std::vector<std::pair<TokenSeq, TokenSeq>>& pairs);

}  // namespace btf

#endif
