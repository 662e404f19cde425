#include "btfilter/bleu.hpp"

#include <algorithm>
#include <cmath>

#include "btfilter/errors.hpp"

namespace btf {

namespace {

std::int64_t clipped_matches(const TokenSeq& hyp, const TokenSeq& ref, int n) {
  auto hyp_counts = ngram_counts(hyp, n);
  auto ref_counts = ngram_counts(ref, n);
  std::int64_t matched = 0;
  for (const auto& [gram, count] : hyp_counts) {
    auto it = ref_counts.find(gram);
    if (it != ref_counts.end()) matched += std::min(count, it->second);
  }
  return matched;
}

double brevity_penalty(std::int64_t hyp_len, std::int64_t ref_len) {
  if (hyp_len >= ref_len) return 1.0;
  return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
}

double compose(const std::array<Precision, kMaxBleuOrder>& precisions,
               int effective_order, double bp) {
  double log_sum = 0.0;
  for (int n = 0; n < effective_order; ++n) {
    double p = precisions[n].value();
    if (p <= 0.0) return 0.0;
    log_sum += std::log(p);
  }
  return bp * std::exp(log_sum / effective_order);
}

}  // namespace

std::unordered_map<std::string, std::int64_t> ngram_counts(const TokenSeq& seq, int n) {
  if (n < 1 || n > kMaxBleuOrder)
    throw UsageError("ngram order must be in [1,4], got " + std::to_string(n));
  std::unordered_map<std::string, std::int64_t> counts;
  const auto& toks = seq.tokens;
  if (static_cast<int>(toks.size()) < n) return counts;
  std::string key;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    key.clear();
    for (int j = 0; j < n; ++j) {
      if (j) key += ' ';
      key += toks[i + j];
    }
    ++counts[key];
  }
  return counts;
}

BleuBreakdown sentence_bleu(const TokenSeq& hypothesis, const TokenSeq& reference) {
  BleuBreakdown b;
  b.hyp_len = static_cast<std::int64_t>(hypothesis.token_count());
  b.ref_len = static_cast<std::int64_t>(reference.token_count());
  if (b.hyp_len == 0 || b.ref_len == 0) {
    b.effective_order = 1;
    b.brevity_penalty = 1.0;
    b.score = 0.0;
    return b;
  }
  b.effective_order = static_cast<int>(std::min<std::int64_t>(kMaxBleuOrder, b.hyp_len));
  for (int n = 1; n <= b.effective_order; ++n) {
    std::int64_t total = b.hyp_len - n + 1;
    std::int64_t matched = clipped_matches(hypothesis, reference, n);
    double num = static_cast<double>(matched);
    if (matched == 0 && n >= 2) num = 0.1;  // zero-match floor
    b.precisions[n - 1] = Precision{num, total};
  }
  b.brevity_penalty = brevity_penalty(b.hyp_len, b.ref_len);
  b.score = compose(b.precisions, b.effective_order, b.brevity_penalty);
  return b;
}

BleuBreakdown corpus_bleu(const std::vector<std::pair<TokenSeq, TokenSeq>>& pairs) {
  if (pairs.empty()) throw UsageError("corpus_bleu: empty pair list");
  BleuBreakdown b;
  std::array<std::int64_t, kMaxBleuOrder> matched{};
  std::array<std::int64_t, kMaxBleuOrder> total{};
  // Pairs contributing a nonzero denominator at each order; sets the scale
  // of the zero-match floor so pooling duplicates preserves ratios.
  std::array<std::int64_t, kMaxBleuOrder> contributors{};
  std::int64_t max_hyp_len = 0;
  for (const auto& [hyp, ref] : pairs) {
    auto hyp_len = static_cast<std::int64_t>(hyp.token_count());
    auto ref_len = static_cast<std::int64_t>(ref.token_count());
    b.hyp_len += hyp_len;
    b.ref_len += ref_len;
    max_hyp_len = std::max(max_hyp_len, hyp_len);
    if (hyp_len == 0 || ref_len == 0) continue;
    for (int n = 1; n <= kMaxBleuOrder && n <= hyp_len; ++n) {
      matched[n - 1] += clipped_matches(hyp, ref, n);
      total[n - 1] += hyp_len - n + 1;
      ++contributors[n - 1];
    }
  }
  b.effective_order =
      static_cast<int>(std::min<std::int64_t>(kMaxBleuOrder, std::max<std::int64_t>(1, max_hyp_len)));
  for (int n = 1; n <= b.effective_order; ++n) {
    double num = static_cast<double>(matched[n - 1]);
    if (matched[n - 1] == 0 && n >= 2 && total[n - 1] > 0)
      num = 0.1 * static_cast<double>(contributors[n - 1]);
    b.precisions[n - 1] = Precision{num, total[n - 1]};
  }
  if (b.hyp_len == 0 || b.ref_len == 0) {
    b.effective_order = 1;
    b.brevity_penalty = 1.0;
    b.score = 0.0;
    return b;
  }
  b.brevity_penalty = brevity_penalty(b.hyp_len, b.ref_len);
  b.score = compose(b.precisions, b.effective_order, b.brevity_penalty);
  return b;
}

}  // namespace btf
