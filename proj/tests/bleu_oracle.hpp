#ifndef BTFILTER_TESTS_BLEU_ORACLE_HPP
#define BTFILTER_TESTS_BLEU_ORACLE_HPP

// Reference BLEU used only as a test oracle. Deliberately written with a
// different structure from the library scorer: n-grams are kept as token
// slices and matched by marking reference positions, no hash maps, no
// shared code.

#include <cmath>
#include <string>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::string>;

inline bool same_gram(const Tokens& a, std::size_t ai, const Tokens& b, std::size_t bi, int n) {
  for (int k = 0; k < n; ++k)
    if (a[ai + k] != b[bi + k]) return false;
  return true;
}

// clipped match count by greedy pairing of hypothesis windows with unused
// reference windows
inline long clipped(const Tokens& hyp, const Tokens& ref, int n) {
  if (static_cast<int>(hyp.size()) < n || static_cast<int>(ref.size()) < n) return 0;
  std::vector<bool> used(ref.size() - n + 1, false);
  long matched = 0;
  for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
    for (std::size_t j = 0; j + n <= ref.size(); ++j) {
      if (!used[j] && same_gram(hyp, i, ref, j, n)) {
        used[j] = true;
        ++matched;
        break;
      }
    }
  }
  return matched;
}

// floor-0.1 smoothing for zero-match orders >= 2, effective order
// min(4, hyp_len), brevity penalty exp(1 - r/h) for short hypotheses
inline double sentence_bleu(const Tokens& hyp, const Tokens& ref) {
  if (hyp.empty() || ref.empty()) return 0.0;
  const int eff = std::min<int>(4, static_cast<int>(hyp.size()));
  double log_sum = 0.0;
  for (int n = 1; n <= eff; ++n) {
    const long total = static_cast<long>(hyp.size()) - n + 1;
    double num = static_cast<double>(clipped(hyp, ref, n));
    if (num == 0.0 && n >= 2) num = 0.1;
    const double p = num / static_cast<double>(total);
    if (p <= 0.0) return 0.0;
    log_sum += std::log(p);
  }
  double bp = 1.0;
  if (hyp.size() < ref.size())
    bp = std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(hyp.size()));
  return bp * std::exp(log_sum / eff);
}

// pooled corpus BLEU; the zero-match floor scales with the number of pairs
// contributing a denominator at that order
inline double corpus_bleu(const std::vector<std::pair<Tokens, Tokens>>& pairs) {
  long matched[4] = {0, 0, 0, 0};
  long total[4] = {0, 0, 0, 0};
  long contributors[4] = {0, 0, 0, 0};
  long hyp_len = 0, ref_len = 0, max_hyp = 0;
  for (const auto& [hyp, ref] : pairs) {
    hyp_len += static_cast<long>(hyp.size());
    ref_len += static_cast<long>(ref.size());
    max_hyp = std::max(max_hyp, static_cast<long>(hyp.size()));
    if (hyp.empty() || ref.empty()) continue;
    for (int n = 1; n <= 4 && n <= static_cast<int>(hyp.size()); ++n) {
      matched[n - 1] += clipped(hyp, ref, n);
      total[n - 1] += static_cast<long>(hyp.size()) - n + 1;
      ++contributors[n - 1];
    }
  }
  if (hyp_len == 0 || ref_len == 0) return 0.0;
  const int eff = std::min<long>(4, std::max<long>(1, max_hyp));
  double log_sum = 0.0;
  for (int n = 1; n <= eff; ++n) {
    double num = static_cast<double>(matched[n - 1]);
    if (matched[n - 1] == 0 && n >= 2 && total[n - 1] > 0)
      num = 0.1 * static_cast<double>(contributors[n - 1]);
    if (num <= 0.0 || total[n - 1] <= 0) return 0.0;
    log_sum += std::log(num / static_cast<double>(total[n - 1]));
  }
  double bp = 1.0;
  if (hyp_len < ref_len)
    bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return bp * std::exp(log_sum / eff);
}

}  // namespace oracle

#endif
