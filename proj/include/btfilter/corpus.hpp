#ifndef BTFILTER_CORPUS_HPP
#define BTFILTER_CORPUS_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "btfilter/textnorm.hpp"

namespace btf {

struct CorpusStats {
  std::int64_t record_count = 0;
  std::int64_t dropped_empty = 0;
  std::int64_t dropped_invalid = 0;  // non-UTF-8 lines skipped in lenient mode
  std::int64_t dropped_dedup = 0;
  std::int64_t dropped_ratio = 0;
  std::map<std::int64_t, std::int64_t> token_count_histogram;
  std::map<std::string, std::int64_t> per_source_counts;

  std::int64_t raw_line_count() const {
    return record_count + dropped_empty + dropped_invalid + dropped_dedup + dropped_ratio;
  }
  std::string to_json() const;
};

struct MonoRecord {
  std::int64_t line_no = 0;  // 1-based line in the source file
  TokenSeq text;
};

struct MonoCorpus {
  std::string language;
  std::string source_tag;
  std::vector<MonoRecord> records;
  CorpusStats stats;
};

struct ParallelRecord {
  std::int64_t line_no = 0;
  TokenSeq src;
  TokenSeq tgt;
  std::string source_tag;
};

struct ParallelCorpus {
  std::string src_language;
  std::string tgt_language;
  std::vector<ParallelRecord> records;
  CorpusStats stats;
};

// Streams normalized non-empty lines of a UTF-8 line file without
// materializing the corpus. Invalid UTF-8 lines are skipped and counted
// (strict mode: DataError). Returns drop counters via `stats`.
void for_each_mono_record(const std::string& path, bool strict,
                          const std::function<void(std::int64_t line_no, TokenSeq)>& fn,
                          CorpusStats& stats);

MonoCorpus load_mono(const std::string& path, const std::string& language,
                     const std::string& source_tag, bool strict = false);

ParallelCorpus load_parallel(const std::string& src_path, const std::string& tgt_path,
                             const std::string& src_language, const std::string& tgt_language,
                             const std::string& source_tag, bool strict = false);

// 2-column TSV variant (tab separator, no quoting).
ParallelCorpus load_parallel_tsv(const std::string& path, const std::string& src_language,
                                 const std::string& tgt_language, const std::string& source_tag,
                                 bool strict = false);

// Exact dedup on normalized surface (mono) or the surface pair (parallel);
// first occurrence kept.
MonoCorpus dedup(const MonoCorpus& corpus);
ParallelCorpus dedup(const ParallelCorpus& corpus);

// Drops pairs whose token-length ratio exceeds max_ratio. Pass
// kRatioDisabled to keep everything.
inline constexpr double kRatioDisabled = 0.0;
ParallelCorpus length_ratio_filter(const ParallelCorpus& corpus, double max_ratio = 9.0);

// Concatenates same-language-pair corpora in argument order, then dedups
// across sources. Pre-dedup per-source counts returned via pre_counts.
ParallelCorpus collate(const std::vector<ParallelCorpus>& corpora,
                       std::map<std::string, std::int64_t>* pre_counts = nullptr);

// Recomputes record counts, the token-length histogram (src side for
// parallel corpora) and per-source counts; drop counters carry over.
CorpusStats stats(const MonoCorpus& corpus);
CorpusStats stats(const ParallelCorpus& corpus);

// Subset modes for drawing a working set from a large monolingual corpus.
MonoCorpus subset_head(const MonoCorpus& corpus, std::int64_t n);
MonoCorpus subset_random(const MonoCorpus& corpus, std::int64_t n, std::uint64_t seed);

bool valid_utf8(std::string_view s);

}  // namespace btf

#endif
