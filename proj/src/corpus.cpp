#include "btfilter/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include <json.hpp>

#include "btfilter/errors.hpp"
#include "btfilter/rng.hpp"

namespace btf {

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    int len;
    unsigned cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (int j = 1; j < len; ++j) {
      unsigned char cc = static_cast<unsigned char>(s[i + j]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlongs, surrogates, out of range
    if (len == 2 && cp < 0x80) return false;
    if (len == 3 && cp < 0x800) return false;
    if (len == 4 && cp < 0x10000) return false;
    if (cp >= 0xD800 && cp <= 0xDFFF) return false;
    if (cp > 0x10FFFF) return false;
    i += len;
  }
  return true;
}

namespace {

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  return in;
}

void chomp(std::string& line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
}

void accumulate_mono(CorpusStats& st, const MonoRecord& rec, const std::string& source_tag) {
  ++st.record_count;
  ++st.token_count_histogram[static_cast<std::int64_t>(rec.text.token_count())];
  ++st.per_source_counts[source_tag];
}

}  // namespace

void for_each_mono_record(const std::string& path, bool strict,
                          const std::function<void(std::int64_t, TokenSeq)>& fn,
                          CorpusStats& stats) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (!valid_utf8(line)) {
      if (strict) throw DataError(path + ":" + std::to_string(line_no) + ": invalid UTF-8");
      ++stats.dropped_invalid;
      continue;
    }
    TokenSeq seq = tokenize(line);
    if (seq.token_count() == 0) {
      ++stats.dropped_empty;
      continue;
    }
    fn(line_no, std::move(seq));
  }
}

MonoCorpus load_mono(const std::string& path, const std::string& language,
                     const std::string& source_tag, bool strict) {
  MonoCorpus corpus;
  corpus.language = language;
  corpus.source_tag = source_tag;
  for_each_mono_record(
      path, strict,
      [&](std::int64_t line_no, TokenSeq seq) {
        MonoRecord rec{line_no, std::move(seq)};
        accumulate_mono(corpus.stats, rec, source_tag);
        corpus.records.push_back(std::move(rec));
      },
      corpus.stats);
  return corpus;
}

namespace {

ParallelCorpus zip_lines(std::vector<std::string> src_lines, std::vector<std::string> tgt_lines,
                         const std::string& src_language, const std::string& tgt_language,
                         const std::string& source_tag, bool strict, const std::string& origin) {
  if (src_lines.size() != tgt_lines.size())
    throw DataError(origin + ": line counts differ (" + std::to_string(src_lines.size()) + ", " +
                    std::to_string(tgt_lines.size()) + ")");
  if (src_language == tgt_language)
    throw UsageError("parallel corpus requires distinct languages, got " + src_language + "/" +
                     tgt_language);
  ParallelCorpus corpus;
  corpus.src_language = src_language;
  corpus.tgt_language = tgt_language;
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    std::int64_t line_no = static_cast<std::int64_t>(i) + 1;
    if (!valid_utf8(src_lines[i]) || !valid_utf8(tgt_lines[i])) {
      if (strict) throw DataError(origin + ":" + std::to_string(line_no) + ": invalid UTF-8");
      ++corpus.stats.dropped_invalid;
      continue;
    }
    ParallelRecord rec{line_no, tokenize(src_lines[i]), tokenize(tgt_lines[i]), source_tag};
    if (rec.src.token_count() == 0 || rec.tgt.token_count() == 0) {
      ++corpus.stats.dropped_empty;
      continue;
    }
    ++corpus.stats.record_count;
    ++corpus.stats.token_count_histogram[static_cast<std::int64_t>(rec.src.token_count())];
    ++corpus.stats.per_source_counts[source_tag];
    corpus.records.push_back(std::move(rec));
  }
  return corpus;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    chomp(line);
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

ParallelCorpus load_parallel(const std::string& src_path, const std::string& tgt_path,
                             const std::string& src_language, const std::string& tgt_language,
                             const std::string& source_tag, bool strict) {
  return zip_lines(read_lines(src_path), read_lines(tgt_path), src_language, tgt_language,
                   source_tag, strict, src_path + "+" + tgt_path);
}

ParallelCorpus load_parallel_tsv(const std::string& path, const std::string& src_language,
                                 const std::string& tgt_language, const std::string& source_tag,
                                 bool strict) {
  std::vector<std::string> src_lines, tgt_lines;
  std::int64_t line_no = 0;
  for (std::string& line : read_lines(path)) {
    ++line_no;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 2 tab-separated columns");
    src_lines.push_back(line.substr(0, tab));
    tgt_lines.push_back(line.substr(tab + 1));
  }
  return zip_lines(std::move(src_lines), std::move(tgt_lines), src_language, tgt_language,
                   source_tag, strict, path);
}

MonoCorpus dedup(const MonoCorpus& corpus) {
  MonoCorpus out;
  out.language = corpus.language;
  out.source_tag = corpus.source_tag;
  out.stats = corpus.stats;
  out.stats.record_count = 0;
  out.stats.token_count_histogram.clear();
  out.stats.per_source_counts.clear();
  std::unordered_set<std::string> seen;
  for (const MonoRecord& rec : corpus.records) {
    if (!seen.insert(rec.text.joined()).second) {
      ++out.stats.dropped_dedup;
      continue;
    }
    accumulate_mono(out.stats, rec, out.source_tag);
    out.records.push_back(rec);
  }
  return out;
}

ParallelCorpus dedup(const ParallelCorpus& corpus) {
  ParallelCorpus out;
  out.src_language = corpus.src_language;
  out.tgt_language = corpus.tgt_language;
  out.stats = corpus.stats;
  out.stats.record_count = 0;
  out.stats.token_count_histogram.clear();
  out.stats.per_source_counts.clear();
  std::unordered_set<std::string> seen;
  for (const ParallelRecord& rec : corpus.records) {
    // '\n' never survives normalization, so it is a safe pair separator
    if (!seen.insert(rec.src.joined() + "\n" + rec.tgt.joined()).second) {
      ++out.stats.dropped_dedup;
      continue;
    }
    ++out.stats.record_count;
    ++out.stats.token_count_histogram[static_cast<std::int64_t>(rec.src.token_count())];
    ++out.stats.per_source_counts[rec.source_tag];
    out.records.push_back(rec);
  }
  return out;
}

ParallelCorpus length_ratio_filter(const ParallelCorpus& corpus, double max_ratio) {
  if (max_ratio == kRatioDisabled) return corpus;
  if (max_ratio < 1.0) throw UsageError("length ratio bound must be >= 1");
  ParallelCorpus out;
  out.src_language = corpus.src_language;
  out.tgt_language = corpus.tgt_language;
  out.stats = corpus.stats;
  out.stats.record_count = 0;
  out.stats.token_count_histogram.clear();
  out.stats.per_source_counts.clear();
  for (const ParallelRecord& rec : corpus.records) {
    double a = static_cast<double>(rec.src.token_count());
    double b = static_cast<double>(rec.tgt.token_count());
    if (std::max(a, b) / std::min(a, b) > max_ratio) {
      ++out.stats.dropped_ratio;
      continue;
    }
    ++out.stats.record_count;
    ++out.stats.token_count_histogram[static_cast<std::int64_t>(rec.src.token_count())];
    ++out.stats.per_source_counts[rec.source_tag];
    out.records.push_back(rec);
  }
  return out;
}

ParallelCorpus collate(const std::vector<ParallelCorpus>& corpora,
                       std::map<std::string, std::int64_t>* pre_counts) {
  if (corpora.empty()) throw UsageError("collate: no input corpora");
  ParallelCorpus merged;
  merged.src_language = corpora.front().src_language;
  merged.tgt_language = corpora.front().tgt_language;
  for (const ParallelCorpus& c : corpora) {
    if (c.src_language != merged.src_language || c.tgt_language != merged.tgt_language)
      throw UsageError("collate: language pair mismatch (" + c.src_language + "-" +
                       c.tgt_language + " vs " + merged.src_language + "-" +
                       merged.tgt_language + ")");
    for (const ParallelRecord& rec : c.records) {
      if (pre_counts) ++(*pre_counts)[rec.source_tag];
      merged.records.push_back(rec);
      ++merged.stats.record_count;
      ++merged.stats.token_count_histogram[static_cast<std::int64_t>(rec.src.token_count())];
      ++merged.stats.per_source_counts[rec.source_tag];
    }
    merged.stats.dropped_empty += c.stats.dropped_empty;
    merged.stats.dropped_invalid += c.stats.dropped_invalid;
    merged.stats.dropped_ratio += c.stats.dropped_ratio;
    merged.stats.dropped_dedup += c.stats.dropped_dedup;
  }
  return dedup(merged);
}

CorpusStats stats(const MonoCorpus& corpus) {
  CorpusStats st = corpus.stats;
  st.record_count = 0;
  st.token_count_histogram.clear();
  st.per_source_counts.clear();
  for (const MonoRecord& rec : corpus.records) accumulate_mono(st, rec, corpus.source_tag);
  return st;
}

CorpusStats stats(const ParallelCorpus& corpus) {
  CorpusStats st = corpus.stats;
  st.record_count = 0;
  st.token_count_histogram.clear();
  st.per_source_counts.clear();
  for (const ParallelRecord& rec : corpus.records) {
    ++st.record_count;
    ++st.token_count_histogram[static_cast<std::int64_t>(rec.src.token_count())];
    ++st.per_source_counts[rec.source_tag];
  }
  return st;
}

MonoCorpus subset_head(const MonoCorpus& corpus, std::int64_t n) {
  MonoCorpus out;
  out.language = corpus.language;
  out.source_tag = corpus.source_tag;
  for (const MonoRecord& rec : corpus.records) {
    if (static_cast<std::int64_t>(out.records.size()) >= n) break;
    out.records.push_back(rec);
  }
  out.stats = stats(out);
  return out;
}

MonoCorpus subset_random(const MonoCorpus& corpus, std::int64_t n, std::uint64_t seed) {
  const std::int64_t total = static_cast<std::int64_t>(corpus.records.size());
  if (n >= total) return corpus;
  // order-preserving reservoir-free draw: rank records by a per-index hash
  std::vector<std::int64_t> idx(corpus.records.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::nth_element(idx.begin(), idx.begin() + n, idx.end(),
                   [&](std::int64_t a, std::int64_t b) {
                     return rng::key(seed, a, 0, 7) < rng::key(seed, b, 0, 7);
                   });
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  MonoCorpus out;
  out.language = corpus.language;
  out.source_tag = corpus.source_tag;
  for (std::int64_t i : idx) out.records.push_back(corpus.records[i]);
  out.stats = stats(out);
  return out;
}

std::string CorpusStats::to_json() const {
  nlohmann::json j;
  j["record_count"] = record_count;
  j["dropped_empty"] = dropped_empty;
  j["dropped_invalid"] = dropped_invalid;
  j["dropped_dedup"] = dropped_dedup;
  j["dropped_ratio"] = dropped_ratio;
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [len, count] : token_count_histogram) hist[std::to_string(len)] = count;
  j["token_count_histogram"] = hist;
  j["per_source_counts"] = per_source_counts;
  return j.dump(2);
}

}  // namespace btf
