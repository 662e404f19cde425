#ifndef BTFILTER_FILTER_HPP
#define BTFILTER_FILTER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "btfilter/bleu.hpp"
#include "btfilter/corpus.hpp"
#include "btfilter/translate.hpp"

namespace btf {

// One sentence through the XX-EN-XX cycle. The score always compares the
// round trip (hypothesis) against the original (reference).
struct RoundTripRecord {
  std::int64_t line_no = 0;
  TokenSeq original;      // language XX
  TokenSeq intermediate;  // pivot EN
  TokenSeq roundtrip;     // back in XX
  BleuBreakdown score;
};

// Retention cutoff: mean sentence score plus a small offset, clamped to 1.
struct Threshold {
  double mean_score = 0.0;
  double delta = 0.0;
  double value = 0.0;
};

inline constexpr double kDefaultDelta = 0.02;

Threshold compute_threshold(const std::vector<double>& scores, double delta = kDefaultDelta);
Threshold threshold_from_mean(double mean_score, double delta);

struct FilterResult {
  ParallelCorpus retained;  // pairs (original XX, intermediate EN)
  std::int64_t rejected_count = 0;
  Threshold threshold;
  std::vector<double> scores;                // per scored sentence, input order
  std::vector<std::int64_t> original_lengths;  // original-XX token counts, same order
  double retention_rate = 0.0;
};

// Scores a monolingual corpus through forward/backward translators.
// Language codes are validated against mono.language.
std::vector<RoundTripRecord> roundtrip(const MonoCorpus& mono, const TranslatorSpec& fwd,
                                       const TranslatorSpec& bwd, int threads = 1);

// Retains records with score >= threshold.value, preserving input order.
FilterResult filter_corpus(const std::vector<RoundTripRecord>& records, const Threshold& threshold,
                           const std::string& src_language = "xx",
                           const std::string& tgt_language = "en",
                           const std::string& source_tag = "bt-filtered");

// ---- end-to-end pipeline ----

struct CorpusConfig {
  std::string path;
  std::string language;
  std::string source_tag = "mono";
  std::int64_t limit = 0;       // 0 = whole corpus
  bool random_subset = false;   // limit drawn with the seeded sampler instead of head-N
  bool strict_utf8 = false;
};

struct FilterConfig {
  double delta = kDefaultDelta;
  // "xx-en-xx" (default) or "en-xx-en"; the reversed scheme inverts both
  // translator legs so one config can drive the comparison study.
  std::string direction = "xx-en-xx";
  bool write_rejects = false;
};

struct OutputConfig {
  std::string dir = ".";
  std::string stem = "synthetic";
};

// Genuine parallel corpora framing the filtered-BT stage; referenced by the
// experiment manifest so the full three-phase run is auditable.
struct PhasesConfig {
  std::vector<std::string> pretrain_corpora;
  std::vector<std::string> posttrain_corpora;
};

struct PipelineConfig {
  CorpusConfig corpus;
  TranslatorSpec forward;
  TranslatorSpec backward;
  FilterConfig filter;
  OutputConfig output;
  PhasesConfig phases;
  std::uint64_t seed = 0;
  int threads = 1;

  static PipelineConfig from_json_file(const std::string& path);
  static PipelineConfig from_json_text(const std::string& text);
  std::string canonical_json() const;  // sorted keys, no volatile fields
  std::string config_hash() const;     // hex FNV-1a of canonical_json()
};

struct PipelineArtifacts {
  std::string src_path;     // <dir>/<stem>.<xx>
  std::string tgt_path;     // <dir>/<stem>.<en>
  std::string scores_path;  // TSV: line_no \t score (6 decimals)
  std::string report_json_path;
  std::string report_text_path;
  std::string manifest_path;
  std::string rejects_path;  // empty unless requested
};

// Two-pass run: pass 1 round-trips and scores every sentence, pass 2
// filters at the computed threshold and writes all artifacts.
FilterResult run_pipeline(const PipelineConfig& config, PipelineArtifacts* artifacts = nullptr);

struct ScoreSummary {
  std::int64_t count = 0;
  double mean = 0.0;
};

// Scoring-only pass: streams the corpus, writes the scores sidecar and keeps
// nothing per record, so memory stays flat regardless of corpus size.
ScoreSummary roundtrip_scores_streaming(const PipelineConfig& config,
                                        const std::string& scores_path);

}  // namespace btf

#endif
