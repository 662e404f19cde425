#ifndef BTFILTER_REPORT_HPP
#define BTFILTER_REPORT_HPP

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "btfilter/filter.hpp"

namespace btf {

inline constexpr int kScoreHistogramBins = 20;
inline constexpr const char* kToolkitVersion = "0.1.0";

struct FilterReport {
  std::string language;
  std::int64_t pre_count = 0;
  std::int64_t post_count = 0;
  double retention_rate = 0.0;
  Threshold threshold;
  double mean_len_retained = 0.0;  // NaN when the partition is empty
  double mean_len_rejected = 0.0;
  double mean_len_all = 0.0;
  std::array<std::int64_t, kScoreHistogramBins> score_histogram{};  // equal-width bins over [0,1]

  std::string to_json() const;
  // Aligned-column rendering, including the published retention table for
  // side-by-side reference (clearly marked non-reproducible).
  std::string to_text() const;
};

FilterReport retention_report(const FilterResult& result, const std::string& language);

void write_report(const FilterReport& report, const std::string& json_path,
                  const std::string& text_path);

struct LengthBiasRow {
  double threshold = 0.0;
  double retention = 0.0;
  double mean_len_retained = 0.0;  // NaN when nothing is retained
};

// Re-filters the stored scores at each threshold; no re-translation.
std::vector<LengthBiasRow> length_bias_report(const FilterResult& result,
                                              const std::vector<double>& thresholds);

std::string length_bias_to_text(const std::vector<LengthBiasRow>& rows);

struct ManifestPhase {
  std::string name;  // pretrain | bt_filter | posttrain
  std::vector<std::string> inputs;
  std::map<std::string, std::string> params;
};

struct ExperimentManifest {
  std::vector<ManifestPhase> phases;  // exactly pretrain, bt_filter, posttrain in order
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string toolkit_version;
  std::string timestamp;  // RFC 3339; the one volatile field

  std::string to_json() const;
  static ExperimentManifest from_json(const std::string& text);
};

ExperimentManifest emit_manifest(const PipelineConfig& config, const FilterResult& result,
                                 const PipelineArtifacts& artifacts);

void write_manifest(const ExperimentManifest& manifest, const std::string& path);

}  // namespace btf

#endif
