#include "btfilter/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "btfilter/errors.hpp"

namespace btf {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Published retention counts from the experiments this toolkit models;
// shown for orientation only, they need the real models to reproduce.
struct ReferenceRow {
  const char* language;
  const char* pre;
  const char* post;
};
constexpr ReferenceRow kReferenceRetention[] = {
    {"hi", "4M", "140K"}, {"pa", "58K", "7K"},   {"mr", "178K", "58K"}, {"gu", "370K", "39K"},
    {"ta", "88K", "34K"}, {"ur", "400K", "105K"}, {"ml", "178K", "52K"}, {"od", "221K", "64K"},
};

std::string fmt(double v, int decimals = 4) {
  if (std::isnan(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

json number_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

double mean_or_nan(double sum, std::int64_t count) {
  return count > 0 ? sum / static_cast<double>(count) : kNaN;
}

int score_bin(double score) {
  int bin = static_cast<int>(score * kScoreHistogramBins);
  if (bin < 0) bin = 0;
  if (bin >= kScoreHistogramBins) bin = kScoreHistogramBins - 1;
  return bin;
}

std::string now_rfc3339() {
  using namespace std::chrono;
  const std::time_t t = system_clock::to_time_t(system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

FilterReport retention_report(const FilterResult& result, const std::string& language) {
  if (result.scores.empty()) throw UsageError("retention_report: result covers no sentences");
  FilterReport r;
  r.language = language;
  r.pre_count = static_cast<std::int64_t>(result.scores.size());
  r.post_count = result.retained.stats.record_count;
  r.retention_rate = static_cast<double>(r.post_count) / static_cast<double>(r.pre_count);
  r.threshold = result.threshold;

  double len_sum_all = 0.0, len_sum_ret = 0.0;
  std::int64_t n_ret = 0;
  for (std::size_t i = 0; i < result.scores.size(); ++i) {
    const double len = static_cast<double>(result.original_lengths[i]);
    len_sum_all += len;
    ++r.score_histogram[score_bin(result.scores[i])];
    if (result.scores[i] >= result.threshold.value) {
      len_sum_ret += len;
      ++n_ret;
    }
  }
  r.mean_len_all = len_sum_all / static_cast<double>(r.pre_count);
  r.mean_len_retained = mean_or_nan(len_sum_ret, n_ret);
  r.mean_len_rejected = mean_or_nan(len_sum_all - len_sum_ret, r.pre_count - n_ret);
  return r;
}

std::string FilterReport::to_json() const {
  json j;
  j["language"] = language;
  j["pre_count"] = pre_count;
  j["post_count"] = post_count;
  j["retention_rate"] = retention_rate;
  j["threshold"] = {{"mean_score", threshold.mean_score},
                    {"delta", threshold.delta},
                    {"value", threshold.value}};
  j["mean_len_retained"] = number_or_null(mean_len_retained);
  j["mean_len_rejected"] = number_or_null(mean_len_rejected);
  j["mean_len_all"] = mean_len_all;
  j["score_histogram"] = score_histogram;
  j["scoring"] = "sentence-bleu, whitespace tokens, order min(4,hyp_len), 0.1 zero-match floor";
  return j.dump(2);
}

std::string FilterReport::to_text() const {
  char buf[256];
  std::string out;
  out += "Back-translation filter report (" + language + ")\n";
  out += "------------------------------------------\n";
  std::snprintf(buf, sizeof(buf), "%-22s %12lld\n", "sentences scored",
                static_cast<long long>(pre_count));
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-22s %12lld\n", "sentences retained",
                static_cast<long long>(post_count));
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-22s %12s\n", "retention rate", fmt(retention_rate).c_str());
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-22s %12s  (mean %s + delta %s)\n", "threshold",
                fmt(threshold.value, 6).c_str(), fmt(threshold.mean_score, 6).c_str(),
                fmt(threshold.delta, 6).c_str());
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-22s %12s\n", "mean length (all)", fmt(mean_len_all, 2).c_str());
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-22s %12s\n", "mean length (retained)",
                fmt(mean_len_retained, 2).c_str());
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-22s %12s\n", "mean length (rejected)",
                fmt(mean_len_rejected, 2).c_str());
  out += buf;
  out += "score histogram (20 bins over [0,1]):\n";
  for (int b = 0; b < kScoreHistogramBins; ++b) {
    std::snprintf(buf, sizeof(buf), "  [%4.2f,%4.2f%c %10lld\n",
                  b / static_cast<double>(kScoreHistogramBins),
                  (b + 1) / static_cast<double>(kScoreHistogramBins),
                  b == kScoreHistogramBins - 1 ? ']' : ')',
                  static_cast<long long>(score_histogram[b]));
    out += buf;
  }
  out += "\nPublished retention counts, for reference only (not reproducible\n";
  out += "without the original models and corpora):\n";
  std::snprintf(buf, sizeof(buf), "  %-4s %10s %10s\n", "lang", "pre-filt", "post-filt");
  out += buf;
  for (const ReferenceRow& row : kReferenceRetention) {
    std::snprintf(buf, sizeof(buf), "  %-4s %10s %10s\n", row.language, row.pre, row.post);
    out += buf;
  }
  return out;
}

void write_report(const FilterReport& report, const std::string& json_path,
                  const std::string& text_path) {
  std::ofstream jf(json_path);
  std::ofstream tf(text_path);
  if (!jf || !tf) throw DataError("cannot write report to " + json_path + " / " + text_path);
  jf << report.to_json() << '\n';
  tf << report.to_text();
}

std::vector<LengthBiasRow> length_bias_report(const FilterResult& result,
                                              const std::vector<double>& thresholds) {
  for (double t : thresholds)
    if (t < 0.0 || t > 1.0) throw UsageError("length_bias_report: threshold outside [0,1]");
  std::vector<LengthBiasRow> rows;
  const std::size_t total = result.scores.size();
  for (double t : thresholds) {
    LengthBiasRow row;
    row.threshold = t;
    double len_sum = 0.0;
    std::int64_t kept = 0;
    for (std::size_t i = 0; i < total; ++i) {
      if (result.scores[i] >= t) {
        len_sum += static_cast<double>(result.original_lengths[i]);
        ++kept;
      }
    }
    row.retention = total > 0 ? static_cast<double>(kept) / static_cast<double>(total) : 0.0;
    row.mean_len_retained = mean_or_nan(len_sum, kept);
    rows.push_back(row);
  }
  return rows;
}

std::string length_bias_to_text(const std::vector<LengthBiasRow>& rows) {
  char buf[128];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%10s %10s %18s\n", "threshold", "retention", "mean_len_retained");
  out += buf;
  for (const LengthBiasRow& row : rows) {
    std::snprintf(buf, sizeof(buf), "%10s %10s %18s\n", fmt(row.threshold, 4).c_str(),
                  fmt(row.retention, 4).c_str(), fmt(row.mean_len_retained, 2).c_str());
    out += buf;
  }
  return out;
}

// ---- manifest ----

ExperimentManifest emit_manifest(const PipelineConfig& config, const FilterResult& result,
                                 const PipelineArtifacts& artifacts) {
  ExperimentManifest m;
  m.config_hash = config.config_hash();
  m.seed = config.seed;
  m.toolkit_version = kToolkitVersion;
  m.timestamp = now_rfc3339();

  ManifestPhase pre;
  pre.name = "pretrain";
  pre.inputs = config.phases.pretrain_corpora;
  m.phases.push_back(std::move(pre));

  ManifestPhase bt;
  bt.name = "bt_filter";
  bt.inputs = {config.corpus.path};
  bt.params["language"] = config.corpus.language;
  bt.params["direction"] = config.filter.direction;
  bt.params["delta"] = fmt(config.filter.delta, 6);
  bt.params["threshold"] = fmt(result.threshold.value, 6);
  bt.params["mean_score"] = fmt(result.threshold.mean_score, 6);
  bt.params["retention_rate"] = fmt(result.retention_rate, 6);
  bt.params["forward_backend"] = backend_to_string(config.forward.backend);
  bt.params["backward_backend"] = backend_to_string(config.backward.backend);
  bt.params["synthetic_src"] = artifacts.src_path;
  bt.params["synthetic_tgt"] = artifacts.tgt_path;
  bt.params["scores"] = artifacts.scores_path;
  m.phases.push_back(std::move(bt));

  ManifestPhase post;
  post.name = "posttrain";
  post.inputs = config.phases.posttrain_corpora;
  m.phases.push_back(std::move(post));
  return m;
}

std::string ExperimentManifest::to_json() const {
  json j;
  j["phases"] = json::array();
  for (const ManifestPhase& p : phases) {
    json jp;
    jp["name"] = p.name;
    jp["inputs"] = p.inputs;
    jp["params"] = p.params;
    j["phases"].push_back(std::move(jp));
  }
  j["provenance"] = {{"config_hash", config_hash},
                     {"seed", seed},
                     {"toolkit_version", toolkit_version}};
  j["timestamp"] = timestamp;
  return j.dump(2);
}

ExperimentManifest ExperimentManifest::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.contains("phases") || !j["phases"].is_array())
    throw DataError("manifest: invalid JSON");
  ExperimentManifest m;
  for (const json& jp : j["phases"]) {
    ManifestPhase p;
    p.name = jp.value("name", "");
    p.inputs = jp.value("inputs", std::vector<std::string>{});
    if (jp.contains("params"))
      for (const auto& [k, v] : jp["params"].items()) p.params[k] = v.get<std::string>();
    m.phases.push_back(std::move(p));
  }
  const json prov = j.value("provenance", json::object());
  m.config_hash = prov.value("config_hash", "");
  m.seed = prov.value("seed", std::uint64_t{0});
  m.toolkit_version = prov.value("toolkit_version", "");
  m.timestamp = j.value("timestamp", "");
  if (m.phases.size() != 3 || m.phases[0].name != "pretrain" || m.phases[1].name != "bt_filter" ||
      m.phases[2].name != "posttrain")
    throw DataError("manifest: expected phases pretrain, bt_filter, posttrain in order");
  return m;
}

void write_manifest(const ExperimentManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << manifest.to_json() << '\n';
}

}  // namespace btf
