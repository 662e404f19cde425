#include <doctest.h>

#include <cmath>
#include <random>

#include "btfilter/errors.hpp"
#include "btfilter/report.hpp"
#include "temp_files.hpp"

using namespace btf;

namespace {

// FilterResult built directly from score/length vectors; reports are pure
// functions of these fields.
FilterResult make_result(std::vector<double> scores, std::vector<std::int64_t> lengths,
                         double delta) {
  FilterResult res;
  res.scores = std::move(scores);
  res.original_lengths = std::move(lengths);
  res.threshold = compute_threshold(res.scores, delta);
  for (double s : res.scores)
    if (s >= res.threshold.value)
      ++res.retained.stats.record_count;
    else
      ++res.rejected_count;
  res.retention_rate = static_cast<double>(res.retained.stats.record_count) /
                       static_cast<double>(res.scores.size());
  return res;
}

}  // namespace

TEST_CASE("retention_report counts reconcile with the result") {
  // shaped like a 178-pre / 58-post run
  std::vector<double> scores;
  std::vector<std::int64_t> lengths;
  for (int i = 0; i < 178; ++i) {
    scores.push_back(i < 58 ? 0.9 : 0.1);
    lengths.push_back(5 + i % 7);
  }
  FilterResult res = make_result(scores, lengths, 0.02);
  FilterReport r = retention_report(res, "mr");
  CHECK(r.pre_count == 178);
  CHECK(r.post_count == 58);
  CHECK(r.retention_rate == doctest::Approx(58.0 / 178.0).epsilon(1e-6));
  std::int64_t mass = 0;
  for (std::int64_t b : r.score_histogram) mass += b;
  CHECK(mass == r.pre_count);
}

TEST_CASE("all-retained report marks mean_len_rejected as absent") {
  FilterResult res = make_result({1.0, 1.0, 1.0}, {4, 6, 8}, 0.02);
  FilterReport r = retention_report(res, "hi");
  CHECK(r.post_count == 3);
  CHECK(std::isnan(r.mean_len_rejected));
  CHECK(r.mean_len_retained == doctest::Approx(6.0));
  CHECK(r.to_json().find("\"mean_len_rejected\": null") != std::string::npos);
  CHECK(r.to_text().find("n/a") != std::string::npos);
}

TEST_CASE("uniform scores spread across histogram bins") {
  std::mt19937 gen(808);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> scores;
  std::vector<std::int64_t> lengths;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    scores.push_back(uni(gen));
    lengths.push_back(10);
  }
  FilterReport r = retention_report(make_result(scores, lengths, 0.02), "hi");
  const double expected = n / 20.0;
  const double sigma = std::sqrt(n * (1.0 / 20) * (19.0 / 20));
  for (std::int64_t b : r.score_histogram) {
    CHECK(b > expected - 3 * sigma);
    CHECK(b < expected + 3 * sigma);
  }
}

TEST_CASE("length_bias_report at threshold 0 retains everything") {
  FilterResult res = make_result({0.2, 0.6, 0.9}, {10, 20, 30}, 0.02);
  auto rows = length_bias_report(res, {0.0});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].retention == doctest::Approx(1.0));
  CHECK(rows[0].mean_len_retained == doctest::Approx(20.0));
}

TEST_CASE("length_bias_report retention is non-increasing in threshold") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> scores;
  std::vector<std::int64_t> lengths;
  for (int i = 0; i < 5000; ++i) {
    scores.push_back(uni(gen));
    lengths.push_back(3 + i % 38);
  }
  FilterResult res = make_result(scores, lengths, 0.02);
  auto rows = length_bias_report(res, {0.2, 0.4, 0.6});
  CHECK(rows[0].retention >= rows[1].retention);
  CHECK(rows[1].retention >= rows[2].retention);
  CHECK_THROWS_AS(length_bias_report(res, {1.5}), UsageError);
}

TEST_CASE("length_bias_report at the pipeline threshold reproduces the report") {
  FilterResult res = make_result({0.1, 0.5, 0.6, 0.95}, {4, 9, 13, 6}, 0.02);
  FilterReport report = retention_report(res, "hi");
  auto rows = length_bias_report(res, {res.threshold.value});
  CHECK(rows[0].retention == doctest::Approx(report.retention_rate).epsilon(1e-12));
  CHECK(rows[0].mean_len_retained == doctest::Approx(report.mean_len_retained).epsilon(1e-12));
}

namespace {

PipelineConfig tiny_config() {
  PipelineConfig c;
  c.corpus.path = "mono.hi";
  c.corpus.language = "hi";
  c.forward.src_lang = "hi";
  c.forward.tgt_lang = "en";
  c.backward.src_lang = "en";
  c.backward.tgt_lang = "hi";
  c.phases.pretrain_corpora = {"pre.hi", "pre.en"};
  c.phases.posttrain_corpora = {"post.hi", "post.en"};
  c.seed = 99;
  return c;
}

}  // namespace

TEST_CASE("manifest has the three phases in fixed order") {
  FilterResult res = make_result({0.5, 0.7}, {3, 4}, 0.02);
  PipelineArtifacts art;
  art.src_path = "out/synth.hi";
  art.tgt_path = "out/synth.en";
  art.scores_path = "out/synth.scores.tsv";
  ExperimentManifest m = emit_manifest(tiny_config(), res, art);
  REQUIRE(m.phases.size() == 3);
  CHECK(m.phases[0].name == "pretrain");
  CHECK(m.phases[1].name == "bt_filter");
  CHECK(m.phases[2].name == "posttrain");
  CHECK(m.phases[1].params.at("synthetic_src") == "out/synth.hi");
  CHECK(m.phases[1].params.at("threshold") == "0.620000");
  CHECK(m.seed == 99);
}

TEST_CASE("identical config and seed give identical manifests modulo timestamp") {
  FilterResult res = make_result({0.5, 0.7}, {3, 4}, 0.02);
  PipelineArtifacts art;
  art.src_path = "o.hi";
  ExperimentManifest a = emit_manifest(tiny_config(), res, art);
  ExperimentManifest b = emit_manifest(tiny_config(), res, art);
  b.timestamp = a.timestamp;
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("manifest round-trips through parse and emit unchanged") {
  FilterResult res = make_result({0.4, 0.9, 0.6}, {5, 5, 5}, 0.02);
  PipelineArtifacts art;
  art.src_path = "rt.hi";
  art.tgt_path = "rt.en";
  art.scores_path = "rt.scores.tsv";
  const ExperimentManifest m = emit_manifest(tiny_config(), res, art);
  const std::string json_text = m.to_json();
  CHECK(ExperimentManifest::from_json(json_text).to_json() == json_text);
  CHECK_THROWS_AS(ExperimentManifest::from_json("{}"), DataError);
  CHECK_THROWS_AS(ExperimentManifest::from_json("not json"), DataError);
}

TEST_CASE("config hash is stable and thread-count independent") {
  PipelineConfig a = tiny_config();
  PipelineConfig b = tiny_config();
  b.threads = 16;
  CHECK(a.config_hash() == b.config_hash());
  b.seed = 100;
  CHECK(a.config_hash() != b.config_hash());
}

TEST_CASE("retention_report rejects an empty result") {
  FilterResult empty;
  CHECK_THROWS_AS(retention_report(empty, "hi"), UsageError);
}

TEST_CASE("report text includes the published reference table") {
  FilterResult res = make_result({0.5}, {4}, 0.02);
  const std::string text = retention_report(res, "hi").to_text();
  CHECK(text.find("reference only") != std::string::npos);
  CHECK(text.find("140K") != std::string::npos);
}
