#include "btfilter/filter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "btfilter/errors.hpp"
#include "btfilter/report.hpp"
#include "btfilter/rng.hpp"

namespace btf {

namespace {

using nlohmann::json;

std::string format_score(double score) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", score);
  return buf;
}

}  // namespace

Threshold threshold_from_mean(double mean_score, double delta) {
  if (delta < 0.0) throw UsageError("threshold delta must be >= 0");
  Threshold t;
  t.mean_score = mean_score;
  t.delta = delta;
  t.value = std::min(mean_score + delta, 1.0);
  return t;
}

Threshold compute_threshold(const std::vector<double>& scores, double delta) {
  if (scores.empty()) throw UsageError("compute_threshold: no scores");
  double sum = 0.0;
  for (double s : scores) sum += s;
  return threshold_from_mean(sum / static_cast<double>(scores.size()), delta);
}

namespace {

struct Scored {
  std::int64_t line_no;
  TokenSeq original;
  TokenSeq intermediate;
  TokenSeq roundtrip;
  BleuBreakdown score;
};

// Scores one contiguous chunk; global_first keys the counter RNG so the
// result does not depend on chunking or thread count.
void score_chunk(Translator& fwd, Translator& bwd, std::vector<Scored>& chunk,
                 std::int64_t global_first, int threads) {
  const std::size_t n = chunk.size();
  if (n == 0) return;
  const std::size_t workers = std::max<std::size_t>(
      1, std::min<std::size_t>(static_cast<std::size_t>(threads), n));

  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<TokenSeq> inputs;
    inputs.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) inputs.push_back(chunk[i].original);
    std::vector<TokenSeq> mid = fwd.translate(inputs, global_first + begin);
    std::vector<TokenSeq> back = bwd.translate(mid, global_first + begin);
    for (std::size_t i = begin; i < end; ++i) {
      chunk[i].intermediate = std::move(mid[i - begin]);
      chunk[i].roundtrip = std::move(back[i - begin]);
      chunk[i].score = sentence_bleu(chunk[i].roundtrip, chunk[i].original);
    }
  };

  if (workers == 1) {
    work(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t step = (n + workers - 1) / workers;
  for (std::size_t begin = 0; begin < n; begin += step)
    pool.emplace_back(work, begin, std::min(begin + step, n));
  for (std::thread& t : pool) t.join();
}

void validate_chain(const MonoCorpus& mono, const TranslatorSpec& fwd, const TranslatorSpec& bwd) {
  if (fwd.src_lang != mono.language)
    throw UsageError("forward translator expects " + fwd.src_lang + " but corpus is " +
                     mono.language);
  if (fwd.tgt_lang != bwd.src_lang)
    throw UsageError("translator chain broken: forward emits " + fwd.tgt_lang +
                     ", backward expects " + bwd.src_lang);
  if (bwd.tgt_lang != mono.language)
    throw UsageError("backward translator emits " + bwd.tgt_lang + " but corpus is " +
                     mono.language);
}

}  // namespace

std::vector<RoundTripRecord> roundtrip(const MonoCorpus& mono, const TranslatorSpec& fwd,
                                       const TranslatorSpec& bwd, int threads) {
  validate_chain(mono, fwd, bwd);
  auto fwd_t = make_translator(fwd);
  auto bwd_t = make_translator(bwd);
  std::vector<Scored> chunk;
  chunk.reserve(mono.records.size());
  for (const MonoRecord& rec : mono.records) chunk.push_back(Scored{rec.line_no, rec.text, {}, {}, {}});
  score_chunk(*fwd_t, *bwd_t, chunk, 0, threads);
  std::vector<RoundTripRecord> out;
  out.reserve(chunk.size());
  for (Scored& s : chunk)
    out.push_back(RoundTripRecord{s.line_no, std::move(s.original), std::move(s.intermediate),
                                  std::move(s.roundtrip), s.score});
  return out;
}

FilterResult filter_corpus(const std::vector<RoundTripRecord>& records, const Threshold& threshold,
                           const std::string& src_language, const std::string& tgt_language,
                           const std::string& source_tag) {
  if (threshold.value < 0.0 || threshold.value > 1.0)
    throw UsageError("threshold value must be in [0,1]");
  FilterResult result;
  result.threshold = threshold;
  result.retained.src_language = src_language;
  result.retained.tgt_language = tgt_language;
  for (const RoundTripRecord& rec : records) {
    result.scores.push_back(rec.score.score);
    result.original_lengths.push_back(static_cast<std::int64_t>(rec.original.token_count()));
    if (rec.score.score >= threshold.value) {
      ParallelRecord pr{rec.line_no, rec.original, rec.intermediate, source_tag};
      ++result.retained.stats.record_count;
      ++result.retained.stats.token_count_histogram[static_cast<std::int64_t>(
          pr.src.token_count())];
      ++result.retained.stats.per_source_counts[source_tag];
      result.retained.records.push_back(std::move(pr));
    } else {
      ++result.rejected_count;
    }
  }
  const std::int64_t total = result.retained.stats.record_count + result.rejected_count;
  result.retention_rate =
      total > 0 ? static_cast<double>(result.retained.stats.record_count) / total : 0.0;
  return result;
}

// ---- config ----

namespace {

TranslatorSpec spec_from_json(const json& j) {
  TranslatorSpec s;
  s.backend = backend_from_string(j.value("backend", "table"));
  s.src_lang = j.value("src_lang", "");
  s.tgt_lang = j.value("tgt_lang", "");
  s.dict_path = j.value("dict_path", "");
  s.invert_dict = j.value("invert_dict", false);
  s.vocab_size = j.value("vocab_size", std::uint64_t{10000});
  s.p_sub = j.value("p_sub", 0.0);
  s.p_del = j.value("p_del", 0.0);
  s.seed = j.value("seed", std::uint64_t{0});
  s.endpoint = j.value("endpoint", "");
  s.batch_size = j.value("batch_size", 32);
  s.max_in_flight = j.value("max_in_flight", 1);
  s.timeout_ms = j.value("timeout_ms", 10000);
  s.bearer_token = j.value("bearer_token", "");
  if (j.contains("retry")) {
    const json& r = j["retry"];
    s.retry.max_attempts = r.value("max_attempts", 5);
    s.retry.base_delay_ms = r.value("base_delay_ms", 200);
    s.retry.factor = r.value("factor", 2.0);
    s.retry.full_jitter = r.value("full_jitter", true);
  }
  return s;
}

json spec_to_json(const TranslatorSpec& s) {
  json j;
  j["backend"] = backend_to_string(s.backend);
  j["src_lang"] = s.src_lang;
  j["tgt_lang"] = s.tgt_lang;
  j["dict_path"] = s.dict_path;
  j["invert_dict"] = s.invert_dict;
  j["vocab_size"] = s.vocab_size;
  j["p_sub"] = s.p_sub;
  j["p_del"] = s.p_del;
  j["seed"] = s.seed;
  j["endpoint"] = s.endpoint;
  j["batch_size"] = s.batch_size;
  j["max_in_flight"] = s.max_in_flight;
  j["timeout_ms"] = s.timeout_ms;
  j["retry"] = {{"max_attempts", s.retry.max_attempts},
                {"base_delay_ms", s.retry.base_delay_ms},
                {"factor", s.retry.factor},
                {"full_jitter", s.retry.full_jitter}};
  return j;
}

}  // namespace

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DataError("pipeline config: invalid JSON");
  PipelineConfig c;
  if (!j.contains("corpus")) throw DataError("pipeline config: missing [corpus] section");
  const json& jc = j["corpus"];
  c.corpus.path = jc.value("path", "");
  c.corpus.language = jc.value("language", "");
  c.corpus.source_tag = jc.value("source_tag", "mono");
  c.corpus.limit = jc.value("limit", std::int64_t{0});
  c.corpus.random_subset = jc.value("random_subset", false);
  c.corpus.strict_utf8 = jc.value("strict_utf8", false);
  if (!j.contains("forward") || !j.contains("backward"))
    throw DataError("pipeline config: missing [forward]/[backward] sections");
  c.forward = spec_from_json(j["forward"]);
  c.backward = spec_from_json(j["backward"]);
  if (j.contains("filter")) {
    const json& jf = j["filter"];
    c.filter.delta = jf.value("delta", kDefaultDelta);
    c.filter.direction = jf.value("direction", "xx-en-xx");
    c.filter.write_rejects = jf.value("write_rejects", false);
  }
  if (j.contains("output")) {
    const json& jo = j["output"];
    c.output.dir = jo.value("dir", ".");
    c.output.stem = jo.value("stem", "synthetic");
  }
  if (j.contains("phases")) {
    const json& jp = j["phases"];
    c.phases.pretrain_corpora = jp.value("pretrain", std::vector<std::string>{});
    c.phases.posttrain_corpora = jp.value("posttrain", std::vector<std::string>{});
  }
  c.seed = j.value("seed", std::uint64_t{0});
  c.threads = j.value("threads", 1);
  if (c.filter.direction != "xx-en-xx" && c.filter.direction != "en-xx-en")
    throw DataError("pipeline config: direction must be xx-en-xx or en-xx-en");
  return c;
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string PipelineConfig::canonical_json() const {
  // threads deliberately excluded: it must never change outputs
  json j;
  j["corpus"] = {{"path", corpus.path},         {"language", corpus.language},
                 {"source_tag", corpus.source_tag}, {"limit", corpus.limit},
                 {"random_subset", corpus.random_subset}, {"strict_utf8", corpus.strict_utf8}};
  j["forward"] = spec_to_json(forward);
  j["backward"] = spec_to_json(backward);
  j["filter"] = {{"delta", filter.delta},
                 {"direction", filter.direction},
                 {"write_rejects", filter.write_rejects}};
  j["output"] = {{"dir", output.dir}, {"stem", output.stem}};
  j["phases"] = {{"pretrain", phases.pretrain_corpora}, {"posttrain", phases.posttrain_corpora}};
  j["seed"] = seed;
  return j.dump();
}

std::string PipelineConfig::config_hash() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char c : canonical_json()) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- pipeline ----

namespace {

// Resolves direction and seed mixing and checks the chain closes on the
// corpus language.
void prepare_legs(const PipelineConfig& config, TranslatorSpec& fwd, TranslatorSpec& bwd) {
  if (config.corpus.path.empty()) throw UsageError("pipeline: corpus path not set");
  if (config.corpus.language.empty()) throw UsageError("pipeline: corpus language not set");
  fwd = config.forward;
  bwd = config.backward;
  if (config.filter.direction == "en-xx-en") {
    // reversed scheme: the configured legs already run in the opposite
    // orientation, so swap them instead of inverting
    fwd = config.backward;
    bwd = config.forward;
  }
  if (config.seed != 0) {
    fwd.seed = rng::key(config.seed, fwd.seed, 0, 11);
    bwd.seed = rng::key(config.seed, bwd.seed, 0, 13);
  }
  const std::string& xx = config.corpus.language;
  if (fwd.src_lang != xx)
    throw UsageError("pipeline: forward translator expects " + fwd.src_lang + " but corpus is " + xx);
  if (fwd.tgt_lang != bwd.src_lang || bwd.tgt_lang != xx)
    throw UsageError("pipeline: translator chain does not close " + xx + "->" + fwd.tgt_lang +
                     "->" + xx);
}

}  // namespace

FilterResult run_pipeline(const PipelineConfig& config, PipelineArtifacts* artifacts) {
  namespace fs = std::filesystem;
  TranslatorSpec fwd, bwd;
  prepare_legs(config, fwd, bwd);
  const std::string xx = config.corpus.language;
  const std::string pivot = fwd.tgt_lang;

  auto fwd_t = make_translator(fwd);
  auto bwd_t = make_translator(bwd);

  fs::create_directories(config.output.dir);
  const std::string base = (fs::path(config.output.dir) / config.output.stem).string();
  PipelineArtifacts art;
  art.src_path = base + "." + xx;
  art.tgt_path = base + "." + pivot;
  art.scores_path = base + ".scores.tsv";
  art.report_json_path = base + ".report.json";
  art.report_text_path = base + ".report.txt";
  art.manifest_path = base + ".manifest.json";
  if (config.filter.write_rejects) art.rejects_path = base + ".rejects.tsv";
  const std::string tmp_path = base + ".roundtrip.tmp";

  // pass 1: score everything, spill (original, intermediate) pairs so pass 2
  // never re-translates
  std::ofstream scores_out(art.scores_path);
  std::ofstream tmp_out(tmp_path);
  if (!scores_out || !tmp_out) throw DataError("pipeline: cannot write to " + config.output.dir);

  FilterResult result;
  result.retained.src_language = xx;
  result.retained.tgt_language = pivot;
  const std::string tag = config.corpus.source_tag + ":bt-filtered";
  double score_sum = 0.0;

  std::vector<Scored> chunk;
  const std::size_t chunk_cap = std::max<std::size_t>(256, 256 * std::max(1, config.threads));
  std::int64_t global_index = 0;
  std::vector<std::int64_t> line_nos;  // per scored sentence, input order

  auto flush_chunk = [&] {
    if (chunk.empty()) return;
    try {
      score_chunk(*fwd_t, *bwd_t, chunk, global_index, config.threads);
    } catch (const std::exception& e) {
      throw TransportError("pipeline stage roundtrip, sentences " +
                           std::to_string(global_index) + ".." +
                           std::to_string(global_index + static_cast<std::int64_t>(chunk.size())) +
                           ": " + e.what());
    }
    for (Scored& s : chunk) {
      scores_out << s.line_no << '\t' << format_score(s.score.score) << '\n';
      tmp_out << s.line_no << '\t' << s.original.joined() << '\t' << s.intermediate.joined()
              << '\n';
      result.scores.push_back(s.score.score);
      result.original_lengths.push_back(static_cast<std::int64_t>(s.original.token_count()));
      line_nos.push_back(s.line_no);
      score_sum += s.score.score;
    }
    global_index += static_cast<std::int64_t>(chunk.size());
    chunk.clear();
  };

  auto feed = [&](std::int64_t line_no, TokenSeq seq) {
    chunk.push_back(Scored{line_no, std::move(seq), {}, {}, {}});
    if (chunk.size() >= chunk_cap) flush_chunk();
  };

  CorpusStats ingest_stats;
  if (config.corpus.limit > 0 && config.corpus.random_subset) {
    MonoCorpus mono = load_mono(config.corpus.path, xx, config.corpus.source_tag,
                                config.corpus.strict_utf8);
    mono = subset_random(mono, config.corpus.limit, config.seed);
    ingest_stats = mono.stats;
    for (MonoRecord& rec : mono.records) feed(rec.line_no, std::move(rec.text));
  } else {
    std::int64_t taken = 0;
    for_each_mono_record(
        config.corpus.path, config.corpus.strict_utf8,
        [&](std::int64_t line_no, TokenSeq seq) {
          if (config.corpus.limit > 0 && taken >= config.corpus.limit) return;
          ++taken;
          feed(line_no, std::move(seq));
        },
        ingest_stats);
  }
  flush_chunk();
  scores_out.close();
  tmp_out.close();

  if (result.scores.empty()) {
    fs::remove(tmp_path);
    throw DataError("pipeline: corpus produced no scorable sentences");
  }
  result.threshold = threshold_from_mean(
      score_sum / static_cast<double>(result.scores.size()), config.filter.delta);

  // pass 2: filter at the global threshold and emit the synthetic corpus
  std::ifstream tmp_in(tmp_path);
  std::ofstream src_out(art.src_path);
  std::ofstream tgt_out(art.tgt_path);
  std::ofstream rejects_out;
  if (!art.rejects_path.empty()) rejects_out.open(art.rejects_path);

  std::string line;
  std::size_t idx = 0;
  while (std::getline(tmp_in, line)) {
    std::size_t t1 = line.find('\t');
    std::size_t t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw DataError("pipeline stage filter: corrupt spill file " + tmp_path);
    std::string original = line.substr(t1 + 1, t2 - t1 - 1);
    std::string intermediate = line.substr(t2 + 1);
    const double score = result.scores.at(idx);
    const std::int64_t line_no = line_nos.at(idx);
    ++idx;
    if (score >= result.threshold.value) {
      src_out << original << '\n';
      tgt_out << intermediate << '\n';
      ParallelRecord pr{line_no, tokenize(original), tokenize(intermediate), tag};
      ++result.retained.stats.record_count;
      ++result.retained.stats.token_count_histogram[static_cast<std::int64_t>(
          pr.src.token_count())];
      ++result.retained.stats.per_source_counts[tag];
      result.retained.records.push_back(std::move(pr));
    } else {
      ++result.rejected_count;
      if (rejects_out.is_open())
        rejects_out << line_no << '\t' << format_score(score) << '\t' << original << '\n';
    }
  }
  tmp_in.close();
  fs::remove(tmp_path);

  const std::int64_t total = result.retained.stats.record_count + result.rejected_count;
  result.retention_rate =
      total > 0 ? static_cast<double>(result.retained.stats.record_count) / total : 0.0;

  FilterReport report = retention_report(result, xx);
  write_report(report, art.report_json_path, art.report_text_path);
  ExperimentManifest manifest = emit_manifest(config, result, art);
  write_manifest(manifest, art.manifest_path);

  if (artifacts) *artifacts = art;
  return result;
}

ScoreSummary roundtrip_scores_streaming(const PipelineConfig& config,
                                        const std::string& scores_path) {
  TranslatorSpec fwd, bwd;
  prepare_legs(config, fwd, bwd);
  auto fwd_t = make_translator(fwd);
  auto bwd_t = make_translator(bwd);

  const auto parent = std::filesystem::path(scores_path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream scores_out(scores_path);
  if (!scores_out) throw DataError("cannot write scores: " + scores_path);

  ScoreSummary summary;
  double sum = 0.0;
  std::vector<Scored> chunk;
  const std::size_t chunk_cap = std::max<std::size_t>(256, 256 * std::max(1, config.threads));
  std::int64_t global_index = 0;

  auto flush_chunk = [&] {
    if (chunk.empty()) return;
    score_chunk(*fwd_t, *bwd_t, chunk, global_index, config.threads);
    for (const Scored& s : chunk) {
      scores_out << s.line_no << '\t' << format_score(s.score.score) << '\n';
      sum += s.score.score;
    }
    global_index += static_cast<std::int64_t>(chunk.size());
    summary.count += static_cast<std::int64_t>(chunk.size());
    chunk.clear();
  };

  CorpusStats ingest_stats;
  std::int64_t taken = 0;
  for_each_mono_record(
      config.corpus.path, config.corpus.strict_utf8,
      [&](std::int64_t line_no, TokenSeq seq) {
        if (config.corpus.limit > 0 && taken >= config.corpus.limit) return;
        ++taken;
        chunk.push_back(Scored{line_no, std::move(seq), {}, {}, {}});
        if (chunk.size() >= chunk_cap) flush_chunk();
      },
      ingest_stats);
  flush_chunk();
  if (summary.count > 0) summary.mean = sum / static_cast<double>(summary.count);
  return summary;
}

}  // namespace btf
