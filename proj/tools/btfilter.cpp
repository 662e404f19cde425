// btfilter — filtered back-translation toolkit CLI.
//
// Every pipeline stage is exposed as a subcommand so runs can be composed
// and re-rendered from sidecars without re-translating anything.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "btfilter/bleu.hpp"
#include "btfilter/corpus.hpp"
#include "btfilter/errors.hpp"
#include "btfilter/filter.hpp"
#include "btfilter/report.hpp"
#include "btfilter/translate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTransport = 3;

struct GlobalFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string threads = "1";
  std::string log_level = "info";
};

int resolve_threads(const std::string& value) {
  if (value == "auto") {
    unsigned n = std::thread::hardware_concurrency();
    return n > 0 ? static_cast<int>(n) : 1;
  }
  int n = std::stoi(value);
  if (n < 1) throw btf::UsageError("--threads must be >= 1 or auto");
  return n;
}

btf::PipelineConfig load_pipeline_config(const GlobalFlags& g) {
  if (g.config_path.empty()) throw btf::UsageError("--config <file> is required");
  btf::PipelineConfig config = btf::PipelineConfig::from_json_file(g.config_path);
  if (g.seed_set) config.seed = g.seed;  // flags override the config file
  config.threads = resolve_threads(g.threads);
  return config;
}

std::vector<double> read_scores_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw btf::DataError("cannot open scores file: " + path);
  std::vector<double> scores;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t tab = line.rfind('\t');
    std::string field = tab == std::string::npos ? line : line.substr(tab + 1);
    try {
      scores.push_back(std::stod(field));
    } catch (const std::exception&) {
      throw btf::DataError(path + ":" + std::to_string(line_no) + ": not a score: " + field);
    }
  }
  return scores;
}

std::vector<std::int64_t> read_score_line_nos(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw btf::DataError("cannot open scores file: " + path);
  std::vector<std::int64_t> line_nos;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    line_nos.push_back(tab == std::string::npos ? static_cast<std::int64_t>(line_nos.size()) + 1
                                                : std::stoll(line.substr(0, tab)));
  }
  return line_nos;
}

// Rebuilds a FilterResult from the scores sidecar plus the original corpus
// (for sentence lengths); used by `report` and `manifest`.
btf::FilterResult result_from_sidecars(const std::string& scores_path,
                                       const std::string& corpus_path, double delta) {
  btf::FilterResult result;
  result.scores = read_scores_tsv(scores_path);
  if (result.scores.empty()) throw btf::DataError("scores file is empty: " + scores_path);
  std::vector<std::int64_t> line_nos = read_score_line_nos(scores_path);

  std::map<std::int64_t, std::int64_t> length_by_line;
  btf::CorpusStats ingest;
  btf::for_each_mono_record(
      corpus_path, false,
      [&](std::int64_t line_no, btf::TokenSeq seq) {
        length_by_line[line_no] = static_cast<std::int64_t>(seq.token_count());
      },
      ingest);
  for (std::int64_t ln : line_nos) {
    auto it = length_by_line.find(ln);
    if (it == length_by_line.end())
      throw btf::DataError("scores sidecar references line " + std::to_string(ln) +
                           " not present in " + corpus_path);
    result.original_lengths.push_back(it->second);
  }

  result.threshold = btf::compute_threshold(result.scores, delta);
  for (double s : result.scores)
    if (s >= result.threshold.value)
      ++result.retained.stats.record_count;
    else
      ++result.rejected_count;
  result.retention_rate = static_cast<double>(result.retained.stats.record_count) /
                          static_cast<double>(result.scores.size());
  return result;
}

std::vector<double> parse_threshold_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

volatile std::sig_atomic_t g_stop_requested = 0;
void on_signal(int) { g_stop_requested = 1; }

// ---- subcommand bodies ----

int cmd_bleu(const std::string& hyp_path, const std::string& ref_path,
             const std::string& out_path) {
  std::ifstream hyp_in(hyp_path), ref_in(ref_path);
  if (!hyp_in) throw btf::DataError("cannot open hypothesis file: " + hyp_path);
  if (!ref_in) throw btf::DataError("cannot open reference file: " + ref_path);
  std::ostream* out = &std::cout;
  std::ofstream file_out;
  if (!out_path.empty()) {
    file_out.open(out_path);
    if (!file_out) throw btf::DataError("cannot write: " + out_path);
    out = &file_out;
  }
  std::vector<std::pair<btf::TokenSeq, btf::TokenSeq>> pairs;
  std::string hyp_line, ref_line;
  std::int64_t line_no = 0;
  while (true) {
    const bool have_hyp = static_cast<bool>(std::getline(hyp_in, hyp_line));
    const bool have_ref = static_cast<bool>(std::getline(ref_in, ref_line));
    if (have_hyp != have_ref)
      throw btf::DataError("line counts differ between " + hyp_path + " and " + ref_path);
    if (!have_hyp) break;
    ++line_no;
    auto hyp = btf::tokenize(hyp_line);
    auto ref = btf::tokenize(ref_line);
    const btf::BleuBreakdown b = btf::sentence_bleu(hyp, ref);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", b.score);
    *out << line_no << '\t' << buf << '\n';
    pairs.emplace_back(std::move(hyp), std::move(ref));
  }
  if (pairs.empty()) throw btf::DataError("no input lines");
  const btf::BleuBreakdown corpus = btf::corpus_bleu(pairs);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "corpus_bleu\t%.6f\n", corpus.score);
  std::cerr << buf;
  return kExitOk;
}

int cmd_threshold(const std::string& scores_path, double delta) {
  const btf::Threshold t = btf::compute_threshold(read_scores_tsv(scores_path), delta);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f\n", t.value);
  std::cout << buf;
  return kExitOk;
}

int cmd_roundtrip(const GlobalFlags& g, std::string scores_path) {
  btf::PipelineConfig config = load_pipeline_config(g);
  if (scores_path.empty())
    scores_path = config.output.dir + "/" + config.output.stem + ".scores.tsv";
  const btf::ScoreSummary summary = btf::roundtrip_scores_streaming(config, scores_path);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "scored\t%lld\nmean_score\t%.6f\n",
                static_cast<long long>(summary.count), summary.mean);
  std::cout << buf;
  return kExitOk;
}

int cmd_filter(const GlobalFlags& g) {
  btf::PipelineConfig config = load_pipeline_config(g);
  btf::PipelineArtifacts artifacts;
  const btf::FilterResult result = btf::run_pipeline(config, &artifacts);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "retained\t%lld\nrejected\t%lld\nthreshold\t%.6f\nretention\t%.6f\n",
                static_cast<long long>(result.retained.stats.record_count),
                static_cast<long long>(result.rejected_count), result.threshold.value,
                result.retention_rate);
  std::cout << buf;
  std::cout << "corpus\t" << artifacts.src_path << '\t' << artifacts.tgt_path << '\n';
  return kExitOk;
}

struct CollateSource {
  std::string tag;
  std::string src_path;
  std::string tgt_path;  // empty for TSV sources
};

CollateSource parse_collate_spec(const std::string& spec) {
  std::size_t eq = spec.find('=');
  if (eq == std::string::npos)
    throw btf::UsageError("collate spec must be tag=src,tgt or tag=file.tsv: " + spec);
  CollateSource s;
  s.tag = spec.substr(0, eq);
  std::string files = spec.substr(eq + 1);
  std::size_t comma = files.find(',');
  if (comma == std::string::npos) {
    s.src_path = files;
  } else {
    s.src_path = files.substr(0, comma);
    s.tgt_path = files.substr(comma + 1);
  }
  return s;
}

int cmd_collate(const std::vector<std::string>& specs, const std::string& src_lang,
                const std::string& tgt_lang, const std::string& out_stem) {
  std::vector<btf::ParallelCorpus> corpora;
  for (const std::string& raw : specs) {
    const CollateSource s = parse_collate_spec(raw);
    corpora.push_back(s.tgt_path.empty()
                          ? btf::load_parallel_tsv(s.src_path, src_lang, tgt_lang, s.tag)
                          : btf::load_parallel(s.src_path, s.tgt_path, src_lang, tgt_lang, s.tag));
  }
  std::map<std::string, std::int64_t> pre_counts;
  const btf::ParallelCorpus merged = btf::collate(corpora, &pre_counts);
  if (!out_stem.empty()) {
    std::ofstream src_out(out_stem + "." + src_lang), tgt_out(out_stem + "." + tgt_lang);
    if (!src_out || !tgt_out) throw btf::DataError("cannot write collated corpus: " + out_stem);
    for (const btf::ParallelRecord& rec : merged.records) {
      src_out << rec.src.joined() << '\n';
      tgt_out << rec.tgt.joined() << '\n';
    }
  }
  std::int64_t pre_total = 0;
  for (const auto& [tag, count] : pre_counts) {
    std::cout << "pre\t" << tag << '\t' << count << '\n';
    pre_total += count;
  }
  for (const auto& [tag, count] : merged.stats.per_source_counts)
    std::cout << "post\t" << tag << '\t' << count << '\n';
  std::cout << "pre_total\t" << pre_total << '\n';
  std::cout << "post_total\t" << merged.stats.record_count << '\n';
  return kExitOk;
}

int cmd_stats(const std::string& path, const std::string& source_tag, bool parallel_tsv,
              const std::string& src_lang, const std::string& tgt_lang, bool strict) {
  if (parallel_tsv) {
    const btf::ParallelCorpus corpus =
        btf::load_parallel_tsv(path, src_lang, tgt_lang, source_tag, strict);
    std::cout << btf::stats(corpus).to_json() << '\n';
    return kExitOk;
  }
  // mono path streams; nothing is materialized
  btf::CorpusStats st;
  btf::for_each_mono_record(
      path, strict,
      [&](std::int64_t, btf::TokenSeq seq) {
        ++st.record_count;
        ++st.token_count_histogram[static_cast<std::int64_t>(seq.token_count())];
        ++st.per_source_counts[source_tag];
      },
      st);
  std::cout << st.to_json() << '\n';
  return kExitOk;
}

int cmd_report(const std::string& scores_path, const std::string& corpus_path,
               const std::string& language, double delta, const std::string& length_bias_csv,
               bool json_only) {
  const btf::FilterResult result = result_from_sidecars(scores_path, corpus_path, delta);
  const btf::FilterReport report = btf::retention_report(result, language);
  if (json_only)
    std::cout << report.to_json() << '\n';
  else
    std::cout << report.to_text();
  if (!length_bias_csv.empty()) {
    const auto rows = btf::length_bias_report(result, parse_threshold_list(length_bias_csv));
    std::cout << '\n' << btf::length_bias_to_text(rows);
  }
  return kExitOk;
}

int cmd_manifest(const GlobalFlags& g, const std::string& scores_path,
                 const std::string& out_path) {
  btf::PipelineConfig config = load_pipeline_config(g);
  const btf::FilterResult result =
      result_from_sidecars(scores_path, config.corpus.path, config.filter.delta);
  btf::PipelineArtifacts art;
  const std::string base = config.output.dir + "/" + config.output.stem;
  art.src_path = base + "." + config.corpus.language;
  art.tgt_path = base + "." + config.forward.tgt_lang;
  art.scores_path = scores_path;
  const btf::ExperimentManifest manifest = btf::emit_manifest(config, result, art);
  if (out_path.empty())
    std::cout << manifest.to_json() << '\n';
  else
    btf::write_manifest(manifest, out_path);
  return kExitOk;
}

int cmd_serve_stub(int port, const std::string& behavior, const std::string& dict_path,
                   int fault_count) {
  btf::StubServer server;
  server.start(port, btf::stub_behavior_from_string(behavior), dict_path, fault_count);
  std::cout << "stub listening on 127.0.0.1:" << server.port() << " (" << behavior << ")\n"
            << std::flush;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Filtered back-translation toolkit: round-trip scoring, threshold "
               "filtering and synthetic parallel corpus emission"};
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--config", g.config_path, "Pipeline config (JSON)");
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed override for noise backends");
  app.add_option("--threads", g.threads, "Worker count or 'auto' (never changes outputs)");
  app.add_option("--log-level", g.log_level, "error|warn|info|debug")->default_val("info");

  std::string hyp_path, ref_path, out_path;
  auto* bleu_cmd = app.add_subcommand("bleu", "Per-line sentence BLEU TSV plus corpus BLEU");
  bleu_cmd->add_option("hyp", hyp_path, "Hypothesis line file")->required();
  bleu_cmd->add_option("ref", ref_path, "Reference line file")->required();
  bleu_cmd->add_option("--output", out_path, "Write the TSV here instead of stdout");

  std::string scores_out;
  auto* roundtrip_cmd =
      app.add_subcommand("roundtrip", "Round-trip score a monolingual corpus (sidecar only)");
  roundtrip_cmd->add_option("--scores", scores_out, "Scores sidecar path");

  auto* filter_cmd = app.add_subcommand("filter", "Full two-pass filtering pipeline");

  std::string scores_path;
  double delta = btf::kDefaultDelta;
  auto* threshold_cmd = app.add_subcommand("threshold", "Mean+delta threshold from a scores file");
  threshold_cmd->add_option("scores", scores_path, "TSV or single-column scores file")->required();
  threshold_cmd->add_option("--delta", delta, "Offset above the mean")
      ->default_val(btf::kDefaultDelta);

  std::vector<std::string> collate_specs;
  std::string src_lang = "xx", tgt_lang = "en", out_stem;
  auto* collate_cmd = app.add_subcommand("collate", "Merge and dedup parallel corpora");
  collate_cmd->add_option("specs", collate_specs, "tag=src,tgt pairs or tag=file.tsv")->required();
  collate_cmd->add_option("--src-lang", src_lang, "Source language code");
  collate_cmd->add_option("--tgt-lang", tgt_lang, "Target language code");
  collate_cmd->add_option("--out", out_stem, "Write <stem>.<src> / <stem>.<tgt>");

  std::string stats_path, stats_tag = "corpus";
  bool stats_tsv = false, stats_strict = false;
  auto* stats_cmd = app.add_subcommand("stats", "Corpus statistics as JSON");
  stats_cmd->add_option("corpus", stats_path, "Line file (or TSV with --parallel-tsv)")->required();
  stats_cmd->add_option("--source-tag", stats_tag, "Provenance tag");
  stats_cmd->add_flag("--parallel-tsv", stats_tsv, "Input is 2-column parallel TSV");
  stats_cmd->add_option("--src-lang", src_lang, "Source language (parallel)");
  stats_cmd->add_option("--tgt-lang", tgt_lang, "Target language (parallel)");
  stats_cmd->add_flag("--strict", stats_strict, "Abort on invalid UTF-8");

  std::string report_scores, report_corpus, report_lang = "xx", length_bias_csv;
  bool report_json = false;
  auto* report_cmd = app.add_subcommand("report", "Re-render the filter report from sidecars");
  report_cmd->add_option("--scores", report_scores, "Scores sidecar TSV")->required();
  report_cmd->add_option("--corpus", report_corpus, "Original monolingual corpus")->required();
  report_cmd->add_option("--language", report_lang, "Language code for the report");
  report_cmd->add_option("--delta", delta, "Offset above the mean")
      ->default_val(btf::kDefaultDelta);
  report_cmd->add_option("--length-bias", length_bias_csv,
                         "Comma-separated thresholds for the length-bias table");
  report_cmd->add_flag("--json", report_json, "JSON output only");

  std::string manifest_scores, manifest_out;
  auto* manifest_cmd =
      app.add_subcommand("manifest", "Emit the three-phase experiment manifest");
  manifest_cmd->add_option("--scores", manifest_scores, "Scores sidecar TSV")->required();
  manifest_cmd->add_option("--out", manifest_out, "Write here instead of stdout");

  int stub_port = 0, fault_count = 2;
  std::string stub_behavior = "echo", stub_dict;
  auto* stub_cmd = app.add_subcommand("serve-stub", "Local stub translation server");
  stub_cmd->add_option("--port", stub_port, "TCP port (0 = any free port)");
  stub_cmd->add_option("--behavior", stub_behavior, "echo|table|inject_fault");
  stub_cmd->add_option("--dict", stub_dict, "Dictionary TSV for table behavior");
  stub_cmd->add_option("--fault-count", fault_count, "Leading 503s for inject_fault");

  // let --config/--seed/--threads appear after the subcommand too
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
    g.seed_set = seed_opt->count() > 0;
    if (*bleu_cmd) return cmd_bleu(hyp_path, ref_path, out_path);
    if (*roundtrip_cmd) return cmd_roundtrip(g, scores_out);
    if (*filter_cmd) return cmd_filter(g);
    if (*threshold_cmd) return cmd_threshold(scores_path, delta);
    if (*collate_cmd) return cmd_collate(collate_specs, src_lang, tgt_lang, out_stem);
    if (*stats_cmd)
      return cmd_stats(stats_path, stats_tag, stats_tsv, src_lang, tgt_lang, stats_strict);
    if (*report_cmd)
      return cmd_report(report_scores, report_corpus, report_lang, delta, length_bias_csv,
                        report_json);
    if (*manifest_cmd) return cmd_manifest(g, manifest_scores, manifest_out);
    if (*stub_cmd) return cmd_serve_stub(stub_port, stub_behavior, stub_dict, fault_count);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const btf::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const btf::TransportError& e) {
    std::cerr << "transport error: " << e.what() << '\n';
    return kExitTransport;
  } catch (const btf::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
