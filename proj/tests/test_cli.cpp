#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include "temp_files.hpp"

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout only
};

CommandResult run(const std::string& args) {
  const std::string cmd = std::string(BTFILTER_BIN) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CommandResult res;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) res.output.append(buf.data(), n);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

}  // namespace

TEST_CASE("bleu of a file against itself scores 1.000000 on every line") {
  const std::string f = testutil::write_file("cli_self.txt", "a b c\nd e f g\nh\n");
  CommandResult res = run("bleu " + f + " " + f);
  CHECK(res.exit_code == 0);
  CHECK(res.output == "1\t1.000000\n2\t1.000000\n3\t1.000000\n");
}

TEST_CASE("threshold subcommand prints mean+delta with 6 decimals") {
  const std::string f =
      testutil::write_file("cli_scores.tsv", "1\t0.200000\n2\t0.400000\n3\t0.600000\n");
  CommandResult res = run("threshold " + f + " --delta 0.02");
  CHECK(res.exit_code == 0);
  CHECK(res.output == "0.420000\n");
}

TEST_CASE("help exits 0 for every subcommand") {
  for (const char* sub : {"", "bleu", "roundtrip", "filter", "threshold", "collate", "stats",
                          "report", "manifest", "serve-stub"}) {
    CommandResult res = run(std::string(sub) + " --help");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("Usage") != std::string::npos);
  }
}

TEST_CASE("unknown flag is a usage error (exit 1)") {
  CHECK(run("bleu --no-such-flag a b").exit_code == 1);
  CHECK(run("frobnicate").exit_code == 1);
}

TEST_CASE("missing input file is a data error (exit 2)") {
  CHECK(run("bleu /nonexistent/a /nonexistent/b").exit_code == 2);
  CHECK(run("stats /nonexistent/corpus.txt").exit_code == 2);
}

TEST_CASE("stats emits JSON with exact counts") {
  const std::string f = testutil::write_file("cli_stats.txt", "a b c\n\nx y\n");
  CommandResult res = run("stats " + f);
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("\"record_count\": 2") != std::string::npos);
  CHECK(res.output.find("\"dropped_empty\": 1") != std::string::npos);
}

TEST_CASE("collate reports pre and post totals") {
  const std::string a = testutil::write_file("cli_a.tsv", "s1\tt1\ns2\tt2\n");
  const std::string b = testutil::write_file("cli_b.tsv", "s2\tt2\ns3\tt3\n");
  CommandResult res =
      run("collate one=" + a + " two=" + b + " --src-lang hi --tgt-lang en");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("pre_total\t4") != std::string::npos);
  CHECK(res.output.find("post_total\t3") != std::string::npos);
}

TEST_CASE("end-to-end filter run from a config file") {
  std::string corpus;
  for (int i = 0; i < 40; ++i)
    corpus += "tok" + std::to_string(i) + " tok" + std::to_string(i + 1) + " tok" +
              std::to_string(i + 2) + "\n";
  const std::string corpus_path = testutil::write_file("cli_pipe.txt", corpus);
  const std::string out_dir = testutil::fresh_path("cli_out");
  const std::string config = testutil::write_file("cli_config.json", R"({
    "corpus": {"path": ")" + corpus_path + R"(", "language": "hi"},
    "forward": {"backend": "noise", "src_lang": "hi", "tgt_lang": "en", "p_sub": 0.0},
    "backward": {"backend": "noise", "src_lang": "en", "tgt_lang": "hi", "p_sub": 0.0},
    "output": {"dir": ")" + out_dir + R"(", "stem": "synth"},
    "seed": 7})");
  CommandResult res = run("--config " + config + " filter");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("retained\t40") != std::string::npos);
  CHECK(res.output.find("retention\t1.000000") != std::string::npos);

  // report re-renders from the sidecar without re-translation
  CommandResult rep = run("report --scores " + out_dir + "/synth.scores.tsv --corpus " +
                          corpus_path + " --language hi --json");
  CHECK(rep.exit_code == 0);
  CHECK(rep.output.find("\"pre_count\": 40") != std::string::npos);
  CHECK(rep.output.find("\"post_count\": 40") != std::string::npos);

  // manifest from the same sidecars
  CommandResult man = run("--config " + config + " manifest --scores " + out_dir +
                          "/synth.scores.tsv");
  CHECK(man.exit_code == 0);
  CHECK(man.output.find("\"bt_filter\"") != std::string::npos);
}
