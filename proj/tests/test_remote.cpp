#include <doctest.h>

#include "btfilter/bleu.hpp"
#include "btfilter/errors.hpp"
#include "btfilter/translate.hpp"
#include "temp_files.hpp"

using namespace btf;
using testutil::write_file;

namespace {

TranslatorSpec remote_spec(int port) {
  TranslatorSpec s;
  s.backend = Backend::remote;
  s.src_lang = "hi";
  s.tgt_lang = "en";
  s.endpoint = "http://127.0.0.1:" + std::to_string(port);
  s.retry.base_delay_ms = 10;  // keep test retries fast
  return s;
}

}  // namespace

TEST_CASE("echo stub: round-trip BLEU of a sentence against itself is 1") {
  StubServer server;
  server.start(0, StubBehavior::echo);
  TranslatorSpec spec = remote_spec(server.port());
  auto in = tokenize("एक दो तीन चार");
  auto out = translate_batch(spec, {in});
  CHECK(out.outputs[0].tokens == in.tokens);
  CHECK(sentence_bleu(out.outputs[0], in).score == doctest::Approx(1.0));
}

TEST_CASE("batching: 257 sentences at batch_size 100 issue 3 ordered requests") {
  StubServer server;
  server.start(0, StubBehavior::echo);
  TranslatorSpec spec = remote_spec(server.port());
  spec.batch_size = 100;
  spec.max_in_flight = 4;
  std::vector<TokenSeq> in;
  for (int i = 0; i < 257; ++i) in.push_back(tokenize("sent " + std::to_string(i)));
  auto out = translate_batch(spec, in);
  CHECK(server.request_count() == 3);
  for (int i = 0; i < 257; ++i) CHECK(out.outputs[i].tokens == in[i].tokens);
  std::size_t total = 0;
  for (const StubRequest& r : server.requests()) {
    CHECK(r.src_lang == "hi");
    CHECK(r.tgt_lang == "en");
    total += r.text_count;
  }
  CHECK(total == 257);
}

TEST_CASE("fault schedule: 2 failures then success with retry limit 3") {
  StubServer server;
  server.start(0, StubBehavior::inject_fault, "", /*fault_schedule=*/2);
  TranslatorSpec spec = remote_spec(server.port());
  spec.retry.max_attempts = 3;
  auto out = translate_batch(spec, {tokenize("hello world")});
  CHECK(out.outputs[0].joined() == "hello world");
  CHECK(server.request_count() == 3);  // 2 faulted attempts + 1 success
}

TEST_CASE("retries exhausted raises a batch error naming the batch") {
  StubServer server;
  server.start(0, StubBehavior::inject_fault, "", /*fault_schedule=*/100);
  TranslatorSpec spec = remote_spec(server.port());
  spec.retry.max_attempts = 2;
  try {
    translate_batch(spec, {tokenize("x")});
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(std::string(e.what()).find("batch 0") != std::string::npos);
  }
}

TEST_CASE("table behavior applies the stub dictionary") {
  const std::string dict = write_file("stub.dict", "ek\tone\ndo\ttwo\n");
  StubServer server;
  server.start(0, StubBehavior::table, dict);
  auto out = translate_batch(remote_spec(server.port()), {tokenize("ek do teen")});
  CHECK(out.outputs[0].joined() == "one two teen");
}

TEST_CASE("inverted remote spec issues swapped language codes") {
  StubServer server;
  server.start(0, StubBehavior::echo);
  TranslatorSpec spec = remote_spec(server.port());
  translate_batch(invert(spec), {tokenize("x")});
  const auto reqs = server.requests();
  REQUIRE(reqs.size() == 1);
  CHECK(reqs[0].src_lang == "en");
  CHECK(reqs[0].tgt_lang == "hi");
}

TEST_CASE("BTFILTER_ENDPOINT overrides the configured endpoint") {
  StubServer server;
  server.start(0, StubBehavior::echo);
  TranslatorSpec spec = remote_spec(9);  // unroutable configured endpoint
  const std::string url = "http://127.0.0.1:" + std::to_string(server.port());
  setenv("BTFILTER_ENDPOINT", url.c_str(), 1);
  auto out = translate_batch(spec, {tokenize("via env")});
  unsetenv("BTFILTER_ENDPOINT");
  CHECK(out.outputs[0].joined() == "via env");
  CHECK(server.request_count() == 1);
}

TEST_CASE("stub refuses an occupied port") {
  StubServer first;
  first.start(0, StubBehavior::echo);
  StubServer second;
  CHECK_THROWS_AS(second.start(first.port(), StubBehavior::echo), TransportError);
}
