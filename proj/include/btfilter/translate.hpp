#ifndef BTFILTER_TRANSLATE_HPP
#define BTFILTER_TRANSLATE_HPP

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "btfilter/textnorm.hpp"

namespace btf {

enum class Backend { table, noise, remote };

Backend backend_from_string(const std::string& name);
std::string backend_to_string(Backend b);

struct RetryPolicy {
  int max_attempts = 5;
  int base_delay_ms = 200;
  double factor = 2.0;
  bool full_jitter = true;
};

struct TranslatorSpec {
  Backend backend = Backend::table;
  std::string src_lang;
  std::string tgt_lang;

  // table / noise
  std::string dict_path;     // TSV token pairs; empty means identity mapping
  bool invert_dict = false;  // apply the inverse mapping (set by invert())

  // noise
  std::uint64_t vocab_size = 10000;
  double p_sub = 0.0;
  double p_del = 0.0;
  std::uint64_t seed = 0;

  // remote
  std::string endpoint;
  int batch_size = 32;
  int max_in_flight = 1;
  int timeout_ms = 10000;
  RetryPolicy retry;
  std::string bearer_token;  // optional Authorization header

  void validate() const;  // UsageError on out-of-range parameters
};

struct TranslationBatch {
  std::vector<TokenSeq> inputs;
  std::vector<TokenSeq> outputs;  // aligned 1:1 with inputs
};

class Translator {
 public:
  virtual ~Translator() = default;
  // first_sentence_index keys the noise backend's counter RNG so output is
  // independent of how the caller partitions the corpus into batches.
  virtual std::vector<TokenSeq> translate(const std::vector<TokenSeq>& inputs,
                                          std::int64_t first_sentence_index) = 0;
};

std::unique_ptr<Translator> make_translator(const TranslatorSpec& spec);

TranslationBatch translate_batch(const TranslatorSpec& spec, const std::vector<TokenSeq>& inputs,
                                 std::int64_t first_sentence_index = 0);

// Direction reversal: table/noise invert their dictionary, remote swaps the
// language codes in requests.
TranslatorSpec invert(const TranslatorSpec& spec);

// Bijective token dictionary loaded from a 2-column TSV.
std::map<std::string, std::string> load_dictionary(const std::string& path);
std::map<std::string, std::string> invert_dictionary(const std::map<std::string, std::string>& d);

// ---- stub server (test harness for the wire protocol) ----

enum class StubBehavior { echo, table, inject_fault };

StubBehavior stub_behavior_from_string(const std::string& name);

struct StubRequest {
  std::string src_lang;
  std::string tgt_lang;
  std::size_t text_count = 0;
};

class StubServer {
 public:
  StubServer();
  ~StubServer();

  // fault_schedule: number of leading requests answered with HTTP 503
  // before the server starts succeeding (inject_fault behavior only).
  void start(int port, StubBehavior behavior, const std::string& dict_path = "",
             int fault_schedule = 2);
  void stop();

  int port() const;
  std::vector<StubRequest> requests() const;
  std::size_t request_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace btf

#endif
