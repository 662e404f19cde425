#include "btfilter/translate.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>

#include "btfilter/errors.hpp"
#include "btfilter/rng.hpp"

namespace btf {

Backend backend_from_string(const std::string& name) {
  if (name == "table") return Backend::table;
  if (name == "noise") return Backend::noise;
  if (name == "remote") return Backend::remote;
  throw UsageError("unknown translator backend: " + name);
}

std::string backend_to_string(Backend b) {
  switch (b) {
    case Backend::table: return "table";
    case Backend::noise: return "noise";
    case Backend::remote: return "remote";
  }
  return "?";
}

void TranslatorSpec::validate() const {
  if (p_sub < 0.0 || p_sub > 1.0) throw UsageError("p_sub must be in [0,1]");
  if (p_del < 0.0 || p_del > 1.0) throw UsageError("p_del must be in [0,1]");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (max_in_flight < 1) throw UsageError("max_in_flight must be >= 1");
  if (backend == Backend::noise && vocab_size < 1) throw UsageError("vocab_size must be >= 1");
  if (backend == Backend::remote && endpoint.empty() && !std::getenv("BTFILTER_ENDPOINT"))
    throw UsageError("remote backend requires an endpoint");
}

std::map<std::string, std::string> load_dictionary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dictionary: " + path);
  std::map<std::string, std::string> dict;
  std::map<std::string, std::string> reverse;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 2 tab-separated tokens");
    std::string from = normalize(line.substr(0, tab));
    std::string to = normalize(line.substr(tab + 1));
    if (from.empty() || to.empty() || from.find(' ') != std::string::npos ||
        to.find(' ') != std::string::npos)
      throw DataError(path + ":" + std::to_string(line_no) + ": entries must be single tokens");
    if (!dict.emplace(from, to).second)
      throw DataError(path + ":" + std::to_string(line_no) + ": duplicate source token " + from);
    if (!reverse.emplace(to, from).second)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": dictionary is not bijective, duplicate target token " + to);
  }
  return dict;
}

std::map<std::string, std::string> invert_dictionary(const std::map<std::string, std::string>& d) {
  std::map<std::string, std::string> inv;
  for (const auto& [from, to] : d) inv.emplace(to, from);
  return inv;
}

TranslatorSpec invert(const TranslatorSpec& spec) {
  TranslatorSpec out = spec;
  std::swap(out.src_lang, out.tgt_lang);
  if (spec.backend != Backend::remote) out.invert_dict = !spec.invert_dict;
  return out;
}

namespace {

class TableTranslator : public Translator {
 public:
  explicit TableTranslator(const TranslatorSpec& spec) {
    if (!spec.dict_path.empty()) {
      dict_ = load_dictionary(spec.dict_path);
      if (spec.invert_dict) dict_ = invert_dictionary(dict_);
    }
  }

  std::vector<TokenSeq> translate(const std::vector<TokenSeq>& inputs, std::int64_t) override {
    std::vector<TokenSeq> outputs;
    outputs.reserve(inputs.size());
    for (const TokenSeq& in : inputs) outputs.push_back(map_tokens(in));
    return outputs;
  }

 protected:
  TokenSeq map_tokens(const TokenSeq& in) const {
    std::vector<std::string> tokens;
    tokens.reserve(in.tokens.size());
    for (const std::string& tok : in.tokens) {
      auto it = dict_.find(tok);
      tokens.push_back(it != dict_.end() ? it->second : tok);  // OOV passes through
    }
    return from_tokens(std::move(tokens));
  }

 private:
  std::map<std::string, std::string> dict_;
};

// Noise channel: table mapping, then per-token substitution and deletion
// driven by the counter RNG, keyed by (seed, sentence index, token index).
class NoiseTranslator : public TableTranslator {
 public:
  explicit NoiseTranslator(const TranslatorSpec& spec)
      : TableTranslator(spec),
        vocab_size_(spec.vocab_size),
        p_sub_(spec.p_sub),
        p_del_(spec.p_del),
        seed_(spec.seed) {}

  std::vector<TokenSeq> translate(const std::vector<TokenSeq>& inputs,
                                  std::int64_t first_sentence_index) override {
    std::vector<TokenSeq> outputs;
    outputs.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const std::uint64_t sent = static_cast<std::uint64_t>(first_sentence_index) + i;
      TokenSeq mapped = map_tokens(inputs[i]);
      std::vector<std::string> tokens;
      tokens.reserve(mapped.tokens.size());
      for (std::size_t t = 0; t < mapped.tokens.size(); ++t) {
        std::string tok = std::move(mapped.tokens[t]);
        if (p_sub_ > 0.0 && rng::uniform01(seed_, sent, t, kSubDecision) < p_sub_)
          tok = "w" + std::to_string(rng::bounded(seed_, sent, t, kSubChoice, vocab_size_));
        if (p_del_ > 0.0 && rng::uniform01(seed_, sent, t, kDelDecision) < p_del_) continue;
        tokens.push_back(std::move(tok));
      }
      outputs.push_back(from_tokens(std::move(tokens)));
    }
    return outputs;
  }

 private:
  static constexpr std::uint64_t kSubDecision = 1;
  static constexpr std::uint64_t kSubChoice = 2;
  static constexpr std::uint64_t kDelDecision = 3;

  std::uint64_t vocab_size_;
  double p_sub_;
  double p_del_;
  std::uint64_t seed_;
};

}  // namespace

// RemoteTranslator lives in remote.cpp (pulls in httplib).
std::unique_ptr<Translator> make_remote_translator(const TranslatorSpec& spec);

std::unique_ptr<Translator> make_translator(const TranslatorSpec& spec) {
  spec.validate();
  switch (spec.backend) {
    case Backend::table: return std::make_unique<TableTranslator>(spec);
    case Backend::noise: return std::make_unique<NoiseTranslator>(spec);
    case Backend::remote: return make_remote_translator(spec);
  }
  throw UsageError("unknown backend");
}

TranslationBatch translate_batch(const TranslatorSpec& spec, const std::vector<TokenSeq>& inputs,
                                 std::int64_t first_sentence_index) {
  if (inputs.empty()) throw UsageError("translate_batch: empty input list");
  TranslationBatch batch;
  batch.inputs = inputs;
  batch.outputs = make_translator(spec)->translate(inputs, first_sentence_index);
  return batch;
}

}  // namespace btf
