#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "btfilter/errors.hpp"
#include "btfilter/translate.hpp"

namespace btf {

namespace {

using nlohmann::json;

// Splits "http://host:port/prefix" into the client base and the path prefix.
void split_endpoint(const std::string& endpoint, std::string& base, std::string& prefix) {
  std::size_t scheme = endpoint.find("://");
  std::size_t path = scheme == std::string::npos ? endpoint.find('/')
                                                 : endpoint.find('/', scheme + 3);
  if (path == std::string::npos) {
    base = endpoint;
    prefix.clear();
  } else {
    base = endpoint.substr(0, path);
    prefix = endpoint.substr(path);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  }
}

class RemoteTranslator : public Translator {
 public:
  explicit RemoteTranslator(const TranslatorSpec& spec) : spec_(spec) {
    std::string endpoint = spec.endpoint;
    if (const char* env = std::getenv("BTFILTER_ENDPOINT")) endpoint = env;
    split_endpoint(endpoint, base_, prefix_);
  }

  std::vector<TokenSeq> translate(const std::vector<TokenSeq>& inputs, std::int64_t) override {
    const std::size_t n = inputs.size();
    const std::size_t bs = static_cast<std::size_t>(spec_.batch_size);
    const std::size_t batch_count = (n + bs - 1) / bs;
    std::vector<TokenSeq> outputs(n);

    std::atomic<std::size_t> next_batch{0};
    std::mutex error_mutex;
    std::exception_ptr error;

    auto worker = [&] {
      for (;;) {
        std::size_t b = next_batch.fetch_add(1);
        if (b >= batch_count) return;
        {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (error) return;
        }
        try {
          std::size_t begin = b * bs;
          std::size_t end = std::min(begin + bs, n);
          run_batch(inputs, outputs, b, begin, end);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    };

    std::size_t workers = std::min<std::size_t>(spec_.max_in_flight, batch_count);
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return outputs;
  }

 private:
  void run_batch(const std::vector<TokenSeq>& inputs, std::vector<TokenSeq>& outputs,
                 std::size_t batch_index, std::size_t begin, std::size_t end) {
    json body;
    body["src_lang"] = spec_.src_lang;
    body["tgt_lang"] = spec_.tgt_lang;
    json texts = json::array();
    for (std::size_t i = begin; i < end; ++i) texts.push_back(inputs[i].joined());
    body["texts"] = std::move(texts);
    const std::string payload = body.dump();

    httplib::Client cli(base_);
    cli.set_connection_timeout(0, spec_.timeout_ms * 1000LL);
    cli.set_read_timeout(0, spec_.timeout_ms * 1000LL);
    if (!spec_.bearer_token.empty()) cli.set_bearer_token_auth(spec_.bearer_token);

    const RetryPolicy& rp = spec_.retry;
    std::string last_failure = "no attempt made";
    for (int attempt = 1; attempt <= rp.max_attempts; ++attempt) {
      if (attempt > 1) backoff(attempt - 1);
      auto res = cli.Post(prefix_ + "/translate", payload, "application/json");
      if (!res) {
        last_failure = "transport failure (" + httplib::to_string(res.error()) + ")";
        continue;
      }
      if (res->status >= 500) {
        last_failure = "server status " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw TransportError("batch " + std::to_string(batch_index) + ": protocol error, status " +
                             std::to_string(res->status));
      parse_response(res->body, outputs, batch_index, begin, end);
      return;
    }
    throw TransportError("batch " + std::to_string(batch_index) + ": retries exhausted after " +
                         std::to_string(rp.max_attempts) + " attempts; last: " + last_failure);
  }

  void parse_response(const std::string& body, std::vector<TokenSeq>& outputs,
                      std::size_t batch_index, std::size_t begin, std::size_t end) {
    json parsed = json::parse(body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("translations") ||
        !parsed["translations"].is_array())
      throw TransportError("batch " + std::to_string(batch_index) +
                           ": protocol error, malformed response body");
    const json& translations = parsed["translations"];
    if (translations.size() != end - begin)
      throw TransportError("batch " + std::to_string(batch_index) +
                           ": protocol error, expected " + std::to_string(end - begin) +
                           " translations, got " + std::to_string(translations.size()));
    for (std::size_t i = begin; i < end; ++i) {
      if (!translations[i - begin].is_string())
        throw TransportError("batch " + std::to_string(batch_index) +
                             ": protocol error, non-string translation");
      outputs[i] = tokenize(translations[i - begin].get<std::string>());
    }
  }

  void backoff(int failed_attempts) {
    const RetryPolicy& rp = spec_.retry;
    double delay = rp.base_delay_ms;
    for (int i = 1; i < failed_attempts; ++i) delay *= rp.factor;
    if (rp.full_jitter) {
      thread_local std::mt19937_64 gen{std::random_device{}()};
      delay = std::uniform_real_distribution<double>(0.0, delay)(gen);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<std::int64_t>(delay)));
  }

  TranslatorSpec spec_;
  std::string base_;
  std::string prefix_;
};

}  // namespace

std::unique_ptr<Translator> make_remote_translator(const TranslatorSpec& spec) {
  return std::make_unique<RemoteTranslator>(spec);
}

// ---- stub server ----

StubBehavior stub_behavior_from_string(const std::string& name) {
  if (name == "echo") return StubBehavior::echo;
  if (name == "table") return StubBehavior::table;
  if (name == "inject_fault") return StubBehavior::inject_fault;
  throw UsageError("unknown stub behavior: " + name);
}

struct StubServer::Impl {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  StubBehavior behavior = StubBehavior::echo;
  std::map<std::string, std::string> dict;
  std::atomic<int> remaining_faults{0};
  mutable std::mutex mutex;
  std::vector<StubRequest> requests;

  void handle(const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("texts") || !body["texts"].is_array()) {
      res.status = 400;
      return;
    }
    {
      std::lock_guard<std::mutex> lock(mutex);
      requests.push_back(StubRequest{body.value("src_lang", ""), body.value("tgt_lang", ""),
                                     body["texts"].size()});
    }
    if (behavior == StubBehavior::inject_fault && remaining_faults.fetch_sub(1) > 0) {
      res.status = 503;
      return;
    }
    json translations = json::array();
    for (const json& t : body["texts"]) {
      std::string text = t.is_string() ? t.get<std::string>() : "";
      if (behavior == StubBehavior::table) {
        TokenSeq seq = tokenize(text);
        std::string out;
        for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
          if (i) out += ' ';
          auto it = dict.find(seq.tokens[i]);
          out += it != dict.end() ? it->second : seq.tokens[i];
        }
        translations.push_back(out);
      } else {
        translations.push_back(text);  // echo (and post-fault inject_fault)
      }
    }
    json reply;
    reply["translations"] = std::move(translations);
    res.set_content(reply.dump(), "application/json");
  }
};

StubServer::StubServer() : impl_(std::make_unique<Impl>()) {}

StubServer::~StubServer() { stop(); }

void StubServer::start(int port, StubBehavior behavior, const std::string& dict_path,
                       int fault_schedule) {
  impl_->behavior = behavior;
  impl_->remaining_faults = fault_schedule;
  if (!dict_path.empty()) impl_->dict = load_dictionary(dict_path);
  impl_->server.Post("/translate", [this](const httplib::Request& req, httplib::Response& res) {
    impl_->handle(req, res);
  });
  // default options include SO_REUSEPORT, which would let two stubs silently
  // share an explicit port; keep only SO_REUSEADDR so a second bind fails
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
    if (impl_->port <= 0) throw TransportError("stub server: cannot bind any port");
  } else {
    if (!impl_->server.bind_to_port("127.0.0.1", port))
      throw TransportError("stub server: cannot bind port " + std::to_string(port));
    impl_->port = port;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void StubServer::stop() {
  if (impl_->thread.joinable()) {
    impl_->server.stop();
    impl_->thread.join();
  }
}

int StubServer::port() const { return impl_->port; }

std::vector<StubRequest> StubServer::requests() const {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  return impl_->requests;
}

std::size_t StubServer::request_count() const {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  return impl_->requests.size();
}

}  // namespace btf
