#pragma once

#include <json.hpp>

#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace culturesim {

struct GenerationParams {
  int max_tokens = 1024;
  double temperature = 1.0;
  double timeout_seconds = 120.0;
  int retries = 2;

  /// Throws InvalidConfig.
  void validate() const;
};

enum class MockRule { EchoFirst, ConcatHead, Templated };

struct BackendSpec {
  enum class Kind { Completion, Chat, Mock };

  Kind kind = Kind::Mock;
  std::string url;            // Completion / Chat
  MockRule rule = MockRule::Templated;
  int head_words = 0;         // ConcatHead
  int parallelism = 4;
  double backoff_seconds = 1.0;
  std::string model;          // optional, sent only when non-empty
  std::string bearer_token;   // never serialized

  /// `http:URL`, `chat:URL`, `mock:echo`, `mock:concat:K`, `mock:template`.
  static BackendSpec parse(const std::string& text);
  std::string describe() const;

  /// Throws InvalidConfig.
  void validate() const;
};

struct GenerationContext {
  int agent_id = 0;
  int generation = 0;
  int seed = 0;
};

struct Generation {
  std::string text;  // trimmed, non-empty
  std::string raw;
};

/// Caps the number of in-flight requests; may be shared by several backends.
class RequestLimiter {
 public:
  explicit RequestLimiter(int permits);

  void acquire();
  void release();
  int permits() const noexcept { return permits_; }

  class Guard {
   public:
    explicit Guard(RequestLimiter& limiter) : limiter_(limiter) { limiter_.acquire(); }
    ~Guard() { limiter_.release(); }
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

   private:
    RequestLimiter& limiter_;
  };

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int permits_;
  int available_;
};

/// Text-generation interface; implementations are safe to call from many threads.
class Backend {
 public:
  virtual ~Backend() = default;

  /// Throws BackendError (unannotated).
  virtual Generation generate(const std::string& prompt, const GenerationParams& params,
                              const GenerationContext& context) const = 0;

  /// How many calls the engine may issue concurrently.
  virtual int parallelism() const = 0;
};

/// `limiter` overrides the backend's own parallelism cap (used to share one cap across jobs).
std::unique_ptr<Backend> make_backend(const BackendSpec& spec, std::shared_ptr<RequestLimiter> limiter = nullptr);

/// Story texts of the "Story k:" blocks of an assembled transformation prompt, in order.
std::vector<std::string> parse_story_blocks(const std::string& prompt);

/// Deterministic stand-in for a language model.
class MockBackend final : public Backend {
 public:
  MockBackend(MockRule rule, int head_words, int parallelism = 4);

  Generation generate(const std::string& prompt, const GenerationParams& params,
                      const GenerationContext& context) const override;
  int parallelism() const override { return parallelism_; }

 private:
  std::string templated(const std::string& prompt, const GenerationContext& context) const;

  MockRule rule_;
  int head_words_;
  int parallelism_;
};

/// Request bodies, exactly as sent on the wire.
std::string completion_request_body(const std::string& prompt, const GenerationParams& params,
                                    const std::string& model = {});
std::string chat_request_body(const std::string& prompt, const GenerationParams& params,
                              const std::string& model = {});

/// OpenAI-style completion (`choices[0].text`) or chat (`choices[0].message.content`) endpoint.
class HttpBackend final : public Backend {
 public:
  HttpBackend(BackendSpec spec, std::shared_ptr<RequestLimiter> limiter);

  Generation generate(const std::string& prompt, const GenerationParams& params,
                      const GenerationContext& context) const override;
  int parallelism() const override { return limiter_->permits(); }

 private:
  BackendSpec spec_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
  std::shared_ptr<RequestLimiter> limiter_;
};

nlohmann::json to_json(const BackendSpec& spec);
BackendSpec backend_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GenerationParams& params);
GenerationParams params_from_json(const nlohmann::json& j);

}  // namespace culturesim
