#include "culturesim/backend.hpp"

#include "culturesim/error.hpp"
#include "culturesim/io.hpp"

#include <httplib.h>

#include <array>
#include <cctype>
#include <chrono>
#include <thread>

namespace culturesim {

void GenerationParams::validate() const {
  if (max_tokens < 1) throw InvalidConfig("max_tokens must be at least 1");
  if (!(temperature >= 0.0)) throw InvalidConfig("temperature must be non-negative");
  if (!(timeout_seconds > 0.0)) throw InvalidConfig("timeout must be positive");
  if (retries < 0) throw InvalidConfig("retries must be non-negative");
}

namespace {

bool starts_with(const std::string& s, std::string_view prefix) { return s.rfind(prefix, 0) == 0; }

bool is_http_url(const std::string& url) {
  return (starts_with(url, "http://") && url.size() > 7) || (starts_with(url, "https://") && url.size() > 8);
}

}  // namespace

BackendSpec BackendSpec::parse(const std::string& text) {
  BackendSpec spec;
  if (starts_with(text, "http:") && !starts_with(text, "http://")) {
    spec.kind = Kind::Completion;
    spec.url = text.substr(5);
  } else if (starts_with(text, "chat:")) {
    spec.kind = Kind::Chat;
    spec.url = text.substr(5);
  } else if (starts_with(text, "mock:")) {
    spec.kind = Kind::Mock;
    auto rule = text.substr(5);
    if (rule == "echo") {
      spec.rule = MockRule::EchoFirst;
    } else if (rule == "template") {
      spec.rule = MockRule::Templated;
    } else if (starts_with(rule, "concat:")) {
      spec.rule = MockRule::ConcatHead;
      try {
        std::size_t used = 0;
        spec.head_words = std::stoi(rule.substr(7), &used);
        if (used != rule.size() - 7) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw InvalidConfig("mock:concat expects a word count, got '" + rule + "'");
      }
    } else {
      throw InvalidConfig("unknown mock rule '" + rule + "' (expected echo, concat:K or template)");
    }
  } else {
    throw InvalidConfig("backend must be http:URL, chat:URL or mock:RULE, got '" + text + "'");
  }
  spec.validate();
  return spec;
}

std::string BackendSpec::describe() const {
  switch (kind) {
    case Kind::Completion:
      return "http:" + url;
    case Kind::Chat:
      return "chat:" + url;
    case Kind::Mock:
      switch (rule) {
        case MockRule::EchoFirst:
          return "mock:echo";
        case MockRule::ConcatHead:
          return "mock:concat:" + std::to_string(head_words);
        case MockRule::Templated:
          return "mock:template";
      }
  }
  return "unknown";
}

void BackendSpec::validate() const {
  if (parallelism < 1) throw InvalidConfig("backend parallelism must be at least 1");
  if (backoff_seconds < 0) throw InvalidConfig("backoff must be non-negative");
  if (kind != Kind::Mock && !is_http_url(url)) {
    throw InvalidConfig("backend URL must be an absolute http(s) URL, got '" + url + "'");
  }
  if (kind == Kind::Mock && rule == MockRule::ConcatHead && head_words < 1) {
    throw InvalidConfig("mock:concat needs a positive word count");
  }
}

RequestLimiter::RequestLimiter(int permits) : permits_(permits < 1 ? 1 : permits), available_(permits_) {}

void RequestLimiter::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return available_ > 0; });
  --available_;
}

void RequestLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    ++available_;
  }
  cv_.notify_one();
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec, std::shared_ptr<RequestLimiter> limiter) {
  spec.validate();
  if (spec.kind == BackendSpec::Kind::Mock) {
    const int parallel = limiter ? limiter->permits() : spec.parallelism;
    return std::make_unique<MockBackend>(spec.rule, spec.head_words, parallel);
  }
  if (!limiter) limiter = std::make_shared<RequestLimiter>(spec.parallelism);
  return std::make_unique<HttpBackend>(spec, std::move(limiter));
}

std::vector<std::string> parse_story_blocks(const std::string& prompt) {
  std::vector<std::string> stories;
  std::string marker = "\n\nStory 1:\n";
  auto pos = prompt.find(marker);
  int k = 1;
  while (pos != std::string::npos) {
    const auto start = pos + marker.size();
    const std::string next_marker = "\n\nStory " + std::to_string(k + 1) + ":\n";
    const auto next = prompt.find(next_marker, start);
    stories.push_back(prompt.substr(start, next == std::string::npos ? std::string::npos : next - start));
    marker = next_marker;
    pos = next;
    ++k;
  }
  return stories;
}

// ---------------------------------------------------------------------------
// Mock backend

namespace {

constexpr std::array<std::string_view, 96> kMockVocabulary = {
    "king",     "queen",    "dragon",  "forest",   "river",    "castle",   "village",  "wizard",
    "fox",      "rabbit",   "owl",     "mountain", "ocean",    "ship",     "sailor",   "princess",
    "knight",   "garden",   "flower",  "star",     "moon",     "sun",      "cloud",    "storm",
    "treasure", "map",      "key",     "door",     "tower",    "bridge",   "wolf",     "bear",
    "child",    "mother",   "father",  "friend",   "stranger", "baker",    "farmer",   "robot",
    "journey",  "secret",   "promise", "song",     "dream",    "shadow",   "light",    "fire",
    "discovered", "wandered", "whispered", "laughed", "built",  "found",    "lost",     "sang",
    "climbed",  "crossed",  "followed", "helped",  "learned",  "painted",  "saved",    "watched",
    "brave",    "tiny",     "ancient", "golden",   "quiet",    "curious",  "gentle",   "clever",
    "dark",     "bright",   "hidden",  "magical",  "lonely",   "kind",     "wild",     "silver",
    "morning",  "night",    "winter",  "summer",   "apple",    "lantern",  "book",     "feather",
    "stone",    "bell",     "cave",    "island",   "meadow",   "valley",   "harbor",   "festival",
};

struct SplitMix64 {
  std::uint64_t state;
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(splitmix64(state) % n); }
};

std::vector<std::string> plain_words(const std::string& text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalpha(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      if (current.size() >= 2) words.push_back(current);
      current.clear();
    }
  }
  if (current.size() >= 2) words.push_back(current);
  return words;
}

std::vector<std::string> whitespace_words(const std::string& text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

}  // namespace

MockBackend::MockBackend(MockRule rule, int head_words, int parallelism)
    : rule_(rule), head_words_(head_words), parallelism_(parallelism < 1 ? 1 : parallelism) {}

std::string MockBackend::templated(const std::string& prompt, const GenerationContext& context) const {
  std::uint64_t h = fnv1a64(prompt);
  h = fnv1a64(std::to_string(context.agent_id) + ":" + std::to_string(context.generation) + ":" +
                  std::to_string(context.seed),
              h);
  SplitMix64 rng{h};

  std::vector<std::string> pool;
  for (const auto& story : parse_story_blocks(prompt)) {
    auto words = plain_words(story);
    pool.insert(pool.end(), words.begin(), words.end());
  }

  const std::size_t n_words = 30 + rng.below(21);
  std::string out;
  std::size_t in_sentence = 0;
  std::size_t sentence_len = 6 + rng.below(5);
  for (std::size_t i = 0; i < n_words; ++i) {
    std::string word = (!pool.empty() && rng.below(10) < 7) ? pool[rng.below(pool.size())]
                                                            : std::string(kMockVocabulary[rng.below(kMockVocabulary.size())]);
    if (in_sentence == 0) {
      if (!out.empty()) out += ' ';
      word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
    } else {
      out += ' ';
    }
    out += word;
    if (++in_sentence == sentence_len || i + 1 == n_words) {
      out += '.';
      in_sentence = 0;
      sentence_len = 6 + rng.below(5);
    }
  }
  return out;
}

Generation MockBackend::generate(const std::string& prompt, const GenerationParams&,
                                 const GenerationContext& context) const {
  std::string raw;
  const auto stories = parse_story_blocks(prompt);
  if (stories.empty() || rule_ == MockRule::Templated) {
    raw = templated(prompt, context);
  } else if (rule_ == MockRule::EchoFirst) {
    raw = stories.front();
  } else {
    std::vector<std::string> words;
    for (const auto& story : stories) {
      for (auto& w : whitespace_words(story)) {
        if (static_cast<int>(words.size()) == head_words_) break;
        words.push_back(std::move(w));
      }
    }
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) raw += ' ';
      raw += words[i];
    }
  }
  std::string text = trim(raw);
  if (text.empty()) throw BackendError(BackendError::Kind::EmptyGeneration, "mock rule produced empty text");
  return {std::move(text), std::move(raw)};
}

// ---------------------------------------------------------------------------
// HTTP backends

std::string completion_request_body(const std::string& prompt, const GenerationParams& params,
                                    const std::string& model) {
  nlohmann::ordered_json body;
  body["prompt"] = prompt;
  body["max_tokens"] = params.max_tokens;
  body["temperature"] = params.temperature;
  if (!model.empty()) body["model"] = model;
  return body.dump();
}

std::string chat_request_body(const std::string& prompt, const GenerationParams& params, const std::string& model) {
  nlohmann::ordered_json message;
  message["role"] = "user";
  message["content"] = prompt;
  nlohmann::ordered_json body;
  body["messages"] = nlohmann::ordered_json::array({message});
  body["max_tokens"] = params.max_tokens;
  body["temperature"] = params.temperature;
  if (!model.empty()) body["model"] = model;
  return body.dump();
}

HttpBackend::HttpBackend(BackendSpec spec, std::shared_ptr<RequestLimiter> limiter)
    : spec_(std::move(spec)), limiter_(std::move(limiter)) {
  const auto scheme_end = spec_.url.find("://") + 3;
  const auto path_start = spec_.url.find('/', scheme_end);
  origin_ = spec_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : spec_.url.substr(path_start);
}

namespace {

enum class Attempt { Ok, Retryable, Fatal };

}  // namespace

Generation HttpBackend::generate(const std::string& prompt, const GenerationParams& params,
                                 const GenerationContext&) const {
  if (prompt.empty()) throw InvalidConfig("prompt is empty");
  const bool chat = spec_.kind == BackendSpec::Kind::Chat;
  const std::string body =
      chat ? chat_request_body(prompt, params, spec_.model) : completion_request_body(prompt, params, spec_.model);

  const auto timeout = std::chrono::duration<double>(params.timeout_seconds);
  std::string last_error;
  double delay = spec_.backoff_seconds;

  for (int attempt = 0; attempt <= params.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      delay *= 2.0;
    }
    httplib::Result res;
    {
      RequestLimiter::Guard guard(*limiter_);
      httplib::Client client(origin_);
      client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      httplib::Headers headers;
      if (!spec_.bearer_token.empty()) headers.emplace("Authorization", "Bearer " + spec_.bearer_token);
      res = client.Post(path_, headers, body, "application/json");
    }
    if (!res) {
      last_error = "request to " + spec_.url + " failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_error = spec_.url + " returned HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw BackendError(BackendError::Kind::Unreachable,
                         spec_.url + " returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }

    auto json = nlohmann::json::parse(res->body, nullptr, false);
    const nlohmann::json* field = nullptr;
    if (json.is_object() && json.contains("choices") && json["choices"].is_array() && !json["choices"].empty()) {
      const auto& choice = json["choices"][0];
      if (chat) {
        if (choice.is_object() && choice.contains("message") && choice["message"].is_object() &&
            choice["message"].contains("content"))
          field = &choice["message"]["content"];
      } else if (choice.is_object() && choice.contains("text")) {
        field = &choice["text"];
      }
    }
    if (field == nullptr || !field->is_string()) {
      throw BackendError(BackendError::Kind::MalformedResponse,
                         std::string("response has no ") + (chat ? "choices[0].message.content" : "choices[0].text") +
                             " string");
    }
    std::string raw = field->get<std::string>();
    std::string text = trim(raw);
    if (text.empty()) throw BackendError(BackendError::Kind::EmptyGeneration, "endpoint returned empty text");
    return {std::move(text), std::move(raw)};
  }
  throw BackendError(BackendError::Kind::Unreachable,
                     last_error + " (after " + std::to_string(params.retries + 1) + " attempts)");
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const BackendSpec& spec) {
  nlohmann::json j;
  switch (spec.kind) {
    case BackendSpec::Kind::Completion:
      j["kind"] = "completion";
      j["url"] = spec.url;
      break;
    case BackendSpec::Kind::Chat:
      j["kind"] = "chat";
      j["url"] = spec.url;
      break;
    case BackendSpec::Kind::Mock:
      j["kind"] = "mock";
      j["rule"] = spec.describe().substr(5);
      break;
  }
  j["parallelism"] = spec.parallelism;
  if (!spec.model.empty()) j["model"] = spec.model;
  if (spec.backoff_seconds != 1.0) j["backoff_seconds"] = spec.backoff_seconds;
  return j;
}

BackendSpec backend_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidConfig("backend must be a JSON object");
  const auto kind = j.value("kind", std::string("mock"));
  BackendSpec spec;
  if (kind == "mock") {
    spec = BackendSpec::parse("mock:" + j.value("rule", std::string("template")));
  } else if (kind == "completion" || kind == "http") {
    spec.kind = BackendSpec::Kind::Completion;
    spec.url = j.value("url", std::string());
  } else if (kind == "chat") {
    spec.kind = BackendSpec::Kind::Chat;
    spec.url = j.value("url", std::string());
  } else {
    throw InvalidConfig("unknown backend kind '" + kind + "'");
  }
  spec.parallelism = j.value("parallelism", 4);
  spec.model = j.value("model", std::string());
  spec.backoff_seconds = j.value("backoff_seconds", 1.0);
  spec.validate();
  return spec;
}

nlohmann::json to_json(const GenerationParams& params) {
  return {{"max_tokens", params.max_tokens},
          {"temperature", params.temperature},
          {"timeout", params.timeout_seconds},
          {"retries", params.retries}};
}

GenerationParams params_from_json(const nlohmann::json& j) {
  GenerationParams params;
  if (j.is_null()) return params;
  if (!j.is_object()) throw InvalidConfig("params must be a JSON object");
  params.max_tokens = j.value("max_tokens", params.max_tokens);
  params.temperature = j.value("temperature", params.temperature);
  params.timeout_seconds = j.value("timeout", params.timeout_seconds);
  params.retries = j.value("retries", params.retries);
  params.validate();
  return params;
}

}  // namespace culturesim
