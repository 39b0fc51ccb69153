#include "culturesim/backend.hpp"
#include "culturesim/error.hpp"

#include <arpa/inet.h>
#include <doctest.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>
#include <httplib.h>

#include <atomic>
#include <functional>
#include <thread>

using namespace culturesim;

namespace {

// A port nothing listens on: bind an ephemeral port, then release it.
int closed_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

// Local HTTP endpoint answering every POST with `respond(attempt, request)`.
class StubServer {
 public:
  using Responder = std::function<void(int attempt, const httplib::Request&, httplib::Response&)>;

  explicit StubServer(Responder respond) : respond_(std::move(respond)) {
    server_.Post(".*", [this](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mutex_);
        bodies_.push_back(req.body);
        auth_.push_back(req.get_header_value("Authorization"));
      }
      respond_(attempts_++, req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }
  int attempts() const { return attempts_; }
  std::vector<std::string> bodies() {
    std::lock_guard lock(mutex_);
    return bodies_;
  }
  std::vector<std::string> auth() {
    std::lock_guard lock(mutex_);
    return auth_;
  }

 private:
  Responder respond_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> attempts_{0};
  std::mutex mutex_;
  std::vector<std::string> bodies_;
  std::vector<std::string> auth_;
};

void json_reply(httplib::Response& res, const std::string& body, int status = 200) {
  res.status = status;
  res.set_content(body, "application/json");
}

BackendSpec fast(BackendSpec spec) {
  spec.backoff_seconds = 0.01;
  return spec;
}

GenerationParams quick_params() {
  GenerationParams p;
  p.timeout_seconds = 5;
  return p;
}

BackendError::Kind failure_kind(const Backend& backend, const std::string& prompt = "Tell me a story") {
  try {
    backend.generate(prompt, quick_params(), {});
  } catch (const BackendError& e) {
    return e.kind();
  }
  FAIL("expected a BackendError");
  return BackendError::Kind::Unreachable;
}

}  // namespace

TEST_CASE("backend spec parsing") {
  CHECK(BackendSpec::parse("mock:echo").rule == MockRule::EchoFirst);
  const auto concat = BackendSpec::parse("mock:concat:3");
  CHECK(concat.rule == MockRule::ConcatHead);
  CHECK(concat.head_words == 3);
  CHECK(BackendSpec::parse("mock:template").rule == MockRule::Templated);
  const auto chat = BackendSpec::parse("chat:http://localhost:8000/v1/chat/completions");
  CHECK(chat.kind == BackendSpec::Kind::Chat);
  CHECK(chat.url == "http://localhost:8000/v1/chat/completions");
  CHECK(BackendSpec::parse("http:http://localhost:8000/v1/completions").kind == BackendSpec::Kind::Completion);
  CHECK_THROWS_AS(BackendSpec::parse("mock:concat:0"), InvalidConfig);
  CHECK_THROWS_AS(BackendSpec::parse("mock:shout"), InvalidConfig);
  CHECK_THROWS_AS(BackendSpec::parse("ftp://x"), InvalidConfig);
}

TEST_CASE("backend spec json round trip omits the token") {
  auto spec = BackendSpec::parse("chat:http://localhost:1/v1/chat/completions");
  spec.model = "mistral";
  spec.bearer_token = "secret";
  const auto j = to_json(spec);
  CHECK(j.dump().find("secret") == std::string::npos);
  const auto back = backend_from_json(j);
  CHECK(back.kind == spec.kind);
  CHECK(back.url == spec.url);
  CHECK(back.model == "mistral");
  CHECK(back.bearer_token.empty());
}

TEST_CASE("story block parsing") {
  CHECK(parse_story_blocks("T\n\nStory 1:\nA\n\nStory 2:\nB") == std::vector<std::string>{"A", "B"});
  CHECK(parse_story_blocks("Tell me a story").empty());
}

TEST_CASE("mock rules") {
  const GenerationParams params;
  const MockBackend echo(MockRule::EchoFirst, 0);
  CHECK(echo.generate("T\n\nStory 1:\nS", params, {0, 1, 0}).text == "S");

  const MockBackend concat(MockRule::ConcatHead, 3);
  CHECK(concat.generate("T\n\nStory 1:\na b\n\nStory 2:\nc d", params, {0, 1, 0}).text == "a b c");

  const MockBackend templ(MockRule::Templated, 0);
  const auto a = templ.generate("Tell me a story", params, {0, 0, 7});
  const auto b = templ.generate("Tell me a story", params, {0, 0, 7});
  const auto c = templ.generate("Tell me a story", params, {1, 0, 7});
  CHECK(a.text == b.text);
  CHECK(a.text != c.text);
  CHECK(!a.text.empty());

  // Without story blocks every rule writes a templated story.
  CHECK(echo.generate("Tell me a story", params, {2, 0, 7}).text == templ.generate("Tell me a story", params, {2, 0, 7}).text);
}

TEST_CASE("request bodies") {
  GenerationParams p;
  p.max_tokens = 256;
  p.temperature = 0.7;
  CHECK(completion_request_body("Tell me a story", p) ==
        R"({"prompt":"Tell me a story","max_tokens":256,"temperature":0.7})");
  CHECK(chat_request_body("Tell me a story", p) ==
        R"({"messages":[{"role":"user","content":"Tell me a story"}],"max_tokens":256,"temperature":0.7})");
  CHECK(chat_request_body("x", p, "m") ==
        R"({"messages":[{"role":"user","content":"x"}],"max_tokens":256,"temperature":0.7,"model":"m"})");
}

TEST_CASE("completion endpoint") {
  StubServer stub([](int, const httplib::Request&, httplib::Response& res) {
    json_reply(res, R"({"choices":[{"text":"  Once upon a time.\n"}]})");
  });
  auto spec = BackendSpec::parse("http:" + stub.url("/v1/completions"));
  spec.bearer_token = "tok";
  const auto backend = make_backend(spec);
  const auto g = backend->generate("Tell me a story", quick_params(), {});
  CHECK(g.text == "Once upon a time.");
  CHECK(g.raw == "  Once upon a time.\n");
  REQUIRE(stub.bodies().size() == 1);
  CHECK(stub.bodies()[0] == completion_request_body("Tell me a story", quick_params()));
  CHECK(stub.auth()[0] == "Bearer tok");
}

TEST_CASE("chat endpoint") {
  StubServer stub([](int, const httplib::Request&, httplib::Response& res) {
    json_reply(res, R"({"choices":[{"message":{"role":"assistant","content":"A story."}}]})");
  });
  const auto backend = make_backend(BackendSpec::parse("chat:" + stub.url("/v1/chat/completions")));
  CHECK(backend->generate("Tell me a story", quick_params(), {}).text == "A story.");
  CHECK(stub.bodies()[0] == chat_request_body("Tell me a story", quick_params()));
  CHECK(stub.auth()[0].empty());
}

TEST_CASE("server errors are retried with backoff") {
  StubServer stub([](int attempt, const httplib::Request&, httplib::Response& res) {
    if (attempt < 2)
      json_reply(res, "{}", attempt == 0 ? 503 : 429);
    else
      json_reply(res, R"({"choices":[{"text":"third time"}]})");
  });
  const auto backend = make_backend(fast(BackendSpec::parse("http:" + stub.url("/v1/completions"))));
  CHECK(backend->generate("p", quick_params(), {}).text == "third time");
  CHECK(stub.attempts() == 3);
}

TEST_CASE("retries are bounded") {
  StubServer stub([](int, const httplib::Request&, httplib::Response& res) { json_reply(res, "{}", 500); });
  const auto backend = make_backend(fast(BackendSpec::parse("http:" + stub.url("/v1/completions"))));
  CHECK(failure_kind(*backend) == BackendError::Kind::Unreachable);
  CHECK(stub.attempts() == quick_params().retries + 1);
}

TEST_CASE("client errors are not retried") {
  StubServer stub([](int, const httplib::Request&, httplib::Response& res) { json_reply(res, "{}", 404); });
  const auto backend = make_backend(fast(BackendSpec::parse("http:" + stub.url("/nope"))));
  CHECK(failure_kind(*backend) == BackendError::Kind::Unreachable);
  CHECK(stub.attempts() == 1);
}

TEST_CASE("unreachable endpoint") {
  const int port = closed_port();
  auto spec = fast(BackendSpec::parse("http:http://127.0.0.1:" + std::to_string(port) + "/v1/completions"));
  const auto backend = make_backend(spec);
  CHECK(failure_kind(*backend) == BackendError::Kind::Unreachable);
}

TEST_CASE("malformed and empty responses") {
  StubServer malformed([](int, const httplib::Request&, httplib::Response& res) {
    json_reply(res, R"({"choices":[{"message":{"content":"wrong shape"}}]})");
  });
  CHECK(failure_kind(*make_backend(BackendSpec::parse("http:" + malformed.url("/c")))) ==
        BackendError::Kind::MalformedResponse);

  StubServer not_json([](int, const httplib::Request&, httplib::Response& res) { json_reply(res, "<html>"); });
  CHECK(failure_kind(*make_backend(BackendSpec::parse("http:" + not_json.url("/c")))) ==
        BackendError::Kind::MalformedResponse);

  StubServer empty([](int, const httplib::Request&, httplib::Response& res) {
    json_reply(res, R"({"choices":[{"text":"   \n"}]})");
  });
  CHECK(failure_kind(*make_backend(BackendSpec::parse("http:" + empty.url("/c")))) ==
        BackendError::Kind::EmptyGeneration);
}

TEST_CASE("request limiter caps in-flight requests") {
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  StubServer stub([&](int, const httplib::Request&, httplib::Response& res) {
    const int now = ++in_flight;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    --in_flight;
    json_reply(res, R"({"choices":[{"text":"ok"}]})");
  });
  auto limiter = std::make_shared<RequestLimiter>(2);
  const auto backend = make_backend(BackendSpec::parse("http:" + stub.url("/c")), limiter);
  std::vector<std::thread> callers;
  for (int i = 0; i < 6; ++i) callers.emplace_back([&] { backend->generate("p", quick_params(), {}); });
  for (auto& t : callers) t.join();
  CHECK(stub.attempts() == 6);
  CHECK(peak.load() <= 2);
}

TEST_CASE("generation parameter validation") {
  GenerationParams p;
  p.max_tokens = 0;
  CHECK_THROWS_AS(p.validate(), InvalidConfig);
  p = {};
  p.temperature = -1;
  CHECK_THROWS_AS(p.validate(), InvalidConfig);
}
