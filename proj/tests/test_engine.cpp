#include "culturesim/engine.hpp"
#include "culturesim/error.hpp"
#include "culturesim/results.hpp"

#include <doctest.h>

#include <mutex>

using namespace culturesim;

namespace {

// Returns the same story for every call.
class ConstantBackend final : public Backend {
 public:
  Generation generate(const std::string&, const GenerationParams&, const GenerationContext&) const override {
    return {"The fox crossed the river at dawn.", "The fox crossed the river at dawn."};
  }
  int parallelism() const override { return 4; }
};

// Records start and end events per generation and fails one chosen agent.
class RecordingBackend final : public Backend {
 public:
  explicit RecordingBackend(int fail_agent = -1, int fail_generation = -1)
      : fail_agent_(fail_agent), fail_generation_(fail_generation) {}

  Generation generate(const std::string& prompt, const GenerationParams& params,
                      const GenerationContext& context) const override {
    {
      std::lock_guard lock(mutex_);
      events.push_back({context.generation, true});
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    if (context.agent_id == fail_agent_ && context.generation == fail_generation_) {
      throw BackendError(BackendError::Kind::EmptyGeneration, "scripted failure");
    }
    auto g = inner_.generate(prompt, params, context);
    std::lock_guard lock(mutex_);
    events.push_back({context.generation, false});
    return g;
  }
  int parallelism() const override { return 4; }

  mutable std::vector<std::pair<int, bool>> events;  // (generation, is_start)

 private:
  MockBackend inner_{MockRule::Templated, 0};
  int fail_agent_;
  int fail_generation_;
  mutable std::mutex mutex_;
};

SimulationConfig mock_config(TopologyKind kind, int agents, int generations, const std::string& backend) {
  SimulationConfig c;
  c.n_agents = agents;
  c.n_generations = generations;
  c.topology = kind;
  c.prompts = {"test", "Tell me a story", "Combine these.\n"};
  c.backend = BackendSpec::parse(backend);
  c.rng_seed = 11;
  return c;
}

std::vector<Story> texts(std::initializer_list<const char*> items) {
  std::vector<Story> out;
  int i = 0;
  for (const char* t : items) {
    Story s;
    s.agent_id = i;
    s.story_index = i++;
    s.text = t;
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("generation zero writes one templated story per agent") {
  const auto topology = build_topology(TopologyKind::fully_connected(), 3);
  const auto agents = assign_personalities(UniformPersonality{}, 3);
  const PromptSet prompts{"p", "Tell me a story", "T"};
  const MockBackend backend(MockRule::Templated, 0);
  const auto a = run_generation(0, topology, agents, prompts, backend, {}, {}, 5);
  const auto b = run_generation(0, topology, agents, prompts, backend, {}, {}, 5);
  REQUIRE(a.size() == 3);
  CHECK(a[0].text != a[1].text);
  CHECK(a[1].text != a[2].text);
  for (int i = 0; i < 3; ++i) {
    CHECK(a[static_cast<std::size_t>(i)].text == b[static_cast<std::size_t>(i)].text);
    CHECK(a[static_cast<std::size_t>(i)].agent_id == i);
    CHECK(a[static_cast<std::size_t>(i)].story_index == i);
  }
}

TEST_CASE("echo copies the lowest-id neighbour") {
  const PromptSet prompts{"p", "Tell me a story", "T"};
  const MockBackend echo(MockRule::EchoFirst, 0);

  const auto circle = build_topology(TopologyKind::circle(), 3);
  const auto prior = texts({"alpha story", "beta story", "gamma story"});
  const auto next = run_generation(1, circle, assign_personalities(UniformPersonality{}, 3), prompts, echo, {}, prior, 0);
  for (int i = 0; i < 3; ++i) {
    const int lowest = circle.neighbors(i).front();
    CHECK(next[static_cast<std::size_t>(i)].text == prior[static_cast<std::size_t>(lowest)].text);
    CHECK(next[static_cast<std::size_t>(i)].story_index == 3 + i);
  }

  const auto pair = build_topology(TopologyKind::fully_connected(), 2);
  const auto swapped =
      run_generation(1, pair, assign_personalities(UniformPersonality{}, 2), prompts, echo, {}, texts({"A", "B"}), 0);
  CHECK(swapped[0].text == "B");
  CHECK(swapped[1].text == "A");
}

TEST_CASE("neighbour shuffling is seeded") {
  const auto topology = build_topology(TopologyKind::fully_connected(), 6);
  const auto agents = assign_personalities(UniformPersonality{}, 6);
  const PromptSet prompts{"p", "I", "T"};
  const MockBackend echo(MockRule::EchoFirst, 0);
  const auto prior = texts({"s0", "s1", "s2", "s3", "s4", "s5"});
  const auto a = run_generation(1, topology, agents, prompts, echo, {}, prior, 3, true);
  const auto b = run_generation(1, topology, agents, prompts, echo, {}, prior, 3, true);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].text == b[i].text);
}

TEST_CASE("sequence chain with echo is a fixed point") {
  auto config = mock_config(TopologyKind::sequence(), 50, 1, "mock:echo");
  const auto backend = make_backend(config.backend);
  const auto result = run_simulation(config, 0, *backend);
  REQUIRE(result.complete);
  REQUIRE(result.stories.size() == 50);
  for (int g = 0; g < 50; ++g) {
    REQUIRE(result.stories[static_cast<std::size_t>(g)].size() == 1);
    const auto& s = result.stories[static_cast<std::size_t>(g)][0];
    CHECK(s.text == result.stories[0][0].text);
    CHECK(s.story_index == g);
    CHECK(s.generation == g);
  }
}

TEST_CASE("grid indices for ten agents over ten generations") {
  auto config = mock_config(TopologyKind::fully_connected(), 10, 10, "mock:concat:12");
  const auto backend = make_backend(config.backend);
  const auto result = run_simulation(config, 0, *backend);
  REQUIRE(result.complete);
  int expected = 0;
  for (const auto& generation : result.stories)
    for (const auto& s : generation) CHECK(s.story_index == expected++);
  CHECK(expected == 100);
  CHECK(result.stories[0][3].story_index == 3);
  CHECK(result.stories[1][3].story_index == 13);
  CHECK(result.stories[1][3].generation == 1);
}

TEST_CASE("seeds count up from the base seed") {
  auto config = mock_config(TopologyKind::circle(), 4, 2, "mock:template");
  config.n_seeds = 5;
  for (int i = 0; i < 5; ++i) CHECK(config.seed_for(i) == 11 + i);
  const auto backend = make_backend(config.backend);
  const auto s0 = run_simulation(config, 0, *backend);
  const auto s1 = run_simulation(config, 1, *backend);
  CHECK(s0.seed == 11);
  CHECK(s1.seed == 12);
  CHECK(s0.stories[0][0].text != s1.stories[0][0].text);
}

TEST_CASE("generations are separated by a barrier") {
  auto config = mock_config(TopologyKind::fully_connected(), 6, 4, "mock:template");
  const RecordingBackend backend;
  REQUIRE(run_simulation(config, 0, backend).complete);
  std::vector<int> open(4, 0);
  std::vector<int> finished(4, 0);
  for (auto [g, start] : backend.events) {
    if (start) {
      if (g > 0) CHECK(finished[static_cast<std::size_t>(g - 1)] == 6);
      ++open[static_cast<std::size_t>(g)];
    } else {
      ++finished[static_cast<std::size_t>(g)];
    }
  }
  CHECK(finished == std::vector<int>{6, 6, 6, 6});
}

TEST_CASE("a failing agent stops the seed with its coordinates") {
  auto config = mock_config(TopologyKind::circle(), 5, 4, "mock:template");
  const RecordingBackend backend(3, 2);
  const auto result = run_simulation(config, 0, backend);
  CHECK_FALSE(result.complete);
  CHECK(result.stories.size() == 2);
  CHECK(result.error.find("agent 3, generation 2") != std::string::npos);
}

TEST_CASE("identical outputs across seeds give zero spread") {
  auto config = mock_config(TopologyKind::fully_connected(), 3, 3, "mock:echo");
  config.n_seeds = 5;
  const ConstantBackend backend;
  const auto resources = AnalysisResources::load(config.analysis);
  std::vector<MetricValues> within;
  for (int i = 0; i < 5; ++i) {
    const auto seed = run_simulation(config, i, backend);
    within.push_back(analyze_seed(seed.stories, config, seed.seed, resources).metrics.at("within_generation"));
  }
  const auto agg = aggregate(within);
  for (std::size_t g = 0; g < 3; ++g) {
    CHECK(*agg.std[g] < 1e-12);
    CHECK(*agg.mean[g] == doctest::Approx(1.0));
    CHECK(agg.count[g] == 5);
  }
}

TEST_CASE("aggregation of a single seed and of undefined values") {
  const auto one = aggregate({{0.5, std::nullopt, 0.25}});
  CHECK(*one.mean[0] == 0.5);
  CHECK(*one.std[0] == 0.0);
  CHECK_FALSE(one.mean[1]);
  CHECK(one.count[1] == 0);

  const auto two = aggregate({{0.2}, {0.6}});
  CHECK(*two.mean[0] == doctest::Approx(0.4));
  CHECK(*two.std[0] == doctest::Approx(0.2));  // population standard deviation
}

TEST_CASE("configuration validation and json round trip") {
  auto config = mock_config(TopologyKind::caveman(2), 10, 3, "mock:concat:5");
  config.personalities = mixed_population("C", "N", 10);
  config.params.temperature = 0.5;
  config.shuffle_neighbors = true;
  CHECK_NOTHROW(config.validate());
  const auto back = config_from_json(to_json(config));
  CHECK(to_json(back) == to_json(config));
  CHECK(back.topology == config.topology);

  auto bad = config;
  bad.topology = TopologyKind::caveman(3);
  CHECK_THROWS_AS(bad.validate(), InvalidPopulation);
  bad = config;
  bad.personalities = PerAgentPersonality{{"a", "b"}};
  CHECK_THROWS_AS(bad.validate(), LengthMismatch);
  bad = config;
  bad.n_seeds = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"n_agents", "ten"}}), InvalidConfig);
}

TEST_CASE("sequence grid shape") {
  const auto config = mock_config(TopologyKind::sequence(), 50, 7, "mock:echo");
  CHECK(config.grid().agents_per_generation == 1);
  CHECK(config.grid().generations == 50);
  const auto sync = mock_config(TopologyKind::circle(), 10, 7, "mock:echo");
  CHECK(sync.grid().agents_per_generation == 10);
  CHECK(sync.grid().generations == 7);
}
