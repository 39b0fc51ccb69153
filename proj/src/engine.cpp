#include "culturesim/engine.hpp"

#include "culturesim/error.hpp"
#include "culturesim/io.hpp"
#include "culturesim/results.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <thread>

namespace culturesim {

// ---------------------------------------------------------------------------
// Configuration

void SimulationConfig::validate() const {
  if (!is_valid_name(name)) throw InvalidConfig("name must be a non-empty identifier of [A-Za-z0-9_-], got '" + name + "'");
  if (n_agents < 1) throw InvalidPopulation("n_agents must be at least 1");
  if (n_generations < 1) throw InvalidConfig("n_generations must be at least 1");
  if (n_seeds < 1) throw InvalidConfig("n_seeds must be at least 1");
  validate_population(topology, n_agents);
  if (topology.network == NetworkKind::FullyConnected && n_agents == 1 && n_generations > 1) {
    throw InvalidPopulation("a single fully-connected agent has no neighbours to read after generation 0");
  }
  prompts.validate();
  assign_personalities(personalities, n_agents);
  backend.validate();
  params.validate();
  if (analysis.keywords_per_story < 1) throw InvalidConfig("keywords per story must be at least 1");
  if (analysis.layout_iterations < 1) throw InvalidConfig("layout iterations must be at least 1");
  if (!(analysis.edge_threshold >= 0.0)) throw InvalidConfig("edge threshold must be non-negative");
}

GridShape SimulationConfig::grid() const {
  if (topology.network == NetworkKind::Sequence) return {1, n_agents};
  return {n_agents, n_generations};
}

nlohmann::json to_json(const SimulationConfig& config) {
  nlohmann::json j;
  j["name"] = config.name;
  j["n_agents"] = config.n_agents;
  j["n_generations"] = config.n_generations;
  j["n_seeds"] = config.n_seeds;
  j["rng_seed"] = config.rng_seed;
  j["shuffle_neighbors"] = config.shuffle_neighbors;
  nlohmann::json topology{{"kind", to_string(config.topology.network)}};
  if (config.topology.network == NetworkKind::Caveman) topology["n_cliques"] = config.topology.n_cliques;
  j["topology"] = topology;
  j["prompts"] = {{"name", config.prompts.name},
                  {"initialization", config.prompts.initialization},
                  {"transformation", config.prompts.transformation}};
  if (const auto* uniform = std::get_if<UniformPersonality>(&config.personalities)) {
    j["personalities"] = {{"mode", "uniform"}, {"text", uniform->text}};
  } else {
    j["personalities"] = {{"mode", "per_agent"}, {"texts", std::get<PerAgentPersonality>(config.personalities).texts}};
  }
  j["backend"] = to_json(config.backend);
  j["params"] = to_json(config.params);
  nlohmann::json analysis{{"keywords_per_story", config.analysis.keywords_per_story},
                          {"layout_iterations", config.analysis.layout_iterations},
                          {"edge_threshold", config.analysis.edge_threshold}};
  if (config.analysis.embeddings) analysis["embeddings"] = config.analysis.embeddings->string();
  if (config.analysis.lexicon) analysis["lexicon"] = config.analysis.lexicon->string();
  if (config.analysis.stopwords) analysis["stopwords"] = config.analysis.stopwords->string();
  j["analysis"] = analysis;
  return j;
}

SimulationConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidConfig("configuration must be a JSON object");
  try {
    SimulationConfig c;
    c.name = j.value("name", c.name);
    c.n_agents = j.value("n_agents", c.n_agents);
    c.n_generations = j.value("n_generations", c.n_generations);
    c.n_seeds = j.value("n_seeds", c.n_seeds);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    c.shuffle_neighbors = j.value("shuffle_neighbors", false);

    if (j.contains("topology")) {
      const auto& t = j.at("topology");
      c.topology.network = parse_network_kind(t.at("kind").get<std::string>());
      c.topology.n_cliques = t.value("n_cliques", 0);
    }
    const auto& p = j.at("prompts");
    c.prompts.name = p.value("name", std::string());
    c.prompts.initialization = p.at("initialization").get<std::string>();
    c.prompts.transformation = p.at("transformation").get<std::string>();

    if (j.contains("personalities")) {
      const auto& pers = j.at("personalities");
      const auto mode = pers.value("mode", std::string("uniform"));
      if (mode == "uniform") {
        c.personalities = UniformPersonality{pers.value("text", std::string())};
      } else if (mode == "per_agent") {
        c.personalities = PerAgentPersonality{pers.at("texts").get<std::vector<std::string>>()};
      } else {
        throw InvalidConfig("personalities.mode must be uniform or per_agent");
      }
    }
    if (j.contains("backend")) c.backend = backend_from_json(j.at("backend"));
    if (j.contains("params")) c.params = params_from_json(j.at("params"));
    if (j.contains("analysis")) {
      const auto& a = j.at("analysis");
      c.analysis.keywords_per_story = a.value("keywords_per_story", c.analysis.keywords_per_story);
      c.analysis.layout_iterations = a.value("layout_iterations", c.analysis.layout_iterations);
      c.analysis.edge_threshold = a.value("edge_threshold", c.analysis.edge_threshold);
      if (a.contains("embeddings") && !a["embeddings"].is_null()) c.analysis.embeddings = a["embeddings"].get<std::string>();
      if (a.contains("lexicon") && !a["lexicon"].is_null()) c.analysis.lexicon = a["lexicon"].get<std::string>();
      if (a.contains("stopwords") && !a["stopwords"].is_null()) c.analysis.stopwords = a["stopwords"].get<std::string>();
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("malformed configuration: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

void seeded_shuffle(std::vector<Story>& stories, int seed, int generation, int agent) {
  std::uint64_t state =
      fnv1a64(std::to_string(seed) + ":" + std::to_string(generation) + ":" + std::to_string(agent));
  for (std::size_t i = stories.size(); i > 1; --i) {
    std::swap(stories[i - 1], stories[static_cast<std::size_t>(splitmix64(state) % i)]);
  }
}

template <typename Task>
void parallel_for(int count, int workers, Task&& task) {
  workers = std::clamp(workers, 1, std::max(count, 1));
  std::atomic<int> next{0};
  auto drain = [&] {
    for (int i = next++; i < count; i = next++) task(i);
  };
  if (workers == 1) {
    drain();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(drain);
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::vector<Story> run_generation(int g, const Topology& topology, std::span<const AgentSpec> agents,
                                  const PromptSet& prompts, const Backend& backend, const GenerationParams& params,
                                  std::span<const Story> prior, int seed, bool shuffle_neighbors) {
  const int n = topology.n_agents();
  if (static_cast<int>(agents.size()) != n) {
    throw LengthMismatch("expected " + std::to_string(n) + " agents, got " + std::to_string(agents.size()));
  }
  if (g < 0 || (g == 0) != prior.empty() || (g > 0 && static_cast<int>(prior.size()) != n)) {
    throw GenerationOutOfRange("generation " + std::to_string(g) + " needs " +
                               (g == 0 ? std::string("no prior stories") : "all " + std::to_string(n) + " prior stories"));
  }

  std::vector<Story> out(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));

  parallel_for(n, backend.parallelism(), [&](int a) {
    try {
      const AgentSpec& agent = agents[static_cast<std::size_t>(a)];
      std::string prompt;
      if (g == 0) {
        prompt = assemble_initialization(agent, prompts);
      } else {
        std::vector<Story> inputs;
        for (AgentId nb : topology.neighbors(a)) inputs.push_back(prior[static_cast<std::size_t>(nb)]);
        if (shuffle_neighbors) seeded_shuffle(inputs, seed, g, a);
        prompt = assemble_transformation(agent, prompts, inputs);
      }
      Generation result = backend.generate(prompt, params, {a, g, seed});
      out[static_cast<std::size_t>(a)] =
          Story{a, g, seed, story_index(a, n, g), std::move(result.text), std::move(result.raw)};
    } catch (...) {
      errors[static_cast<std::size_t>(a)] = std::current_exception();
    }
  });

  for (int a = 0; a < n; ++a) {
    if (!errors[static_cast<std::size_t>(a)]) continue;
    try {
      std::rethrow_exception(errors[static_cast<std::size_t>(a)]);
    } catch (const BackendError& e) {
      throw e.annotated(a, g);
    }
  }
  return out;
}

SeedResult run_simulation(const SimulationConfig& config, int seed_index, const Backend& backend,
                          const ProgressCallback& progress, const FlushCallback& flush) {
  config.validate();
  SeedResult result;
  result.seed_index = seed_index;
  result.seed = config.seed_for(seed_index);
  result.started_at = now_iso8601();
  const auto started = std::chrono::steady_clock::now();
  const auto agents = assign_personalities(config.personalities, config.n_agents);
  const GridShape shape = config.grid();

  try {
    if (config.topology.network == NetworkKind::Sequence) {
      // One agent per step; agent k reads only agent k-1's story.
      for (int k = 0; k < shape.generations; ++k) {
        if (progress) progress({seed_index, k});
        const AgentSpec& agent = agents[static_cast<std::size_t>(k)];
        std::string prompt;
        if (k == 0) {
          prompt = assemble_initialization(agent, config.prompts);
        } else {
          prompt = assemble_transformation(agent, config.prompts, std::span<const Story>(result.stories.back()));
        }
        Generation gen;
        try {
          gen = backend.generate(prompt, config.params, {k, k, result.seed});
        } catch (const BackendError& e) {
          throw e.annotated(k, k);
        }
        result.stories.push_back({Story{k, k, result.seed, story_index(0, 1, k), std::move(gen.text), std::move(gen.raw)}});
        if (flush) flush(result.stories);
      }
    } else {
      const Topology topology = build_topology(config.topology, config.n_agents);
      for (int g = 0; g < shape.generations; ++g) {
        if (progress) progress({seed_index, g});
        std::span<const Story> prior;
        if (g > 0) prior = result.stories.back();
        result.stories.push_back(run_generation(g, topology, agents, config.prompts, backend, config.params, prior,
                                                result.seed, config.shuffle_neighbors));
        if (flush) flush(result.stories);
      }
    }
    result.complete = true;
  } catch (const BackendError& e) {
    result.error = "seed " + std::to_string(seed_index) + ": " + e.what();
  }
  result.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  result.finished_at = now_iso8601();
  return result;
}

int ExperimentResult::completed_seeds() const {
  return static_cast<int>(std::count_if(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.complete; }));
}

ExperimentResult run_experiment(const SimulationConfig& config, const std::filesystem::path& out_dir,
                                const ExperimentOptions& options) {
  config.validate();
  const auto resources = AnalysisResources::load(config.analysis);

  BackendSpec spec = config.backend;
  if (const char* token = std::getenv("CULTURESIM_API_KEY")) spec.bearer_token = token;
  const auto backend = make_backend(spec, options.limiter);

  std::filesystem::create_directories(out_dir);
  write_config(out_dir, config);

  ExperimentResult experiment;
  std::vector<SeedAnalysis> analyses;
  for (int s = 0; s < config.n_seeds; ++s) {
    const auto dir = results::seed_dir(out_dir, s);
    std::filesystem::create_directories(dir);
    SeedResult pending;
    pending.seed_index = s;
    pending.seed = config.seed_for(s);
    write_stories(dir, {});
    write_seed_status(dir, pending, "running");

    SeedResult result = run_simulation(config, s, *backend, options.progress,
                                       [&dir](const StoryGrid& grid) { write_stories(dir, grid); });
    write_stories(dir, result.stories);
    write_seed_status(dir, result, result.complete ? "complete" : "failed");

    if (result.complete) {
      analyses.push_back(analyze_seed(result.stories, config, result.seed, resources));
      write_seed_analysis(dir, analyses.back(), result.stories);
    }
    experiment.seeds.push_back(std::move(result));
  }
  experiment.summary = write_summary(out_dir, config, experiment.seeds, analyses);
  return experiment;
}

}  // namespace culturesim
