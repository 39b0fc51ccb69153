#include "culturesim/cli.hpp"

#include "culturesim/engine.hpp"
#include "culturesim/error.hpp"
#include "culturesim/io.hpp"
#include "culturesim/results.hpp"
#include "culturesim/service.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <iostream>
#include <sstream>

namespace culturesim {

namespace {

struct RunFlags {
  std::string config_file;
  std::string name;
  int agents = 0;
  int generations = 0;
  int seeds = 0;
  std::string network;
  int cliques = 0;
  std::string init;
  std::string transform;
  std::string personality;
  std::string personalities_file;
  std::string backend;
  int parallelism = 0;
  int max_tokens = 0;
  double temperature = 0.0;
  double timeout = 0.0;
  int retries = 0;
  std::int64_t rng_seed = 0;
  bool shuffle_neighbors = false;
  int keywords = 0;
  int layout_iterations = 0;
  double edge_threshold = 0.0;
  std::string embeddings;
  std::string lexicon;
  std::string stopwords;
  std::string registry;
  std::string out;
};

std::optional<std::filesystem::path> registry_subdir(const std::string& root, const char* kind) {
  if (root.empty()) return std::nullopt;
  return std::filesystem::path(root) / kind;
}

/// A personalities file is a JSON array of strings or one entry per line. Entries naming a
/// registered personality are replaced by its text.
std::vector<std::string> read_personalities(const std::filesystem::path& path, const TextRegistry& registry) {
  const std::string content = read_file(path);
  std::vector<std::string> entries;
  auto parsed = nlohmann::json::parse(content, nullptr, false);
  if (!parsed.is_discarded() && parsed.is_array()) {
    for (const auto& e : parsed) {
      if (!e.is_string()) throw InvalidConfig(path.string() + ": personalities must be strings");
      entries.push_back(e.get<std::string>());
    }
  } else {
    std::istringstream in(content);
    for (std::string line; std::getline(in, line);) entries.push_back(std::string(trim(line)));
    while (!entries.empty() && entries.back().empty()) entries.pop_back();
  }
  for (auto& e : entries) {
    if (auto text = registry.find(e)) e = *text;
  }
  return entries;
}

SimulationConfig build_config(const CLI::App& cmd, const RunFlags& f) {
  SimulationConfig config;
  if (!f.config_file.empty()) {
    auto j = nlohmann::json::parse(read_file(f.config_file), nullptr, false);
    if (j.is_discarded()) throw InvalidConfig(f.config_file + ": not valid JSON");
    config = config_from_json(j);
  } else {
    config.prompts.name = "TellMeAStory+CombineTwo";
  }
  const TextRegistry prompts(TextRegistry::Kind::Prompts, registry_subdir(f.registry, "prompts"));
  const TextRegistry personalities(TextRegistry::Kind::Personalities, registry_subdir(f.registry, "personalities"));
  auto given = [&](const char* flag) { return cmd.count(flag) > 0; };

  if (given("--name")) config.name = f.name;
  if (given("--agents")) config.n_agents = f.agents;
  if (given("--generations")) config.n_generations = f.generations;
  if (given("--seeds")) config.n_seeds = f.seeds;
  if (given("--network")) config.topology = TopologyKind{parse_network_kind(f.network), 0};
  if (given("--cliques")) config.topology.n_cliques = f.cliques;

  if (f.config_file.empty() || given("--init")) {
    config.prompts.initialization = prompts.resolve(given("--init") ? f.init : "TellMeAStory");
  }
  if (f.config_file.empty() || given("--transform")) {
    config.prompts.transformation = prompts.resolve(given("--transform") ? f.transform : "CombineTwo");
  }
  if (given("--init") || given("--transform")) {
    config.prompts.name = (given("--init") ? f.init : std::string("custom")) + "+" +
                          (given("--transform") ? f.transform : std::string("custom"));
  }
  if (given("--personality")) config.personalities = UniformPersonality{personalities.resolve(f.personality)};
  if (given("--personalities")) {
    config.personalities = PerAgentPersonality{read_personalities(f.personalities_file, personalities)};
  }

  if (given("--backend")) config.backend = BackendSpec::parse(f.backend);
  if (given("--parallelism")) config.backend.parallelism = f.parallelism;
  if (given("--max-tokens")) config.params.max_tokens = f.max_tokens;
  if (given("--temperature")) config.params.temperature = f.temperature;
  if (given("--timeout")) config.params.timeout_seconds = f.timeout;
  if (given("--retries")) config.params.retries = f.retries;
  if (given("--rng-seed")) config.rng_seed = f.rng_seed;
  if (given("--shuffle-neighbors")) config.shuffle_neighbors = f.shuffle_neighbors;

  if (given("--keywords")) config.analysis.keywords_per_story = f.keywords;
  if (given("--layout-iterations")) config.analysis.layout_iterations = f.layout_iterations;
  if (given("--edge-threshold")) config.analysis.edge_threshold = f.edge_threshold;
  if (given("--embeddings")) config.analysis.embeddings = f.embeddings;
  if (given("--lexicon")) config.analysis.lexicon = f.lexicon;
  if (given("--stopwords")) config.analysis.stopwords = f.stopwords;

  if (f.config_file.empty() && !given("--backend")) throw InvalidConfig("--backend is required");
  config.validate();
  return config;
}

void report_seeds(const ExperimentResult& result, std::ostream& err) {
  for (const auto& s : result.seeds) {
    if (!s.complete) err << "seed " << s.seed_index << " failed: " << s.error << "\n";
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulates the transmission of stories through populations of language-model agents."};
  app.name(args.empty() ? "culturesim" : std::filesystem::path(args[0]).filename().string());
  app.require_subcommand(1);

  RunFlags f;
  auto* run = app.add_subcommand("run", "Run a simulation and analyse its results");
  run->add_option("--config", f.config_file, "Load a configuration JSON; other flags override it")->check(CLI::ExistingFile);
  run->add_option("--name", f.name, "Experiment name");
  run->add_option("--agents", f.agents, "Number of agents")->check(CLI::PositiveNumber);
  run->add_option("--generations", f.generations, "Number of generations (ignored for sequence)")
      ->check(CLI::PositiveNumber);
  run->add_option("--seeds", f.seeds, "Number of independent seeds")->check(CLI::PositiveNumber);
  run->add_option("--network", f.network, "fully_connected | circle | caveman | sequence");
  run->add_option("--cliques", f.cliques, "Number of cliques (caveman)")->check(CLI::PositiveNumber);
  run->add_option("--init", f.init, "Initialization prompt: registry name or file");
  run->add_option("--transform", f.transform, "Transformation prompt: registry name or file");
  auto* uniform = run->add_option("--personality", f.personality, "Personality for every agent: registry name or file");
  auto* per_agent = run->add_option("--personalities", f.personalities_file,
                                    "One personality per agent: JSON array or one entry per line")
                        ->check(CLI::ExistingFile);
  uniform->excludes(per_agent);
  run->add_option("--backend", f.backend, "http:URL | chat:URL | mock:echo | mock:concat:K | mock:template");
  run->add_option("--parallelism", f.parallelism, "Concurrent backend requests")->check(CLI::PositiveNumber);
  run->add_option("--max-tokens", f.max_tokens, "Maximum tokens per story")->check(CLI::PositiveNumber);
  run->add_option("--temperature", f.temperature, "Sampling temperature")->check(CLI::NonNegativeNumber);
  run->add_option("--timeout", f.timeout, "Request timeout in seconds")->check(CLI::PositiveNumber);
  run->add_option("--retries", f.retries, "Retries per failed request")->check(CLI::NonNegativeNumber);
  run->add_option("--rng-seed", f.rng_seed, "Seed of the first run; later seeds count up from it");
  run->add_flag("--shuffle-neighbors", f.shuffle_neighbors, "Shuffle the order of neighbour stories");
  run->add_option("--keywords", f.keywords, "Keywords per story")->check(CLI::PositiveNumber);
  run->add_option("--layout-iterations", f.layout_iterations, "Spring layout iterations")->check(CLI::NonNegativeNumber);
  run->add_option("--edge-threshold", f.edge_threshold, "Minimum similarity drawn as a layout edge");
  run->add_option("--embeddings", f.embeddings, "Word vectors (text format) for the creativity metric")
      ->check(CLI::ExistingFile);
  run->add_option("--lexicon", f.lexicon, "Sentiment lexicon replacing the bundled one")->check(CLI::ExistingFile);
  run->add_option("--stopwords", f.stopwords, "Stopword list replacing the bundled one")->check(CLI::ExistingFile);
  run->add_option("--registry", f.registry, "Directory holding prompts/ and personalities/");
  run->add_option("--out", f.out, "Results folder (default results/<name>)");

  std::string analyze_dir;
  auto* analyze = app.add_subcommand("analyze", "Recompute analytics for an existing results folder");
  analyze->add_option("dir", analyze_dir, "Results folder")->required();

  std::string host = "127.0.0.1";
  int port = 8080;
  ServiceOptions service;
  std::string results_root = "results";
  std::string registry;
  std::string static_dir;
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port")->capture_default_str();
  serve->add_option("--results", results_root, "Folder receiving one sub-folder per job")->capture_default_str();
  serve->add_option("--registry", registry, "Directory holding prompts/ and personalities/");
  serve->add_option("--jobs", service.max_concurrent_jobs, "Jobs running at once")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve->add_option("--parallelism", service.parallelism, "Backend requests in flight across all jobs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve->add_option("--static", static_dir, "Directory served at /")->check(CLI::ExistingDirectory);

  std::vector<std::string> argv_storage = args.empty() ? std::vector<std::string>{"culturesim"} : args;
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    for (auto* sub : app.get_subcommands()) err << sub->help();
    if (app.get_subcommands().empty()) err << app.help();
    return kExitUsage;
  }

  if (*run) {
    SimulationConfig config;
    try {
      config = build_config(*run, f);
    } catch (const InvalidConfig& e) {
      err << "invalid configuration: " << e.what() << "\n";
      return kExitUsage;
    } catch (const CorruptResults& e) {
      err << e.what() << "\n";
      return kExitUsage;
    }
    const std::filesystem::path out_dir = f.out.empty() ? std::filesystem::path("results") / config.name : std::filesystem::path(f.out);
    try {
      ExperimentOptions options;
      options.progress = [&err, &config](const Progress& p) {
        err << "seed " << p.seed_index + 1 << "/" << config.n_seeds << ", generation " << p.generation + 1 << "/"
            << config.grid().generations << "\n";
      };
      const auto result = run_experiment(config, out_dir, options);
      report_seeds(result, err);
      out << results::summary_path(out_dir).string() << "\n";
      return result.all_complete() ? kExitOk : kExitFailure;
    } catch (const InvalidConfig& e) {
      err << "invalid configuration: " << e.what() << "\n";
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitFailure;
    }
  }

  if (*analyze) {
    try {
      const auto result = analyze_results(analyze_dir);
      report_seeds(result, err);
      out << results::summary_path(analyze_dir).string() << "\n";
      return result.all_complete() ? kExitOk : kExitFailure;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitFailure;
    }
  }

  service.results_root = results_root;
  if (!registry.empty()) service.registry_dir = registry;
  if (!static_dir.empty()) service.static_dir = static_dir;
  SimulationService simulations(std::move(service));
  httplib::Server server;
  simulations.mount(server);
  if (!server.bind_to_port(host, port)) {
    err << "error: cannot listen on " << host << ":" << port << "\n";
    return kExitFailure;
  }
  out << "listening on http://" << host << ":" << port << std::endl;
  server.listen_after_bind();
  return kExitOk;
}

}  // namespace culturesim
