#pragma once

#include "culturesim/agents.hpp"
#include "culturesim/backend.hpp"
#include "culturesim/metrics.hpp"
#include "culturesim/topology.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace culturesim {

struct AnalysisOptions {
  int keywords_per_story = 10;
  int layout_iterations = 50;
  double edge_threshold = 0.05;
  std::optional<std::filesystem::path> embeddings;  // enables the creativity series
  std::optional<std::filesystem::path> lexicon;     // bundled lexicon when absent
  std::optional<std::filesystem::path> stopwords;   // bundled list when absent
};

/// Shape of a seed's story grid. A Sequence of N agents is N generations of one story.
struct GridShape {
  int agents_per_generation = 0;
  int generations = 0;

  int stories() const noexcept { return agents_per_generation * generations; }
};

struct SimulationConfig {
  std::string name = "simulation";
  int n_agents = 10;
  int n_generations = 10;
  int n_seeds = 1;
  TopologyKind topology = TopologyKind::fully_connected();
  PromptSet prompts;
  PersonalityAssignment personalities = UniformPersonality{};
  BackendSpec backend;
  GenerationParams params;
  std::int64_t rng_seed = 0;
  bool shuffle_neighbors = false;
  AnalysisOptions analysis;

  /// Throws InvalidConfig (or InvalidPopulation / LengthMismatch).
  void validate() const;
  GridShape grid() const;
  int seed_for(int seed_index) const { return static_cast<int>(rng_seed + seed_index); }
};

nlohmann::json to_json(const SimulationConfig& config);
/// Throws InvalidConfig for missing or mistyped fields. Does not call validate().
SimulationConfig config_from_json(const nlohmann::json& j);

/// grid[generation][slot]
using StoryGrid = std::vector<std::vector<Story>>;

/// One synchronous generation: every agent of `topology` writes one story, from the
/// initialization prompt when `prior` is empty (g = 0) or from its neighbours' stories in
/// `prior` otherwise. Agent calls run concurrently up to the backend's parallelism; the
/// result is ordered by agent id. Backend errors come back annotated with (agent, g); when
/// several agents fail the lowest agent id is reported.
std::vector<Story> run_generation(int g, const Topology& topology, std::span<const AgentSpec> agents,
                                  const PromptSet& prompts, const Backend& backend, const GenerationParams& params,
                                  std::span<const Story> prior, int seed, bool shuffle_neighbors = false);

struct Progress {
  int seed_index = 0;
  int generation = 0;  // generation about to run
};
using ProgressCallback = std::function<void(const Progress&)>;
/// Called with the stories completed so far after every generation.
using FlushCallback = std::function<void(const StoryGrid&)>;

struct SeedResult {
  int seed_index = 0;
  int seed = 0;
  StoryGrid stories;
  bool complete = false;
  std::string error;  // set when !complete
  double elapsed_seconds = 0.0;
  std::string started_at;  // UTC, ISO 8601
  std::string finished_at;
};

/// Runs every generation of one seed. Backend failures stop the seed and are reported in the
/// result (complete = false) rather than thrown.
SeedResult run_simulation(const SimulationConfig& config, int seed_index, const Backend& backend,
                          const ProgressCallback& progress = {}, const FlushCallback& flush = {});

struct ExperimentOptions {
  ProgressCallback progress;
  std::shared_ptr<RequestLimiter> limiter;  // shared cap across concurrent experiments
};

struct ExperimentResult {
  std::vector<SeedResult> seeds;
  /// metric name -> cross-seed aggregate over completed seeds
  std::map<std::string, AggregatedSeries> summary;
  int completed_seeds() const;
  bool all_complete() const { return completed_seeds() == static_cast<int>(seeds.size()); }
};

/// Runs every seed, persisting stories per generation and analytics per seed under
/// `out_dir` (see results.hpp for the layout), then writes summary_metrics.json.
ExperimentResult run_experiment(const SimulationConfig& config, const std::filesystem::path& out_dir,
                                const ExperimentOptions& options = {});

}  // namespace culturesim
