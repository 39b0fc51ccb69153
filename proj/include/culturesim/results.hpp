#pragma once

#include "culturesim/engine.hpp"
#include "culturesim/layout.hpp"
#include "culturesim/lexical.hpp"
#include "culturesim/text.hpp"
#include "culturesim/tfidf.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

// Results folder layout:
//
//   <dir>/config.json            configuration, with the expanded topology (edges)
//   <dir>/summary_metrics.json   per-metric mean / std by generation over completed seeds
//   <dir>/seed_<s>/stories.json  [{agent_id, generation, story_index, text, raw_response}]
//   <dir>/seed_<s>/status.json   completion state and wall-clock times
//   <dir>/seed_<s>/similarity_matrix.csv
//   <dir>/seed_<s>/metrics.json
//   <dir>/seed_<s>/keywords.json
//   <dir>/seed_<s>/word_chains.json
//   <dir>/seed_<s>/layout.json
namespace culturesim {

namespace results {

std::filesystem::path config_path(const std::filesystem::path& dir);
std::filesystem::path summary_path(const std::filesystem::path& dir);
std::filesystem::path seed_dir(const std::filesystem::path& dir, int seed_index);

}  // namespace results

/// Stopwords, lexicon and embeddings named by AnalysisOptions, loaded once.
struct AnalysisResources {
  Stopwords stopwords;
  SentimentLexicon lexicon;
  std::optional<Embeddings> embeddings;

  /// Throws MissingEmbeddings / CorruptResults when a configured file is unreadable.
  static AnalysisResources load(const AnalysisOptions& options);
};

struct SeedAnalysis {
  SimilarityMatrix matrix;
  std::map<std::string, MetricValues> metrics;  // name -> per-generation values
  std::vector<std::vector<std::vector<Keyword>>> keywords;  // [generation][slot]
  WordChains chains;
  LayoutGraph layout;
};

/// Similarity matrix over the seed's stories (vector space fitted on that seed alone), the three
/// similarity series, per-generation sentiment means and, with embeddings, creativity means;
/// keywords, word chains and the similarity layout.
SeedAnalysis analyze_seed(const StoryGrid& grid, const SimulationConfig& config, int seed,
                          const AnalysisResources& resources);

std::string matrix_to_csv(const SimilarityMatrix& matrix);
/// Throws CorruptResults.
SimilarityMatrix matrix_from_csv(const std::string& csv);

nlohmann::ordered_json stories_to_json(const StoryGrid& grid);
/// Rebuilds the grid from a stories.json array. Returns the generations that are complete for
/// `shape`; throws CorruptResults on malformed entries.
StoryGrid stories_from_json(const nlohmann::json& j, const GridShape& shape, int seed);

void write_config(const std::filesystem::path& dir, const SimulationConfig& config);
void write_stories(const std::filesystem::path& seed_dir, const StoryGrid& grid);
void write_seed_status(const std::filesystem::path& seed_dir, const SeedResult& result, const std::string& state);
void write_seed_analysis(const std::filesystem::path& seed_dir, const SeedAnalysis& analysis, const StoryGrid& grid);

/// Aggregates `per_seed` metrics (completed seeds only) and writes summary_metrics.json.
std::map<std::string, AggregatedSeries> write_summary(const std::filesystem::path& dir,
                                                      const SimulationConfig& config,
                                                      const std::vector<SeedResult>& seeds,
                                                      const std::vector<SeedAnalysis>& analyses);

/// Loads config.json and every seed's stories, recomputes all analytics outputs and the
/// summary. Seeds whose stories are incomplete count as failed. Throws CorruptResults when the
/// folder has no config or no readable stories.
ExperimentResult analyze_results(const std::filesystem::path& dir);

}  // namespace culturesim
