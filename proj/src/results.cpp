#include "culturesim/results.hpp"

#include "culturesim/error.hpp"
#include "culturesim/io.hpp"

#include <sstream>

namespace culturesim {

namespace results {

std::filesystem::path config_path(const std::filesystem::path& dir) { return dir / "config.json"; }
std::filesystem::path summary_path(const std::filesystem::path& dir) { return dir / "summary_metrics.json"; }
std::filesystem::path seed_dir(const std::filesystem::path& dir, int seed_index) {
  return dir / ("seed_" + std::to_string(seed_index));
}

}  // namespace results

namespace {

const char* const kMetricOrder[] = {"within_generation", "successive", "first_generation",
                                    "polarity",          "subjectivity", "creativity"};

nlohmann::ordered_json series_json(const MetricValues& values) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& v : values) {
    if (v) {
      out.push_back(*v);
    } else {
      out.push_back(nullptr);
    }
  }
  return out;
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

AnalysisResources AnalysisResources::load(const AnalysisOptions& options) {
  AnalysisResources r{options.stopwords ? Stopwords::from_file(*options.stopwords) : Stopwords::english(),
                      options.lexicon ? SentimentLexicon::from_file(*options.lexicon) : SentimentLexicon::english(),
                      std::nullopt};
  if (options.embeddings) r.embeddings = Embeddings::from_file(*options.embeddings);
  return r;
}

SeedAnalysis analyze_seed(const StoryGrid& grid, const SimulationConfig& config, int seed,
                          const AnalysisResources& resources) {
  std::vector<std::string> texts;
  for (const auto& generation : grid)
    for (const auto& story : generation) texts.push_back(story.text);

  SeedAnalysis out;
  out.matrix = similarity_matrix(texts);
  const Eigen::Index per_gen = grid.empty() ? 1 : static_cast<Eigen::Index>(grid.front().size());

  const SimilaritySeries sims = similarity_series(out.matrix, per_gen);
  out.metrics["within_generation"] = sims.within_generation;
  out.metrics["successive"] = sims.successive;
  out.metrics["first_generation"] = sims.first_generation;

  MetricValues polarity, subjectivity, creativity_means;
  for (const auto& generation : grid) {
    double pol = 0.0, subj = 0.0, creative_sum = 0.0;
    int creative_n = 0;
    std::vector<std::vector<Keyword>> keywords;
    for (const auto& story : generation) {
      const Sentiment s = sentiment(story.text, resources.lexicon);
      pol += s.polarity;
      subj += s.subjectivity;
      if (resources.embeddings) {
        if (auto c = creativity(story.text, &*resources.embeddings, resources.stopwords)) {
          creative_sum += *c;
          ++creative_n;
        }
      }
      keywords.push_back(extract_keywords(story.text, config.analysis.keywords_per_story, resources.stopwords));
    }
    const double n = static_cast<double>(generation.size());
    polarity.push_back(pol / n);
    subjectivity.push_back(subj / n);
    creativity_means.push_back(creative_n ? std::optional<double>(creative_sum / creative_n) : std::nullopt);
    out.keywords.push_back(std::move(keywords));
  }
  out.metrics["polarity"] = polarity;
  out.metrics["subjectivity"] = subjectivity;
  if (resources.embeddings) out.metrics["creativity"] = creativity_means;

  out.chains = word_chains(out.keywords);
  out.layout = spring_layout(out.matrix, {config.analysis.layout_iterations, config.analysis.edge_threshold,
                                          static_cast<std::uint64_t>(static_cast<std::int64_t>(seed))});
  return out;
}

std::string matrix_to_csv(const SimilarityMatrix& matrix) {
  std::string out;
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (j) out += ',';
      out += format_double(matrix(i, j));
    }
    out += '\n';
  }
  return out;
}

SimilarityMatrix matrix_from_csv(const std::string& csv) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw CorruptResults("similarity matrix cell '" + cell + "' is not a number");
      }
    }
    rows.push_back(std::move(row));
  }
  SimilarityMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw CorruptResults("similarity matrix is not square");
    for (std::size_t j = 0; j < rows.size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

nlohmann::ordered_json stories_to_json(const StoryGrid& grid) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& generation : grid) {
    for (const auto& story : generation) {
      nlohmann::ordered_json entry;
      entry["agent_id"] = story.agent_id;
      entry["generation"] = story.generation;
      entry["story_index"] = story.story_index;
      entry["text"] = story.text;
      entry["raw_response"] = story.raw_response;
      out.push_back(std::move(entry));
    }
  }
  return out;
}

StoryGrid stories_from_json(const nlohmann::json& j, const GridShape& shape, int seed) {
  if (!j.is_array()) throw CorruptResults("stories.json must hold an array");
  std::vector<std::optional<Story>> slots(static_cast<std::size_t>(shape.stories()));
  try {
    for (const auto& entry : j) {
      Story s;
      s.agent_id = entry.at("agent_id").get<int>();
      s.generation = entry.at("generation").get<int>();
      s.story_index = entry.at("story_index").get<int>();
      s.text = entry.at("text").get<std::string>();
      s.raw_response = entry.value("raw_response", std::string());
      s.seed = seed;
      if (s.story_index < 0 || s.story_index >= shape.stories() ||
          s.story_index / shape.agents_per_generation != s.generation) {
        throw CorruptResults("story_index " + std::to_string(s.story_index) + " inconsistent with the grid");
      }
      if (trim(s.text).empty()) throw CorruptResults("story " + std::to_string(s.story_index) + " has empty text");
      slots[static_cast<std::size_t>(s.story_index)] = std::move(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptResults(std::string("malformed stories.json: ") + e.what());
  }
  StoryGrid grid;
  for (int g = 0; g < shape.generations; ++g) {
    std::vector<Story> generation;
    for (int a = 0; a < shape.agents_per_generation; ++a) {
      auto& slot = slots[static_cast<std::size_t>(story_index(a, shape.agents_per_generation, g))];
      if (!slot) return grid;
      generation.push_back(std::move(*slot));
    }
    grid.push_back(std::move(generation));
  }
  return grid;
}

void write_config(const std::filesystem::path& dir, const SimulationConfig& config) {
  nlohmann::json j = to_json(config);
  j["topology"] = to_json(build_topology(config.topology, config.n_agents));
  write_file_atomic(results::config_path(dir), j.dump(2) + "\n");
}

void write_stories(const std::filesystem::path& seed_dir, const StoryGrid& grid) {
  write_file_atomic(seed_dir / "stories.json", dump(stories_to_json(grid)));
}

void write_seed_status(const std::filesystem::path& seed_dir, const SeedResult& result, const std::string& state) {
  nlohmann::ordered_json j;
  j["status"] = state;
  j["seed_index"] = result.seed_index;
  j["seed"] = result.seed;
  j["completed_generations"] = result.stories.size();
  if (!result.error.empty()) j["error"] = result.error;
  j["started_at"] = result.started_at;
  j["finished_at"] = result.finished_at;
  j["elapsed_seconds"] = result.elapsed_seconds;
  write_file_atomic(seed_dir / "status.json", dump(j));
}

void write_seed_analysis(const std::filesystem::path& seed_dir, const SeedAnalysis& analysis, const StoryGrid& grid) {
  write_file_atomic(seed_dir / "similarity_matrix.csv", matrix_to_csv(analysis.matrix));

  nlohmann::ordered_json metrics;
  for (const char* name : kMetricOrder) {
    if (auto it = analysis.metrics.find(name); it != analysis.metrics.end()) metrics[name] = series_json(it->second);
  }
  write_file_atomic(seed_dir / "metrics.json", dump(metrics));

  auto keywords = nlohmann::ordered_json::array();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t a = 0; a < grid[g].size(); ++a) {
      const Story& story = grid[g][a];
      auto list = nlohmann::ordered_json::array();
      for (const auto& kw : analysis.keywords[g][a]) {
        nlohmann::ordered_json k;
        k["word"] = kw.word;
        k["frequency"] = kw.frequency;
        list.push_back(std::move(k));
      }
      nlohmann::ordered_json entry;
      entry["story_index"] = story.story_index;
      entry["agent_id"] = story.agent_id;
      entry["generation"] = story.generation;
      entry["keywords"] = std::move(list);
      keywords.push_back(std::move(entry));
    }
  }
  write_file_atomic(seed_dir / "keywords.json", dump(keywords));
  write_file_atomic(seed_dir / "word_chains.json", dump(nlohmann::ordered_json(to_json(analysis.chains))));
  write_file_atomic(seed_dir / "layout.json", dump(nlohmann::ordered_json(to_json(analysis.layout))));
}

std::map<std::string, AggregatedSeries> write_summary(const std::filesystem::path& dir,
                                                      const SimulationConfig& config,
                                                      const std::vector<SeedResult>& seeds,
                                                      const std::vector<SeedAnalysis>& analyses) {
  std::map<std::string, AggregatedSeries> summary;
  for (const char* name : kMetricOrder) {
    std::vector<MetricValues> per_seed;
    for (const auto& a : analyses) {
      if (auto it = a.metrics.find(name); it != a.metrics.end()) per_seed.push_back(it->second);
    }
    if (!per_seed.empty()) summary[name] = aggregate(per_seed);
  }

  nlohmann::ordered_json j;
  j["n_seeds"] = config.n_seeds;
  auto completed = nlohmann::ordered_json::array();
  auto failed = nlohmann::ordered_json::array();
  for (const auto& s : seeds) (s.complete ? completed : failed).push_back(s.seed_index);
  j["completed_seeds"] = completed;
  j["failed_seeds"] = failed;
  j["shortfall"] = config.n_seeds - static_cast<int>(completed.size());
  j["generations"] = config.grid().generations;
  nlohmann::ordered_json metrics;
  for (const char* name : kMetricOrder) {
    auto it = summary.find(name);
    if (it == summary.end()) continue;
    nlohmann::ordered_json m;
    m["mean"] = series_json(it->second.mean);
    m["std"] = series_json(it->second.std);
    m["count"] = it->second.count;
    metrics[name] = std::move(m);
  }
  j["metrics"] = std::move(metrics);
  write_file_atomic(results::summary_path(dir), dump(j));
  return summary;
}

ExperimentResult analyze_results(const std::filesystem::path& dir) {
  if (!std::filesystem::is_regular_file(results::config_path(dir))) {
    throw CorruptResults("no config.json in " + dir.string());
  }
  nlohmann::json config_json = nlohmann::json::parse(read_file(results::config_path(dir)), nullptr, false);
  if (config_json.is_discarded()) throw CorruptResults("config.json is not valid JSON");
  SimulationConfig config;
  try {
    config = config_from_json(config_json);
    config.validate();
  } catch (const InvalidConfig& e) {
    throw CorruptResults(std::string("config.json: ") + e.what());
  }
  const auto resources = AnalysisResources::load(config.analysis);
  const GridShape shape = config.grid();

  ExperimentResult experiment;
  std::vector<SeedAnalysis> analyses;
  int readable = 0;
  for (int s = 0; s < config.n_seeds; ++s) {
    const auto seed_path = results::seed_dir(dir, s);
    SeedResult result;
    result.seed_index = s;
    result.seed = config.seed_for(s);
    const auto stories_file = seed_path / "stories.json";
    if (!std::filesystem::is_regular_file(stories_file)) {
      result.error = "seed " + std::to_string(s) + ": no stories.json";
      experiment.seeds.push_back(std::move(result));
      continue;
    }
    auto stories = nlohmann::json::parse(read_file(stories_file), nullptr, false);
    if (stories.is_discarded()) throw CorruptResults(stories_file.string() + " is not valid JSON");
    result.stories = stories_from_json(stories, shape, result.seed);
    ++readable;
    result.complete = static_cast<int>(result.stories.size()) == shape.generations;
    if (!result.complete) {
      result.error = "seed " + std::to_string(s) + ": " + std::to_string(result.stories.size()) + " of " +
                     std::to_string(shape.generations) + " generations present";
    } else {
      analyses.push_back(analyze_seed(result.stories, config, result.seed, resources));
      write_seed_analysis(seed_path, analyses.back(), result.stories);
    }
    experiment.seeds.push_back(std::move(result));
  }
  if (readable == 0) throw CorruptResults("no seed in " + dir.string() + " has a stories.json");
  experiment.summary = write_summary(dir, config, experiment.seeds, analyses);
  return experiment;
}

}  // namespace culturesim
