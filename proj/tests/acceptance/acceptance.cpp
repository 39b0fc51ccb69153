// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit when any gated one fails.

#include "culturesim/engine.hpp"
#include "culturesim/io.hpp"
#include "culturesim/lexical.hpp"
#include "culturesim/results.hpp"
#include "culturesim/tfidf.hpp"

#include "oracles.hpp"

#include <chrono>
#include <functional>
#include <iostream>
#include <queue>
#include <sstream>

using namespace culturesim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("culturesim_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

SimulationConfig mock_config(TopologyKind kind, int agents, int generations, int seeds, const std::string& backend) {
  SimulationConfig c;
  c.name = "acceptance";
  c.n_agents = agents;
  c.n_generations = generations;
  c.n_seeds = seeds;
  c.topology = kind;
  c.prompts = {"TellMeAStory+CombineTwo", "Tell me a story",
               "You will receive stories. Pick the two stories you prefer and combine them."};
  c.backend = BackendSpec::parse(backend);
  c.rng_seed = 2024;
  return c;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().filename() == "status.json") continue;
    files[fs::relative(entry.path(), dir).string()] = read_file(entry.path());
  }
  return files;
}

// Matrices written by every experiment in this binary, checked by criterion 7.
std::vector<std::pair<std::string, SimilarityMatrix>> produced_matrices;

void collect_matrices(const fs::path& dir, int seeds) {
  for (int s = 0; s < seeds; ++s) {
    const auto path = results::seed_dir(dir, s) / "similarity_matrix.csv";
    produced_matrices.emplace_back(path.string(), matrix_from_csv(read_file(path)));
  }
}

Outcome echo_chain() {
  Outcome o;
  const auto dir = scratch("echo_chain");
  auto config = mock_config(TopologyKind::sequence(), 50, 1, 1, "mock:echo");
  const auto start = std::chrono::steady_clock::now();
  const auto result = run_experiment(config, dir);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.require(result.all_complete(), "seed did not complete");
  if (!o.pass) return o;
  collect_matrices(dir, 1);

  const auto& grid = result.seeds[0].stories;
  o.require(grid.size() == 50, "expected 50 stories");
  for (const auto& g : grid) o.require(g.size() == 1 && g[0].text == grid[0][0].text, "stories differ");

  const auto stories = read_file(results::seed_dir(dir, 0) / "stories.json");
  const auto j = nlohmann::json::parse(stories);
  for (const auto& s : j) o.require(s["text"] == j[0]["text"], "stored stories differ");

  const auto m = matrix_from_csv(read_file(results::seed_dir(dir, 0) / "similarity_matrix.csv"));
  o.require(m.rows() == 50 && m.cols() == 50, "matrix is not 50x50");
  o.require((m.array() - 1.0).abs().maxCoeff() <= 1e-9, "matrix entries differ from 1");

  const auto metrics = nlohmann::json::parse(read_file(results::seed_dir(dir, 0) / "metrics.json"));
  for (int g = 1; g < 50; ++g) {
    o.require(std::abs(metrics["successive"][g].get<double>() - 1.0) <= 1e-9, "successive similarity != 1");
    o.require(std::abs(metrics["first_generation"][g].get<double>() - 1.0) <= 1e-9, "first-generation similarity != 1");
  }
  o.require(seconds < 5.0, "took " + format_double(seconds) + " s");
  o.detail = o.pass ? "50 identical stories, 50x50 ones matrix, metrics 1.0 for g>=1, " + format_double(seconds) + " s"
                    : o.detail;
  return o;
}

Outcome tfidf_oracle() {
  Outcome o;
  const std::vector<std::vector<std::string>> corpora{
      {"The cat sat on the mat.", "The dog sat on the log.", "A cat and a dog met."},
      {"Once upon a time there was a dragon", "The dragon slept in a cave", "A knight found the cave",
       "Time passed and the knight grew old"},
      {"red green blue", "green blue yellow", "blue yellow orange", "orange red red red", "purple"},
      {"magic forest magic forest", "forest of magic", "learning is magic", "no shared words here"},
  };
  double worst = 0.0;
  for (const auto& docs : corpora) {
    const auto expected = oracle::tfidf(docs);
    const auto space = VectorSpace::fit(docs);
    o.require(static_cast<std::size_t>(space.size()) == expected.vocabulary.size(), "vocabulary size differs");
    if (!o.pass) return o;
    for (std::size_t d = 0; d < docs.size(); ++d) {
      const Eigen::VectorXd v = space.vectorize(docs[d]);
      for (std::size_t k = 0; k < expected.vocabulary.size(); ++k)
        worst = std::max(worst, std::abs(v(static_cast<Eigen::Index>(k)) - expected.vectors[d][k]));
    }
    const auto m = similarity_matrix(space, docs);
    for (std::size_t a = 0; a < docs.size(); ++a)
      for (std::size_t b = 0; b < docs.size(); ++b)
        worst = std::max(worst, std::abs(m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) -
                                         expected.similarity[a][b]));
  }
  o.require(worst <= 1e-9, "max deviation " + format_double(worst));
  if (o.pass) o.detail = "4 corpora, max deviation " + format_double(worst);
  return o;
}

Outcome metric_oracle() {
  Outcome o;
  // Arbitrary, deliberately non-symmetric entries.
  Eigen::Matrix<double, 9, 9> m;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) m(i, j) = std::fmod(0.618 * (i + 1) * (i + 3) + 0.271 * (j + 2), 1.0);
  auto at = [&](int i, int j) { return m(i, j); };
  double worst = 0.0;
  for (int g = 0; g < 3; ++g) {
    worst = std::max(worst, std::abs(*within_generation_similarity(m, 3, g) - oracle::within_generation(at, 3, g)));
    worst = std::max(worst, std::abs(*first_generation_similarity(m, 3, g) - oracle::first_generation(at, 3, g)));
    if (g > 0) worst = std::max(worst, std::abs(successive_similarity(m, 3, g) - oracle::successive(at, 3, g)));
  }
  o.require(worst <= 1e-12, "max deviation " + format_double(worst));
  if (o.pass) o.detail = "3x3 grid, max deviation " + format_double(worst);
  return o;
}

bool is_connected(const Topology& t) {
  std::vector<bool> seen(static_cast<std::size_t>(t.n_agents()), false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int count = 1;
  while (!q.empty()) {
    const int a = q.front();
    q.pop();
    for (int b : t.neighbors(a))
      if (!seen[static_cast<std::size_t>(b)]) {
        seen[static_cast<std::size_t>(b)] = true;
        ++count;
        q.push(b);
      }
  }
  return count == t.n_agents();
}

Outcome topology_properties() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  int caveman_cases = 0;
  for (int n = 4; n <= 30; ++n) {
    const auto full = build_topology(TopologyKind::fully_connected(), n);
    o.require(full.edges().size() == static_cast<std::size_t>(n * (n - 1) / 2), "complete graph edges, n=" + std::to_string(n));

    const auto circle = build_topology(TopologyKind::circle(), n);
    o.require(circle.edges().size() == static_cast<std::size_t>(n), "circle edges, n=" + std::to_string(n));
    for (int i = 0; i < n; ++i) o.require(circle.neighbors(i).size() == 2, "circle degree, n=" + std::to_string(n));

    for (int c = 2; c <= n / 3; ++c) {
      if (n % c) continue;
      const int m = n / c;
      const auto cave = build_topology(TopologyKind::caveman(c), n);
      o.require(is_connected(cave), "caveman disconnected");
      o.require(cave.edges().size() == static_cast<std::size_t>(c * (m * (m - 1) / 2 - 1) + c),
                "caveman edges, c=" + std::to_string(c) + " m=" + std::to_string(m));
      ++caveman_cases;
    }

    const auto seq = build_topology(TopologyKind::sequence(), n);
    o.require(seq.schedule() == Schedule::SequentialChain, "sequence schedule");
    o.require(seq.neighbors(0).empty(), "sequence head has neighbours");
    for (int i = 1; i < n; ++i) o.require(seq.neighbors(i) == std::vector<int>{i - 1}, "sequence is not a path");
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.require(seconds < 1.0, "took " + format_double(seconds) + " s");
  if (o.pass) o.detail = "n=4..30, " + std::to_string(caveman_cases) + " caveman shapes, " + format_double(seconds) + " s";
  return o;
}

Outcome indexing_law() {
  Outcome o;
  const int n_agents = 10;
  o.require(3 / n_agents == 0 && story_index(3, n_agents, 0) == 3, "story 3 is not generation 0");
  o.require(13 / n_agents == 1 && story_index(3, n_agents, 1) == 13, "story 13 is not generation 1");

  auto config = mock_config(TopologyKind::fully_connected(), 10, 2, 1, "mock:echo");
  const auto backend = make_backend(config.backend);
  const auto result = run_simulation(config, 0, *backend);
  o.require(result.complete, "simulation failed");
  if (!o.pass) return o;
  for (int g = 0; g < 2; ++g)
    for (int a = 0; a < 10; ++a) {
      const auto& s = result.stories[static_cast<std::size_t>(g)][static_cast<std::size_t>(a)];
      o.require(s.story_index == a + n_agents * g && s.generation == g && s.agent_id == a, "index mismatch");
    }
  if (o.pass) o.detail = "story 3 -> generation 0, story 13 -> generation 1";
  return o;
}

Outcome determinism() {
  Outcome o;
  int compared = 0;
  for (const std::string backend : {"mock:echo", "mock:concat:20", "mock:template"}) {
    auto config = mock_config(TopologyKind::caveman(2), 6, 4, 2, backend);
    config.shuffle_neighbors = true;
    const auto a = scratch("determinism_a");
    const auto b = scratch("determinism_b");
    const auto ra = run_experiment(config, a);
    const auto rb = run_experiment(config, b);
    o.require(ra.all_complete() && rb.all_complete(), backend + " run failed");
    if (!o.pass) return o;
    collect_matrices(a, 2);
    const auto sa = snapshot(a);
    const auto sb = snapshot(b);
    o.require(sa == sb, backend + ": outputs differ");
    for (const char* f : {"stories.json", "similarity_matrix.csv", "metrics.json", "keywords.json", "layout.json"})
      o.require(sa.count("seed_0/" + std::string(f)) == 1, std::string("missing ") + f);
    compared += static_cast<int>(sa.size());
  }
  if (o.pass) o.detail = "3 mock rules, " + std::to_string(compared) + " files byte-identical";
  return o;
}

Outcome matrix_invariants() {
  Outcome o;
  {
    // An extra circle run with templated text so matrices are not all ones.
    const auto dir = scratch("matrix");
    auto config = mock_config(TopologyKind::circle(), 5, 5, 3, "mock:template");
    o.require(run_experiment(config, dir).all_complete(), "run failed");
    if (!o.pass) return o;
    collect_matrices(dir, 3);
  }
  for (const auto& [name, m] : produced_matrices) {
    o.require(m.rows() == m.cols(), name + ": not square");
    o.require(m == m.transpose(), name + ": not symmetric");
    o.require(m.diagonal().isOnes(0.0), name + ": diagonal not 1");
    o.require(m.minCoeff() >= 0.0 && m.maxCoeff() <= 1.0, name + ": entries outside [0,1]");
  }
  if (o.pass) o.detail = std::to_string(produced_matrices.size()) + " matrices symmetric, unit diagonal, in [0,1]";
  return o;
}

Outcome creativity_sentiment() {
  Outcome o;
  const auto embeddings = Embeddings::parse("sun 1 0\nmoon 0 1\napple 0.6 0.8\npear 0.6 0.8\n");
  o.require(creativity("apple pear", &embeddings) == 0.0, "identical-vector creativity != 0");
  o.require(creativity("sun moon", &embeddings) == 1.0, "orthogonal-pair creativity != 1");

  const auto& lexicon = SentimentLexicon::english();
  const auto* happy = lexicon.find("happy");
  o.require(happy != nullptr, "bundled lexicon lacks 'happy'");
  if (happy) o.require(sentiment("happy", lexicon) == *happy, "single-word sentiment differs from the entry");
  o.require(sentiment("zzz qqq", lexicon) == Sentiment{0.0, 0.0}, "no-match sentiment != (0,0)");
  if (o.pass) o.detail = "creativity 0 and 1, sentiment entry and (0,0) exact";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "echo-chain fixed point", echo_chain},
      {2, "tf-idf oracle equivalence", tfidf_oracle},
      {3, "metric brute-force equivalence", metric_oracle},
      {4, "topology properties", topology_properties},
      {5, "indexing law", indexing_law},
      {6, "determinism", determinism},
      {7, "matrix invariants", matrix_invariants},
      {8, "creativity/sentiment units", creativity_sentiment},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << ": " << o.detail << "\n";
  }
  std::cout << "N/A   9. live-model directional trends: declared, needs a live endpoint, not gated\n";
  std::cout << (failed == 0 ? "all gated criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
  return failed == 0 ? 0 : 1;
}
