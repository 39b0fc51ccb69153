#include "culturesim/lexical.hpp"

#include "culturesim/bundled_data.hpp"
#include "culturesim/error.hpp"
#include "culturesim/io.hpp"

#include <algorithm>
#include <sstream>
#include <vector>

namespace culturesim {

Embeddings Embeddings::parse(std::string_view content) {
  Embeddings out;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word) || word[0] == '#') continue;
    std::vector<double> values;
    double x;
    while (fields >> x) values.push_back(x);
    if (values.empty() || !fields.eof()) continue;
    if (out.dimension_ == 0) out.dimension_ = static_cast<Eigen::Index>(values.size());
    if (static_cast<Eigen::Index>(values.size()) != out.dimension_) continue;
    Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(values.data(), out.dimension_);
    const double norm = v.norm();
    if (!(norm > 0.0)) continue;
    out.vectors_.insert_or_assign(word, v / norm);
  }
  return out;
}

Embeddings Embeddings::from_file(const std::filesystem::path& path) {
  try {
    return parse(read_file(path));
  } catch (const CorruptResults&) {
    throw MissingEmbeddings("cannot read embeddings file " + path.string());
  }
}

const Eigen::VectorXd* Embeddings::find(const std::string& word) const {
  auto it = vectors_.find(word);
  return it == vectors_.end() ? nullptr : &it->second;
}

std::optional<double> creativity(std::string_view text, const Embeddings* embeddings, const Stopwords& stopwords) {
  if (embeddings == nullptr) throw MissingEmbeddings("creativity needs a word-embedding file");
  auto tokens = tokenize(text);
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());

  std::vector<const Eigen::VectorXd*> vectors;
  for (const auto& t : tokens) {
    if (stopwords.contains(t)) continue;
    if (const auto* v = embeddings->find(t)) vectors.push_back(v);
  }
  if (vectors.size() < 2) return std::nullopt;

  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      const double cosine = std::clamp(vectors[i]->dot(*vectors[j]), -1.0, 1.0);
      total += 1.0 - cosine;
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

SentimentLexicon SentimentLexicon::parse(std::string_view content) {
  SentimentLexicon out;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string word;
    Sentiment s;
    if (!(fields >> word) || word[0] == '#') continue;
    if (!(fields >> s.polarity >> s.subjectivity)) continue;
    out.entries_.insert_or_assign(word, s);
  }
  return out;
}

SentimentLexicon SentimentLexicon::from_file(const std::filesystem::path& path) { return parse(read_file(path)); }

const SentimentLexicon& SentimentLexicon::english() {
  static const SentimentLexicon instance = parse(bundled::sentiment_lexicon());
  return instance;
}

const Sentiment* SentimentLexicon::find(const std::string& word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

Sentiment sentiment(std::string_view text, const SentimentLexicon& lexicon) {
  double polarity = 0.0, subjectivity = 0.0;
  int hits = 0;
  for (const auto& token : tokenize(text)) {
    if (const auto* s = lexicon.find(token)) {
      polarity += s->polarity;
      subjectivity += s->subjectivity;
      ++hits;
    }
  }
  if (hits == 0) return {};
  return {polarity / hits, subjectivity / hits};
}

}  // namespace culturesim
