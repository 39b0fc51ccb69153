#pragma once

#include "culturesim/text.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

namespace culturesim {

/// Word vectors, one per line: a word followed by whitespace-separated components.
/// Vectors are L2-normalised on load; zero vectors and malformed lines are skipped.
class Embeddings {
 public:
  static Embeddings parse(std::string_view content);
  /// Throws MissingEmbeddings when the file cannot be read.
  static Embeddings from_file(const std::filesystem::path& path);

  const Eigen::VectorXd* find(const std::string& word) const;
  std::size_t size() const noexcept { return vectors_.size(); }
  Eigen::Index dimension() const noexcept { return dimension_; }

 private:
  std::unordered_map<std::string, Eigen::VectorXd> vectors_;
  Eigen::Index dimension_ = 0;
};

/// Mean cosine distance (1 - cosine) over unordered pairs of the unique non-stopword tokens that
/// have an embedding. Empty when fewer than two words match. Throws MissingEmbeddings when
/// `embeddings` is null.
std::optional<double> creativity(std::string_view text, const Embeddings* embeddings,
                                 const Stopwords& stopwords = Stopwords::english());

struct Sentiment {
  double polarity = 0.0;      // [-1, 1]
  double subjectivity = 0.0;  // [0, 1]

  friend bool operator==(const Sentiment&, const Sentiment&) = default;
};

/// Rows of "word polarity subjectivity"; '#' starts a comment line.
class SentimentLexicon {
 public:
  static const SentimentLexicon& english();  // bundled data/sentiment_lexicon.txt
  static SentimentLexicon parse(std::string_view content);
  static SentimentLexicon from_file(const std::filesystem::path& path);

  const Sentiment* find(const std::string& word) const;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::unordered_map<std::string, Sentiment> entries_;
};

/// Token-level means over lexicon hits (every occurrence counts); (0, 0) with no hits.
Sentiment sentiment(std::string_view text, const SentimentLexicon& lexicon = SentimentLexicon::english());

}  // namespace culturesim
