#pragma once

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace culturesim {

/// Maximal runs of two or more word characters (letters, digits, underscore; UTF-8 aware),
/// lowercased, in order of appearance.
std::vector<std::string> tokenize(std::string_view text);

class Stopwords {
 public:
  /// The bundled English list (data/stopwords.txt).
  static const Stopwords& english();
  static Stopwords from_file(const std::filesystem::path& path);
  /// One word per line; blank lines and lines starting with '#' are skipped.
  static Stopwords parse(std::string_view content);

  bool contains(const std::string& word) const { return words_.count(word) != 0; }
  std::size_t size() const noexcept { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

struct Keyword {
  std::string word;
  int frequency = 0;

  friend bool operator==(const Keyword&, const Keyword&) = default;
};

/// Top-k non-stopword alphanumeric tokens by frequency; ties broken alphabetically.
std::vector<Keyword> extract_keywords(std::string_view text, int k,
                                      const Stopwords& stopwords = Stopwords::english());

struct WordChains {
  /// word -> ascending generations in which any story used it
  std::map<std::string, std::vector<int>> generations;
  /// word -> (g, g+1) pairs where it appears in both generations
  std::map<std::string, std::vector<std::pair<int, int>>> links;

  /// Words ordered by first generation of appearance, then alphabetically.
  std::vector<std::string> ordered_words() const;
};

/// `per_generation[g]` holds the keyword lists of every story of generation g.
WordChains word_chains(const std::vector<std::vector<std::vector<Keyword>>>& per_generation);

nlohmann::json to_json(const WordChains& chains);

}  // namespace culturesim
