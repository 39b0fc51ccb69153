#include "culturesim/text.hpp"

#include "culturesim/bundled_data.hpp"
#include "culturesim/io.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace culturesim {

namespace {

/// Decodes one UTF-8 sequence starting at `i`; invalid bytes decode to U+FFFD.
char32_t decode(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    i += 1;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0) {
    int c1 = cont(1);
    if (c1 < 0) return ++i, 0xFFFD;
    i += 2;
    return static_cast<char32_t>(((b0 & 0x1F) << 6) | c1);
  }
  if ((b0 & 0xF0) == 0xE0) {
    int c1 = cont(1), c2 = cont(2);
    if (c1 < 0 || c2 < 0) return ++i, 0xFFFD;
    i += 3;
    return static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2);
  }
  if ((b0 & 0xF8) == 0xF0) {
    int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 < 0 || c2 < 0 || c3 < 0) return ++i, 0xFFFD;
    i += 4;
    return static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3);
  }
  ++i;
  return 0xFFFD;
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

// Non-ASCII code points are word characters unless they fall in a punctuation, symbol,
// combining-mark or emoji block.
bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') || cp == '_';
  }
  if (in(cp, 0x80, 0xBF)) {
    return cp == 0xAA || cp == 0xB2 || cp == 0xB3 || cp == 0xB5 || cp == 0xB9 || cp == 0xBA || in(cp, 0xBC, 0xBE);
  }
  if (cp == 0xD7 || cp == 0xF7 || cp == 0xFFFD) return false;
  if (in(cp, 0x0300, 0x036F) || in(cp, 0x2000, 0x206F) || in(cp, 0x20A0, 0x20FF) || in(cp, 0x2100, 0x214F) ||
      in(cp, 0x2190, 0x2BFF) || in(cp, 0x3000, 0x3004) || in(cp, 0x3008, 0x3020) || in(cp, 0xE000, 0xF8FF) ||
      in(cp, 0xFE00, 0xFE0F) || in(cp, 0xFE30, 0xFE4F) || in(cp, 0xFF00, 0xFF0F) || in(cp, 0xFF1A, 0xFF20) ||
      in(cp, 0xFF3B, 0xFF40) || in(cp, 0xFF5B, 0xFF65) || in(cp, 0x1F000, 0x1FAFF)) {
    return false;
  }
  return true;
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp < 0x80) return cp;
  if (in(cp, 0xC0, 0xDE) && cp != 0xD7) return cp + 0x20;
  if (in(cp, 0x0100, 0x012F) || in(cp, 0x0132, 0x0137) || in(cp, 0x014A, 0x0177)) return cp | 1;
  if (in(cp, 0x0139, 0x0148) || in(cp, 0x0179, 0x017E)) return (cp & 1) ? cp + 1 : cp;
  if (cp == 0x0178) return 0xFF;
  if (in(cp, 0x0391, 0x03A9) && cp != 0x03A2) return cp + 0x20;
  if (in(cp, 0x0410, 0x042F)) return cp + 0x20;
  if (in(cp, 0x0400, 0x040F)) return cp + 0x50;
  return cp;
}

bool is_alphanumeric_token(const std::string& token) {
  return token.find('_') == std::string::npos;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t length = 0;
  auto flush = [&] {
    if (length >= 2) tokens.push_back(current);
    current.clear();
    length = 0;
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = decode(text, i);
    if (is_word_char(cp)) {
      encode(to_lower(cp), current);
      ++length;
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

Stopwords Stopwords::parse(std::string_view content) {
  Stopwords out;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    out.words_.insert(line);
  }
  return out;
}

Stopwords Stopwords::from_file(const std::filesystem::path& path) { return parse(read_file(path)); }

const Stopwords& Stopwords::english() {
  static const Stopwords instance = parse(bundled::stopwords());
  return instance;
}

std::vector<Keyword> extract_keywords(std::string_view text, int k, const Stopwords& stopwords) {
  std::map<std::string, int> counts;
  for (auto& token : tokenize(text)) {
    if (stopwords.contains(token) || !is_alphanumeric_token(token)) continue;
    ++counts[token];
  }
  std::vector<Keyword> ranked;
  ranked.reserve(counts.size());
  for (auto& [word, n] : counts) ranked.push_back({word, n});
  // counts is alphabetical already; a stable sort on frequency keeps that as the tie-break
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Keyword& a, const Keyword& b) { return a.frequency > b.frequency; });
  if (k >= 0 && ranked.size() > static_cast<std::size_t>(k)) ranked.resize(static_cast<std::size_t>(k));
  return ranked;
}

WordChains word_chains(const std::vector<std::vector<std::vector<Keyword>>>& per_generation) {
  WordChains chains;
  for (std::size_t g = 0; g < per_generation.size(); ++g) {
    std::set<std::string> used;
    for (const auto& story : per_generation[g])
      for (const auto& kw : story) used.insert(kw.word);
    for (const auto& word : used) chains.generations[word].push_back(static_cast<int>(g));
  }
  for (const auto& [word, gens] : chains.generations) {
    auto& links = chains.links[word];
    for (std::size_t i = 1; i < gens.size(); ++i) {
      if (gens[i] == gens[i - 1] + 1) links.emplace_back(gens[i - 1], gens[i]);
    }
  }
  return chains;
}

std::vector<std::string> WordChains::ordered_words() const {
  std::vector<std::string> words;
  for (const auto& [word, gens] : generations) words.push_back(word);
  std::stable_sort(words.begin(), words.end(), [&](const std::string& a, const std::string& b) {
    return generations.at(a).front() < generations.at(b).front();
  });
  return words;
}

nlohmann::json to_json(const WordChains& chains) {
  auto words = nlohmann::json::array();
  for (const auto& word : chains.ordered_words()) {
    auto links = nlohmann::json::array();
    for (auto [a, b] : chains.links.at(word)) links.push_back({a, b});
    words.push_back({{"word", word}, {"generations", chains.generations.at(word)}, {"links", links}});
  }
  return {{"words", words}};
}

}  // namespace culturesim
