#pragma once

#include <span>
#include <string_view>

// Data files from data/, compiled into the library.
namespace culturesim::bundled {

struct NamedText {
  std::string_view name;
  std::string_view text;
};

std::string_view stopwords();
std::string_view sentiment_lexicon();
std::span<const NamedText> prompts();
std::span<const NamedText> personalities();

}  // namespace culturesim::bundled
