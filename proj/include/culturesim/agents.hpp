#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace culturesim {

struct AgentSpec {
  int agent_id = 0;
  std::string personality;  // empty means no personality
};

struct PromptSet {
  std::string name;
  std::string initialization;
  std::string transformation;

  /// Throws InvalidConfig when either prompt is empty.
  void validate() const;
};

struct Story {
  int agent_id = 0;
  int generation = 0;
  int seed = 0;
  int story_index = 0;
  std::string text;          // trimmed
  std::string raw_response;  // exactly as returned by the backend
};

/// Row-major position of a story in a seed's similarity matrix.
constexpr int story_index(int slot, int agents_per_generation, int generation) {
  return slot + agents_per_generation * generation;
}

/// Personality first (followed by a blank line) when present, then the initialization prompt.
std::string assemble_initialization(const AgentSpec& agent, const PromptSet& prompts);

/// [personality + blank line] + transformation prompt + blank line + "Story 1:\n<text>" blocks
/// separated by blank lines, numbered in input order. Throws NoNeighborStories on empty input.
std::string assemble_transformation(const AgentSpec& agent, const PromptSet& prompts,
                                    std::span<const Story> neighbor_stories);

struct UniformPersonality {
  std::string text;
};
struct PerAgentPersonality {
  std::vector<std::string> texts;
};
using PersonalityAssignment = std::variant<UniformPersonality, PerAgentPersonality>;

/// Throws LengthMismatch when a per-agent list does not have n_agents entries.
std::vector<AgentSpec> assign_personalities(const PersonalityAssignment& mode, int n_agents);

/// First floor(n/2) agents get `first`, the rest get `second`.
PerAgentPersonality mixed_population(const std::string& first, const std::string& second, int n_agents);

/// Named texts (prompts or personalities): the bundled library overlaid by a directory of
/// `<name>.txt` files. Names are file stems.
class TextRegistry {
 public:
  enum class Kind { Prompts, Personalities };

  explicit TextRegistry(Kind kind, std::optional<std::filesystem::path> directory = std::nullopt);

  std::optional<std::string> find(const std::string& name) const;
  std::map<std::string, std::string> entries() const;

  /// Writes `<directory>/<name>.txt`. Throws InvalidConfig for bad names or a registry
  /// without a directory.
  void add(const std::string& name, const std::string& text);

  /// Treats `ref` as a file path when such a file exists (plain text, or JSON string / {"text"}),
  /// otherwise as a registry name. Throws InvalidConfig when neither resolves.
  std::string resolve(const std::string& ref) const;

 private:
  Kind kind_;
  std::optional<std::filesystem::path> directory_;
};

bool is_valid_name(const std::string& name);

}  // namespace culturesim
