#include "culturesim/agents.hpp"

#include "culturesim/bundled_data.hpp"
#include "culturesim/error.hpp"
#include "culturesim/io.hpp"

#include <json.hpp>

#include <algorithm>

namespace culturesim {

void PromptSet::validate() const {
  if (initialization.empty()) throw InvalidConfig("initialization prompt is empty");
  if (transformation.empty()) throw InvalidConfig("transformation prompt is empty");
}

std::string assemble_initialization(const AgentSpec& agent, const PromptSet& prompts) {
  if (agent.personality.empty()) return prompts.initialization;
  return agent.personality + "\n\n" + prompts.initialization;
}

std::string assemble_transformation(const AgentSpec& agent, const PromptSet& prompts,
                                    std::span<const Story> neighbor_stories) {
  if (neighbor_stories.empty()) {
    throw NoNeighborStories("agent " + std::to_string(agent.agent_id) + " has no neighbour stories to transform");
  }
  std::string out;
  if (!agent.personality.empty()) out += agent.personality + "\n\n";
  out += prompts.transformation;
  int number = 1;
  for (const Story& story : neighbor_stories) {
    out += "\n\nStory " + std::to_string(number++) + ":\n";
    out += story.text;
  }
  return out;
}

std::vector<AgentSpec> assign_personalities(const PersonalityAssignment& mode, int n_agents) {
  std::vector<AgentSpec> agents;
  agents.reserve(static_cast<std::size_t>(std::max(n_agents, 0)));
  if (const auto* uniform = std::get_if<UniformPersonality>(&mode)) {
    for (int i = 0; i < n_agents; ++i) agents.push_back({i, uniform->text});
    return agents;
  }
  const auto& per_agent = std::get<PerAgentPersonality>(mode);
  if (static_cast<int>(per_agent.texts.size()) != n_agents) {
    throw LengthMismatch("per-agent personality list has " + std::to_string(per_agent.texts.size()) +
                         " entries for " + std::to_string(n_agents) + " agents");
  }
  for (int i = 0; i < n_agents; ++i) agents.push_back({i, per_agent.texts[static_cast<std::size_t>(i)]});
  return agents;
}

PerAgentPersonality mixed_population(const std::string& first, const std::string& second, int n_agents) {
  PerAgentPersonality out;
  for (int i = 0; i < n_agents; ++i) out.texts.push_back(i < n_agents / 2 ? first : second);
  return out;
}

bool is_valid_name(const std::string& name) {
  if (name.empty() || name.size() > 128) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

TextRegistry::TextRegistry(Kind kind, std::optional<std::filesystem::path> directory)
    : kind_(kind), directory_(std::move(directory)) {}

std::optional<std::string> TextRegistry::find(const std::string& name) const {
  if (!is_valid_name(name)) return std::nullopt;
  if (directory_) {
    auto path = *directory_ / (name + ".txt");
    if (std::filesystem::is_regular_file(path)) return strip_trailing_newlines(read_file(path));
  }
  auto builtin = kind_ == Kind::Prompts ? bundled::prompts() : bundled::personalities();
  for (const auto& entry : builtin) {
    if (entry.name == name) return std::string(entry.text);
  }
  return std::nullopt;
}

std::map<std::string, std::string> TextRegistry::entries() const {
  std::map<std::string, std::string> out;
  auto builtin = kind_ == Kind::Prompts ? bundled::prompts() : bundled::personalities();
  for (const auto& entry : builtin) out[std::string(entry.name)] = std::string(entry.text);
  if (directory_ && std::filesystem::is_directory(*directory_)) {
    for (const auto& file : std::filesystem::directory_iterator(*directory_)) {
      if (file.path().extension() != ".txt") continue;
      auto stem = file.path().stem().string();
      if (is_valid_name(stem)) out[stem] = strip_trailing_newlines(read_file(file.path()));
    }
  }
  return out;
}

void TextRegistry::add(const std::string& name, const std::string& text) {
  if (!is_valid_name(name)) throw InvalidConfig("invalid registry name '" + name + "'");
  if (!directory_) throw InvalidConfig("registry has no backing directory");
  std::filesystem::create_directories(*directory_);
  write_file_atomic(*directory_ / (name + ".txt"), text);
}

std::string TextRegistry::resolve(const std::string& ref) const {
  std::error_code ec;
  if (!ref.empty() && std::filesystem::is_regular_file(ref, ec)) {
    std::string content = read_file(ref);
    if (std::filesystem::path(ref).extension() == ".json") {
      auto j = nlohmann::json::parse(content, nullptr, false);
      if (j.is_string()) return j.get<std::string>();
      if (j.is_object() && j.contains("text") && j["text"].is_string()) return j["text"].get<std::string>();
      throw InvalidConfig("JSON file " + ref + " must hold a string or an object with a \"text\" field");
    }
    return strip_trailing_newlines(std::move(content));
  }
  if (auto text = find(ref)) return *text;
  throw InvalidConfig(std::string(kind_ == Kind::Prompts ? "prompt" : "personality") + " '" + ref +
                      "' is neither a file nor a registered name");
}

}  // namespace culturesim
