#pragma once

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace culturesim {

using AgentId = int;

enum class NetworkKind { FullyConnected, Circle, Caveman, Sequence };

enum class Schedule { Synchronous, SequentialChain };

struct TopologyKind {
  NetworkKind network = NetworkKind::FullyConnected;
  int n_cliques = 0;  // only meaningful for Caveman

  static TopologyKind fully_connected() { return {NetworkKind::FullyConnected, 0}; }
  static TopologyKind circle() { return {NetworkKind::Circle, 0}; }
  static TopologyKind caveman(int cliques) { return {NetworkKind::Caveman, cliques}; }
  static TopologyKind sequence() { return {NetworkKind::Sequence, 0}; }

  friend bool operator==(const TopologyKind&, const TopologyKind&) = default;
};

/// Wire names: fully_connected, circle, caveman, sequence.
std::string to_string(NetworkKind kind);
NetworkKind parse_network_kind(const std::string& name);

/// Throws InvalidPopulation when `n_agents` cannot be arranged as `kind`.
void validate_population(const TopologyKind& kind, int n_agents);

/// Adjacency structure over agents 0..n_agents-1. Immutable once built.
class Topology {
 public:
  Topology(TopologyKind kind, int n_agents, std::vector<std::vector<AgentId>> adjacency);

  int n_agents() const noexcept { return n_agents_; }
  const TopologyKind& kind() const noexcept { return kind_; }
  Schedule schedule() const noexcept {
    return kind_.network == NetworkKind::Sequence ? Schedule::SequentialChain : Schedule::Synchronous;
  }

  /// Ascending neighbour ids of `agent`. Throws AgentOutOfRange.
  const std::vector<AgentId>& neighbors(AgentId agent) const;

  /// Undirected edges (i < j) for symmetric kinds; directed (i-1, i) links for Sequence.
  std::vector<std::pair<AgentId, AgentId>> edges() const;

  const std::vector<std::vector<AgentId>>& adjacency() const noexcept { return adjacency_; }

 private:
  TopologyKind kind_;
  int n_agents_;
  std::vector<std::vector<AgentId>> adjacency_;
};

/// Deterministic construction of the network. Throws InvalidPopulation.
///
/// Caveman(c) with clique size m = n/c places clique k on agents [k*m, (k+1)*m),
/// removes the edge (k*m, k*m+1) and links k*m to agent ((k+1) mod c)*m + 1,
/// giving a ring of cliques.
Topology build_topology(const TopologyKind& kind, int n_agents);

inline const std::vector<AgentId>& neighbors(const Topology& topology, AgentId agent) {
  return topology.neighbors(agent);
}

/// {kind, n_agents, n_cliques?, edges}
nlohmann::json to_json(const Topology& topology);

}  // namespace culturesim
