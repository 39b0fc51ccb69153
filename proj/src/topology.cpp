#include "culturesim/topology.hpp"

#include "culturesim/error.hpp"

#include <algorithm>
#include <set>

namespace culturesim {

std::string to_string(NetworkKind kind) {
  switch (kind) {
    case NetworkKind::FullyConnected:
      return "fully_connected";
    case NetworkKind::Circle:
      return "circle";
    case NetworkKind::Caveman:
      return "caveman";
    case NetworkKind::Sequence:
      return "sequence";
  }
  return "unknown";
}

NetworkKind parse_network_kind(const std::string& name) {
  if (name == "fully_connected") return NetworkKind::FullyConnected;
  if (name == "circle") return NetworkKind::Circle;
  if (name == "caveman") return NetworkKind::Caveman;
  if (name == "sequence") return NetworkKind::Sequence;
  throw InvalidConfig("unknown network kind '" + name +
                      "' (expected fully_connected, circle, caveman or sequence)");
}

void validate_population(const TopologyKind& kind, int n_agents) {
  if (n_agents < 1) {
    throw InvalidPopulation("population must contain at least one agent, got " + std::to_string(n_agents));
  }
  switch (kind.network) {
    case NetworkKind::FullyConnected:
    case NetworkKind::Sequence:
      return;
    case NetworkKind::Circle:
      if (n_agents < 3) {
        throw InvalidPopulation("circle network needs at least 3 agents, got " + std::to_string(n_agents));
      }
      return;
    case NetworkKind::Caveman: {
      const int c = kind.n_cliques;
      if (c < 2) {
        throw InvalidPopulation("caveman network needs at least 2 cliques, got " + std::to_string(c));
      }
      if (n_agents % c != 0) {
        throw InvalidPopulation("caveman network: " + std::to_string(n_agents) +
                                " agents cannot be split evenly into " + std::to_string(c) + " cliques");
      }
      if (n_agents / c < 3) {
        throw InvalidPopulation("caveman network: clique size " + std::to_string(n_agents / c) +
                                " is below the minimum of 3");
      }
      return;
    }
  }
}

Topology::Topology(TopologyKind kind, int n_agents, std::vector<std::vector<AgentId>> adjacency)
    : kind_(kind), n_agents_(n_agents), adjacency_(std::move(adjacency)) {}

const std::vector<AgentId>& Topology::neighbors(AgentId agent) const {
  if (agent < 0 || agent >= n_agents_) {
    throw AgentOutOfRange("agent " + std::to_string(agent) + " outside [0, " + std::to_string(n_agents_) + ")");
  }
  return adjacency_[static_cast<std::size_t>(agent)];
}

std::vector<std::pair<AgentId, AgentId>> Topology::edges() const {
  std::vector<std::pair<AgentId, AgentId>> out;
  for (AgentId i = 0; i < n_agents_; ++i) {
    for (AgentId j : adjacency_[static_cast<std::size_t>(i)]) {
      if (schedule() == Schedule::SequentialChain) {
        out.emplace_back(j, i);
      } else if (i < j) {
        out.emplace_back(i, j);
      }
    }
  }
  return out;
}

namespace {

Topology from_edge_set(const TopologyKind& kind, int n, const std::set<std::pair<int, int>>& edges) {
  std::vector<std::vector<AgentId>> adj(static_cast<std::size_t>(n));
  for (auto [a, b] : edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return Topology(kind, n, std::move(adj));
}

std::pair<int, int> ordered(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

}  // namespace

Topology build_topology(const TopologyKind& kind, int n_agents) {
  validate_population(kind, n_agents);
  const int n = n_agents;
  std::set<std::pair<int, int>> edges;

  switch (kind.network) {
    case NetworkKind::FullyConnected:
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.emplace(i, j);
      return from_edge_set(kind, n, edges);

    case NetworkKind::Circle:
      for (int i = 0; i < n; ++i) edges.insert(ordered(i, (i + 1) % n));
      return from_edge_set(kind, n, edges);

    case NetworkKind::Caveman: {
      const int c = kind.n_cliques;
      const int m = n / c;
      for (int k = 0; k < c; ++k) {
        const int base = k * m;
        for (int i = base; i < base + m; ++i)
          for (int j = i + 1; j < base + m; ++j) edges.emplace(i, j);
      }
      for (int k = 0; k < c; ++k) {
        const int base = k * m;
        edges.erase({base, base + 1});
        edges.insert(ordered(base, ((k + 1) % c) * m + 1));
      }
      return from_edge_set(kind, n, edges);
    }

    case NetworkKind::Sequence: {
      std::vector<std::vector<AgentId>> adj(static_cast<std::size_t>(n));
      for (int i = 1; i < n; ++i) adj[static_cast<std::size_t>(i)].push_back(i - 1);
      return Topology(kind, n, std::move(adj));
    }
  }
  throw InvalidConfig("unhandled network kind");
}

nlohmann::json to_json(const Topology& topology) {
  nlohmann::json j;
  j["kind"] = to_string(topology.kind().network);
  j["n_agents"] = topology.n_agents();
  if (topology.kind().network == NetworkKind::Caveman) j["n_cliques"] = topology.kind().n_cliques;
  auto edges = nlohmann::json::array();
  for (auto [a, b] : topology.edges()) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  return j;
}

}  // namespace culturesim
