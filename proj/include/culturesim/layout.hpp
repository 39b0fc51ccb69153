#pragma once

#include "culturesim/tfidf.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <cstdint>
#include <vector>

namespace culturesim {

struct LayoutEdge {
  int source = 0;
  int target = 0;
  double weight = 0.0;
  bool successive = false;  // target == source + 1

  friend bool operator==(const LayoutEdge&, const LayoutEdge&) = default;
};

struct LayoutGraph {
  Eigen::Matrix<double, Eigen::Dynamic, 2> positions;  // row = story index
  std::vector<LayoutEdge> edges;                       // source < target, lexicographic order
  std::vector<double> colors;                          // story_index / (n - 1)

  int size() const noexcept { return static_cast<int>(positions.rows()); }
  friend bool operator==(const LayoutGraph& a, const LayoutGraph& b) {
    return a.positions == b.positions && a.edges == b.edges && a.colors == b.colors;
  }
};

struct LayoutOptions {
  int iterations = 50;
  double edge_threshold = 0.05;  // pairs below this similarity carry no edge
  std::uint64_t seed = 0;
};

/// Similarity graph: an edge for every pair with similarity >= threshold plus every consecutive
/// pair (i, i+1).
std::vector<LayoutEdge> similarity_edges(const SimilarityMatrix& similarity, double threshold);

/// Fruchterman-Reingold placement with similarity-weighted attraction (optimal distance
/// 1/sqrt(n), linear cooling from 10% of the initial extent), centred and rescaled so the
/// largest coordinate magnitude is 1. Deterministic in (similarity, options).
LayoutGraph spring_layout(const SimilarityMatrix& similarity, const LayoutOptions& options = {});

nlohmann::json to_json(const LayoutGraph& graph);
/// Throws CorruptResults.
LayoutGraph layout_from_json(const nlohmann::json& j);

}  // namespace culturesim
