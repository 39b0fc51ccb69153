#include "culturesim/layout.hpp"

#include "culturesim/error.hpp"
#include "culturesim/io.hpp"

#include <cmath>

namespace culturesim {

namespace {

double uniform01(std::uint64_t& state) { return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<LayoutEdge> similarity_edges(const SimilarityMatrix& similarity, double threshold) {
  std::vector<LayoutEdge> edges;
  const auto n = similarity.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const bool successive = j == i + 1;
      const double w = similarity(i, j);
      if (successive || w >= threshold) {
        edges.push_back({static_cast<int>(i), static_cast<int>(j), w, successive});
      }
    }
  }
  return edges;
}

LayoutGraph spring_layout(const SimilarityMatrix& similarity, const LayoutOptions& options) {
  const Eigen::Index n = similarity.rows();
  LayoutGraph graph;
  graph.edges = similarity_edges(similarity, options.edge_threshold);
  graph.colors.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) graph.colors[static_cast<std::size_t>(i)] = n > 1 ? double(i) / double(n - 1) : 0.0;

  graph.positions.setZero(n, 2);
  if (n <= 1) return graph;

  Eigen::MatrixXd attraction = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : graph.edges) {
    attraction(e.source, e.target) = e.weight;
    attraction(e.target, e.source) = e.weight;
  }

  Eigen::Matrix<double, Eigen::Dynamic, 2> pos(n, 2);
  std::uint64_t state = options.seed;
  for (Eigen::Index i = 0; i < n; ++i) {
    pos(i, 0) = uniform01(state);
    pos(i, 1) = uniform01(state);
  }

  const double k = std::sqrt(1.0 / static_cast<double>(n));
  const Eigen::Vector2d extent = pos.colwise().maxCoeff() - pos.colwise().minCoeff();
  double temperature = extent.maxCoeff() * 0.1;
  const double cooling = temperature / (options.iterations + 1);
  constexpr double kStopThreshold = 1e-4;

  Eigen::Matrix<double, Eigen::Dynamic, 2> displacement(n, 2);
  for (int iteration = 0; iteration < options.iterations; ++iteration) {
    displacement.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const Eigen::RowVector2d delta = pos.row(i) - pos.row(j);
        const double distance = std::max(delta.norm(), 0.01);
        const double force = k * k / (distance * distance) - attraction(i, j) * distance / k;
        displacement.row(i) += delta * force;
      }
    }
    double moved_sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double length = displacement.row(i).norm();
      if (length < 0.01) length = 0.1;
      const Eigen::RowVector2d step = displacement.row(i) * (temperature / length);
      pos.row(i) += step;
      moved_sq += step.squaredNorm();
    }
    temperature -= cooling;
    if (std::sqrt(moved_sq) / static_cast<double>(n) < kStopThreshold) break;
  }

  pos.rowwise() -= pos.colwise().mean();
  const double limit = pos.cwiseAbs().maxCoeff();
  if (limit > 0.0) pos /= limit;
  graph.positions = pos;
  return graph;
}

nlohmann::json to_json(const LayoutGraph& graph) {
  auto nodes = nlohmann::json::array();
  for (int i = 0; i < graph.size(); ++i) {
    nodes.push_back({{"index", i},
                     {"x", graph.positions(i, 0)},
                     {"y", graph.positions(i, 1)},
                     {"color", graph.colors[static_cast<std::size_t>(i)]}});
  }
  auto edges = nlohmann::json::array();
  for (const auto& e : graph.edges) {
    edges.push_back({{"i", e.source}, {"j", e.target}, {"weight", e.weight}, {"successive", e.successive}});
  }
  return {{"nodes", nodes}, {"edges", edges}};
}

LayoutGraph layout_from_json(const nlohmann::json& j) {
  try {
    LayoutGraph graph;
    const auto& nodes = j.at("nodes");
    graph.positions.resize(static_cast<Eigen::Index>(nodes.size()), 2);
    graph.colors.resize(nodes.size());
    for (const auto& node : nodes) {
      const int i = node.at("index").get<int>();
      if (i < 0 || i >= static_cast<int>(nodes.size())) throw CorruptResults("layout node index out of range");
      graph.positions(i, 0) = node.at("x").get<double>();
      graph.positions(i, 1) = node.at("y").get<double>();
      graph.colors[static_cast<std::size_t>(i)] = node.at("color").get<double>();
    }
    for (const auto& e : j.at("edges")) {
      graph.edges.push_back({e.at("i").get<int>(), e.at("j").get<int>(), e.at("weight").get<double>(),
                             e.at("successive").get<bool>()});
    }
    return graph;
  } catch (const nlohmann::json::exception& ex) {
    throw CorruptResults(std::string("malformed layout: ") + ex.what());
  }
}

}  // namespace culturesim
