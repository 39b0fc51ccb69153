#pragma once

#include "culturesim/error.hpp"

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

// Homogenisation metrics over a story similarity matrix whose rows and columns are ordered by
// story index = slot + agents_per_generation * generation.
namespace culturesim {

namespace detail {

inline void check_generation(Eigen::Index rows, Eigen::Index per_gen, Eigen::Index g) {
  if (per_gen < 1) throw GenerationOutOfRange("agents per generation must be positive");
  const Eigen::Index n_gen = rows / per_gen;
  if (g < 0 || g >= n_gen) {
    throw GenerationOutOfRange("generation " + std::to_string(g) + " outside [0, " + std::to_string(n_gen) + ")");
  }
}

}  // namespace detail

/// Number of complete generations covered by the matrix.
template <typename Derived>
Eigen::Index generation_count(const Eigen::MatrixBase<Derived>& m, Eigen::Index per_gen) {
  return per_gen > 0 ? m.rows() / per_gen : 0;
}

/// Mean similarity over unordered pairs of distinct stories of generation g; empty when the
/// generation holds fewer than two stories.
template <typename Derived>
std::optional<typename Derived::Scalar> within_generation_similarity(const Eigen::MatrixBase<Derived>& m,
                                                                     Eigen::Index per_gen, Eigen::Index g) {
  detail::check_generation(m.rows(), per_gen, g);
  if (per_gen < 2) return std::nullopt;
  using Scalar = typename Derived::Scalar;
  const auto block = m.block(g * per_gen, g * per_gen, per_gen, per_gen);
  const Scalar upper = block.template triangularView<Eigen::StrictlyUpper>().toDenseMatrix().sum();
  return upper / static_cast<Scalar>(per_gen * (per_gen - 1) / 2);
}

/// Mean over all (story of g) x (story of g-1) pairs. Throws GenerationOutOfRange for g = 0.
template <typename Derived>
typename Derived::Scalar successive_similarity(const Eigen::MatrixBase<Derived>& m, Eigen::Index per_gen,
                                               Eigen::Index g) {
  detail::check_generation(m.rows(), per_gen, g);
  if (g == 0) throw GenerationOutOfRange("successive similarity is undefined for generation 0");
  return m.block(g * per_gen, (g - 1) * per_gen, per_gen, per_gen).mean();
}

/// Mean over ordered (story of g, story of generation 0) pairs, self-pairs excluded at g = 0;
/// empty at g = 0 when generations hold a single story.
template <typename Derived>
std::optional<typename Derived::Scalar> first_generation_similarity(const Eigen::MatrixBase<Derived>& m,
                                                                    Eigen::Index per_gen, Eigen::Index g) {
  detail::check_generation(m.rows(), per_gen, g);
  const auto block = m.block(g * per_gen, 0, per_gen, per_gen);
  if (g > 0) return block.mean();
  if (per_gen < 2) return std::nullopt;
  using Scalar = typename Derived::Scalar;
  return (block.sum() - block.diagonal().sum()) / static_cast<Scalar>(per_gen * (per_gen - 1));
}

/// Per-generation value, absent where a metric is undefined.
using MetricValues = std::vector<std::optional<double>>;

struct SimilaritySeries {
  MetricValues within_generation;
  MetricValues successive;
  MetricValues first_generation;
};

template <typename Derived>
SimilaritySeries similarity_series(const Eigen::MatrixBase<Derived>& m, Eigen::Index per_gen) {
  SimilaritySeries out;
  const Eigen::Index n_gen = generation_count(m, per_gen);
  for (Eigen::Index g = 0; g < n_gen; ++g) {
    auto to_opt = [](auto v) -> std::optional<double> {
      if (!v) return std::nullopt;
      return static_cast<double>(*v);
    };
    out.within_generation.push_back(to_opt(within_generation_similarity(m, per_gen, g)));
    out.successive.push_back(g == 0 ? std::nullopt
                                    : std::optional<double>(static_cast<double>(successive_similarity(m, per_gen, g))));
    out.first_generation.push_back(to_opt(first_generation_similarity(m, per_gen, g)));
  }
  return out;
}

/// Cross-seed mean and population standard deviation per generation, over the seeds where the
/// value is defined.
struct AggregatedSeries {
  MetricValues mean;
  MetricValues std;
  std::vector<int> count;  // contributing seeds per generation
};

AggregatedSeries aggregate(const std::vector<MetricValues>& per_seed);

}  // namespace culturesim
