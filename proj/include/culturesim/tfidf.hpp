#pragma once

#include "culturesim/error.hpp"
#include "culturesim/text.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace culturesim {

/// Bag-of-words TF-IDF space fitted on one corpus: raw counts weighted by the smoothed
/// idf ln((1 + n) / (1 + df)) + 1, rows L2-normalised. Terms are indexed alphabetically.
template <typename Scalar>
class BasicVectorSpace {
 public:
  using SparseVector = Eigen::SparseVector<Scalar>;
  using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

  /// Throws EmptyCorpus.
  static BasicVectorSpace fit(std::span<const std::string> corpus) {
    if (corpus.empty()) throw EmptyCorpus("cannot fit a vector space on an empty corpus");
    std::map<std::string, int> df;
    for (const auto& doc : corpus) {
      auto tokens = tokenize(doc);
      std::sort(tokens.begin(), tokens.end());
      tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
      for (auto& t : tokens) ++df[t];
    }
    BasicVectorSpace space;
    space.n_documents_ = static_cast<int>(corpus.size());
    space.idf_.resize(static_cast<Eigen::Index>(df.size()));
    space.df_.reserve(df.size());
    Eigen::Index column = 0;
    const Scalar n = static_cast<Scalar>(space.n_documents_);
    for (const auto& [term, count] : df) {
      space.vocabulary_.emplace(term, column);
      space.df_.push_back(count);
      space.idf_(column) = std::log((Scalar(1) + n) / (Scalar(1) + static_cast<Scalar>(count))) + Scalar(1);
      ++column;
    }
    return space;
  }

  Eigen::Index size() const noexcept { return idf_.size(); }
  int n_documents() const noexcept { return n_documents_; }
  const std::map<std::string, Eigen::Index>& vocabulary() const noexcept { return vocabulary_; }
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& idf() const noexcept { return idf_; }

  std::optional<Eigen::Index> column(const std::string& term) const {
    auto it = vocabulary_.find(term);
    if (it == vocabulary_.end()) return std::nullopt;
    return it->second;
  }
  int document_frequency(const std::string& term) const {
    auto c = column(term);
    return c ? df_[static_cast<std::size_t>(*c)] : 0;
  }
  std::optional<Scalar> idf(const std::string& term) const {
    auto c = column(term);
    if (!c) return std::nullopt;
    return idf_(*c);
  }

  /// Unit-norm TF-IDF vector; all-zero when no token is in the vocabulary.
  SparseVector vectorize(std::string_view text) const {
    std::map<Eigen::Index, Scalar> counts;
    for (const auto& token : tokenize(text)) {
      if (auto c = column(token)) counts[*c] += Scalar(1);
    }
    SparseVector v(size());
    v.reserve(static_cast<Eigen::Index>(counts.size()));
    for (auto& [c, tf] : counts) v.insert(c) = tf * idf_(c);
    const Scalar norm = v.norm();
    if (norm > Scalar(0)) v /= norm;
    return v;
  }

  /// One unit-norm row per document.
  SparseMatrix transform(std::span<const std::string> documents) const {
    std::vector<Eigen::Triplet<Scalar>> triplets;
    for (std::size_t row = 0; row < documents.size(); ++row) {
      const SparseVector v = vectorize(documents[row]);
      for (typename SparseVector::InnerIterator it(v); it; ++it)
        triplets.emplace_back(static_cast<Eigen::Index>(row), it.index(), it.value());
    }
    SparseMatrix m(static_cast<Eigen::Index>(documents.size()), size());
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
  }

 private:
  std::map<std::string, Eigen::Index> vocabulary_;
  std::vector<int> df_;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> idf_;
  int n_documents_ = 0;
};

using VectorSpace = BasicVectorSpace<double>;

template <typename Scalar>
using BasicSimilarityMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using SimilarityMatrix = BasicSimilarityMatrix<double>;

/// Cosine similarity between every pair of documents (rows/cols in input order).
/// Symmetric, clamped to [0, 1], diagonal 1 for documents with a non-zero vector and 0 otherwise.
template <typename Scalar>
BasicSimilarityMatrix<Scalar> similarity_matrix(const BasicVectorSpace<Scalar>& space,
                                                std::span<const std::string> documents) {
  const auto rows = space.transform(documents);
  const Eigen::SparseMatrix<Scalar, Eigen::RowMajor> gram = rows * rows.transpose();
  BasicSimilarityMatrix<Scalar> m = BasicSimilarityMatrix<Scalar>(gram);
  m = (Scalar(0.5) * (m + m.transpose())).cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
  for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, i) = rows.row(i).nonZeros() > 0 ? Scalar(1) : Scalar(0);
  return m;
}

/// Fits the space on `documents` itself, as done per seed.
inline SimilarityMatrix similarity_matrix(std::span<const std::string> documents) {
  return similarity_matrix(VectorSpace::fit(documents), documents);
}

}  // namespace culturesim
