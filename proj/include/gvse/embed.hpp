#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gvse/graph.hpp"

namespace gvse {

/// Each category is a document: the bag of its member attribute indices.
struct AttributeCorpus {
  std::vector<std::vector<std::size_t>> documents;
  std::size_t vocabulary = 0;

  static AttributeCorpus from_membership(const Membership& membership);
  Membership to_membership() const;
  void validate() const;
};

struct WordEmbeddingTable {
  Eigen::MatrixXd vectors;  // one row per attribute
  std::vector<std::string> names;

  std::size_t size() const { return static_cast<std::size_t>(vectors.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }
};

/// Positive PMI over document co-occurrence; never-co-occurring pairs are 0
/// and the diagonal is max(0, log 1/p(v)).
Eigen::MatrixXd build_ppmi(const AttributeCorpus& corpus);

/// Rank-d symmetric factorization E with E E^T approximating the PSD part of
/// `ppmi`, from its top-d eigenpairs. Eigenpairs come from shifted power
/// iteration with deflation, polished by Rayleigh-quotient iteration. Columns
/// past the last positive eigenvalue are zero.
WordEmbeddingTable factorize(const Eigen::MatrixXd& ppmi, std::size_t d, std::uint64_t seed = 0);

/// Frobenius norm of ppmi - E E^T.
double reconstruction_error(const Eigen::MatrixXd& ppmi, const WordEmbeddingTable& table);

struct ClassTarget {
  std::size_t vertex;
  Eigen::VectorXd vector;
};

/// Word vectors a_v for the member attributes of one class, in vertex order.
template <typename Derived>
std::vector<ClassTarget> class_targets(const WordEmbeddingTable& table, const Eigen::MatrixBase<Derived>& membership);

void write_embedding_csv(const WordEmbeddingTable& table, const std::filesystem::path& path,
                         std::string_view header_comment = {});
WordEmbeddingTable read_embedding_csv(const std::filesystem::path& path);
WordEmbeddingTable parse_embedding_csv(std::string_view text);

}  // namespace gvse

#include "gvse/embed_inl.hpp"
