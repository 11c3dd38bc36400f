#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace gvse {

using Membership = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Class-by-attribute strengths phi(y), one row per category, entries in [0,1].
struct CategoryAttributeMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> category_names;
  std::vector<std::string> attribute_names;

  std::size_t num_categories() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t num_attributes() const { return static_cast<std::size_t>(values.cols()); }

  // Throws ValidationError on size/range violations.
  void validate() const;
};

enum class BinarizeMode { Nonzero, MeanThreshold };
BinarizeMode parse_binarize_mode(std::string_view name);
std::string_view to_string(BinarizeMode mode);

/// Set membership of attributes per category. Every category must keep at
/// least one attribute.
Membership binarize_attributes(const CategoryAttributeMatrix& cam, BinarizeMode mode);

/// Symmetric PMI values with a presence mask. Pairs that never co-occur are
/// absent rather than -inf. The diagonal carries log(1/p(v)).
struct PmiMatrix {
  Eigen::MatrixXd value;
  Mask present;

  std::size_t size() const { return static_cast<std::size_t>(value.rows()); }
};

PmiMatrix compute_pmi(const Membership& membership);

/// Min-max rescale of the present off-diagonal entries onto [0,1]. A
/// degenerate range maps every present entry to 1. The diagonal is dropped.
PmiMatrix normalize_pmi(const PmiMatrix& raw);

enum class GraphKind { Attribute, Category };

GraphKind parse_graph_kind(std::string_view name);
std::string_view to_string(GraphKind kind);

struct KnowledgeGraph {
  GraphKind kind = GraphKind::Attribute;
  double delta = 0.0;
  Membership edges;  // symmetric, zero diagonal
  PmiMatrix pmi;     // normalized PMI, or cosine similarity for category graphs

  std::size_t num_vertices() const { return static_cast<std::size_t>(edges.rows()); }
  std::size_t edge_count() const;
  std::vector<std::size_t> degrees() const;
};

/// l(i,j) = 1 iff normalized PMI(i,j) > delta. delta must lie in [0,1];
/// delta = 1 yields an empty edge set.
KnowledgeGraph build_attribute_graph(const CategoryAttributeMatrix& cam, double delta, BinarizeMode mode);

/// Category-level graph: edge iff cosine similarity of attribute rows > threshold.
KnowledgeGraph build_category_graph(const CategoryAttributeMatrix& cam, double threshold);

/// Row-normalized propagation matrix D^-1 (G + I). Without self loops the
/// rows of isolated vertices are zero.
struct PropagationOperator {
  Eigen::MatrixXd matrix;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
};

PropagationOperator propagation_operator(const KnowledgeGraph& graph, bool self_loops = true);

// --- file formats ---------------------------------------------------------

CategoryAttributeMatrix read_attributes_csv(const std::filesystem::path& path);
CategoryAttributeMatrix parse_attributes_csv(std::string_view text);
void write_attributes_csv(const CategoryAttributeMatrix& cam, const std::filesystem::path& path);

/// {"m", "delta", "edges": [[i,j],...], "pmi": [[i,j,value],...]} with i < j.
nlohmann::json graph_to_json(const KnowledgeGraph& graph);
KnowledgeGraph graph_from_json(const nlohmann::json& j);

/// vertex count, edge count and degree histogram.
nlohmann::json graph_stats(const KnowledgeGraph& graph);

}  // namespace gvse
