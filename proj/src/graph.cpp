#include "gvse/graph.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "gvse/error.hpp"

namespace gvse {

void CategoryAttributeMatrix::validate() const {
  const auto rows = num_categories(), cols = num_attributes();
  if (rows < 2 || cols < 2) {
    throw ValidationError(fmt::format("attribute matrix needs >= 2 categories and >= 2 attributes, got {}x{}", rows, cols));
  }
  if (!category_names.empty() && category_names.size() != rows) {
    throw ValidationError(fmt::format("{} category names for {} rows", category_names.size(), rows));
  }
  if (!attribute_names.empty() && attribute_names.size() != cols) {
    throw ValidationError(fmt::format("{} attribute names for {} columns", attribute_names.size(), cols));
  }
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const double v = values(i, j);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw ValidationError(fmt::format("attribute value {} at category {}, attribute {} is outside [0,1]", v, i, j));
      }
    }
}

BinarizeMode parse_binarize_mode(std::string_view name) {
  if (name == "nonzero") return BinarizeMode::Nonzero;
  if (name == "mean-threshold") return BinarizeMode::MeanThreshold;
  throw ConfigError(fmt::format("unknown binarize mode '{}'", name));
}

std::string_view to_string(BinarizeMode mode) {
  return mode == BinarizeMode::Nonzero ? "nonzero" : "mean-threshold";
}

Membership binarize_attributes(const CategoryAttributeMatrix& cam, BinarizeMode mode) {
  cam.validate();
  const Eigen::RowVectorXd threshold = mode == BinarizeMode::Nonzero
                                           ? Eigen::RowVectorXd::Zero(cam.values.cols())
                                           : Eigen::RowVectorXd(cam.values.colwise().mean());
  Membership out(cam.values.rows(), cam.values.cols());
  for (Eigen::Index i = 0; i < cam.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < cam.values.cols(); ++j) out(i, j) = cam.values(i, j) > threshold(j) ? 1 : 0;
    if (out.row(i).cast<int>().sum() == 0) {
      throw DegenerateError(fmt::format("category {} has no member attributes after binarization", i));
    }
  }
  return out;
}

PmiMatrix compute_pmi(const Membership& membership) {
  const auto categories = static_cast<double>(membership.rows());
  const Eigen::MatrixXd m = membership.cast<double>();
  const Eigen::MatrixXd co = m.transpose() * m;  // integer counts, exact in f64
  const auto n = co.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (co(i, i) == 0.0) throw DegenerateError(fmt::format("attribute {} occurs in no category", i));
  }
  PmiMatrix out{Eigen::MatrixXd::Zero(n, n), Mask::Constant(n, n, false)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p_i = co(i, i) / categories;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (co(i, j) == 0.0) continue;
      const double p_j = co(j, j) / categories;
      const double p_ij = co(i, j) / categories;
      out.value(i, j) = std::log(p_ij / (p_i * p_j));
      out.present(i, j) = true;
    }
  }
  return out;
}

PmiMatrix normalize_pmi(const PmiMatrix& raw) {
  const auto n = static_cast<Eigen::Index>(raw.size());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j || !raw.present(i, j)) continue;
      lo = std::min(lo, raw.value(i, j));
      hi = std::max(hi, raw.value(i, j));
    }
  if (lo > hi) throw DegenerateError("empty graph: no attribute pair co-occurs");

  PmiMatrix out{Eigen::MatrixXd::Zero(n, n), raw.present};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.present(i, i) = false;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j || !raw.present(i, j)) continue;
      out.value(i, j) = hi == lo ? 1.0 : (raw.value(i, j) - lo) / (hi - lo);
    }
  }
  return out;
}

std::size_t KnowledgeGraph::edge_count() const {
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < edges.rows(); ++i)
    for (Eigen::Index j = i + 1; j < edges.cols(); ++j) count += edges(i, j);
  return count;
}

std::vector<std::size_t> KnowledgeGraph::degrees() const {
  std::vector<std::size_t> out(num_vertices(), 0);
  for (Eigen::Index i = 0; i < edges.rows(); ++i)
    for (Eigen::Index j = 0; j < edges.cols(); ++j) out[i] += edges(i, j);
  return out;
}

namespace {

Membership threshold_edges(const PmiMatrix& strength, double threshold) {
  const auto n = static_cast<Eigen::Index>(strength.size());
  Membership edges = Membership::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && strength.present(i, j) && strength.value(i, j) > threshold) edges(i, j) = 1;
  return edges;
}

}  // namespace

KnowledgeGraph build_attribute_graph(const CategoryAttributeMatrix& cam, double delta, BinarizeMode mode) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError(fmt::format("PMI threshold {} outside [0,1]", delta));
  const auto normalized = normalize_pmi(compute_pmi(binarize_attributes(cam, mode)));
  return KnowledgeGraph{GraphKind::Attribute, delta, threshold_edges(normalized, delta), normalized};
}

KnowledgeGraph build_category_graph(const CategoryAttributeMatrix& cam, double threshold) {
  cam.validate();
  const Eigen::VectorXd norms = cam.values.rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    if (norms(i) == 0.0) throw DegenerateError(fmt::format("category {} has an all-zero attribute row", i));
  }
  const auto n = cam.values.rows();
  PmiMatrix sim{Eigen::MatrixXd::Zero(n, n), Mask::Constant(n, n, true)};
  for (Eigen::Index i = 0; i < n; ++i) {
    sim.present(i, i) = false;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      sim.value(i, j) = cam.values.row(i).dot(cam.values.row(j)) / (norms(i) * norms(j));
    }
  }
  return KnowledgeGraph{GraphKind::Category, threshold, threshold_edges(sim, threshold), sim};
}

PropagationOperator propagation_operator(const KnowledgeGraph& graph, bool self_loops) {
  Eigen::MatrixXd adj = graph.edges.cast<double>();
  if (self_loops) adj += Eigen::MatrixXd::Identity(adj.rows(), adj.cols());
  const Eigen::VectorXd degree = adj.rowwise().sum();
  for (Eigen::Index i = 0; i < adj.rows(); ++i) {
    if (degree(i) > 0.0) adj.row(i) /= degree(i);
  }
  return PropagationOperator{std::move(adj)};
}

GraphKind parse_graph_kind(std::string_view name) {
  if (name == "attribute") return GraphKind::Attribute;
  if (name == "category") return GraphKind::Category;
  throw ConfigError(fmt::format("unknown graph type '{}' (attribute or category)", name));
}

std::string_view to_string(GraphKind kind) { return kind == GraphKind::Attribute ? "attribute" : "category"; }

}  // namespace gvse
