#include "gvse/embed.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "gvse/error.hpp"
#include "gvse/io.hpp"

namespace gvse {

AttributeCorpus AttributeCorpus::from_membership(const Membership& membership) {
  AttributeCorpus corpus;
  corpus.vocabulary = static_cast<std::size_t>(membership.cols());
  for (Eigen::Index i = 0; i < membership.rows(); ++i) {
    std::vector<std::size_t> doc;
    for (Eigen::Index j = 0; j < membership.cols(); ++j)
      if (membership(i, j)) doc.push_back(static_cast<std::size_t>(j));
    corpus.documents.push_back(std::move(doc));
  }
  corpus.validate();
  return corpus;
}

void AttributeCorpus::validate() const {
  for (std::size_t d = 0; d < documents.size(); ++d) {
    if (documents[d].empty()) throw DegenerateError(fmt::format("document {} of the attribute corpus is empty", d));
    for (auto idx : documents[d])
      if (idx >= vocabulary) throw DimensionError(fmt::format("document {} references attribute {} >= {}", d, idx, vocabulary));
  }
}

Membership AttributeCorpus::to_membership() const {
  Membership m = Membership::Zero(static_cast<Eigen::Index>(documents.size()), static_cast<Eigen::Index>(vocabulary));
  for (std::size_t d = 0; d < documents.size(); ++d)
    for (auto idx : documents[d]) m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(idx)) = 1;
  return m;
}

Eigen::MatrixXd build_ppmi(const AttributeCorpus& corpus) {
  corpus.validate();
  const auto raw = compute_pmi(corpus.to_membership());
  return raw.present.select(raw.value.cwiseMax(0.0), 0.0);
}

namespace {

void project_out(Eigen::VectorXd& v, const std::vector<Eigen::VectorXd>& basis) {
  for (const auto& b : basis) v -= b.dot(v) * b;
}

// Largest-magnitude component made non-negative; first index wins ties.
void fix_sign(Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  if (v(best) < 0.0) v = -v;
}

}  // namespace

WordEmbeddingTable factorize(const Eigen::MatrixXd& ppmi, std::size_t d, std::uint64_t seed) {
  const auto m = static_cast<std::size_t>(ppmi.rows());
  if (ppmi.rows() != ppmi.cols()) throw DimensionError("factorize needs a square matrix");
  if (d < 1 || d > m) throw ConfigError(fmt::format("embedding width {} must lie in [1, {}]", d, m));

  const double scale = std::max(1.0, ppmi.cwiseAbs().rowwise().sum().maxCoeff());
  // Gershgorin shift: every eigenvalue of ppmi + shift*I is non-negative, so the
  // dominant eigenpair is the algebraically largest one.
  const double shift = scale;
  const Eigen::MatrixXd shifted = ppmi + shift * Eigen::MatrixXd::Identity(m, m);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  WordEmbeddingTable table{Eigen::MatrixXd::Zero(m, d), {}};
  std::vector<Eigen::VectorXd> basis;
  for (std::size_t k = 0; k < d; ++k) {
    Eigen::VectorXd v(m);
    for (auto& x : v) x = uniform(rng);
    project_out(v, basis);
    if (v.norm() == 0.0) break;
    v.normalize();

    for (int iter = 0; iter < 5000; ++iter) {
      Eigen::VectorXd next = shifted * v;
      project_out(next, basis);
      const double norm = next.norm();
      if (norm == 0.0) break;
      next /= norm;
      const double delta = (next - v).norm();
      v = std::move(next);
      if (delta < 1e-12) break;
    }

    double lambda = v.dot(ppmi * v);
    for (int iter = 0; iter < 8; ++iter) {
      if ((ppmi * v - lambda * v).norm() < 1e-15 * scale) break;
      Eigen::VectorXd x = (ppmi - lambda * Eigen::MatrixXd::Identity(m, m)).partialPivLu().solve(v);
      project_out(x, basis);
      const double norm = x.norm();
      if (!std::isfinite(norm) || norm == 0.0) break;
      x /= norm;
      v = std::move(x);
      lambda = v.dot(ppmi * v);
    }

    if (!(lambda > 1e-12 * scale)) break;
    fix_sign(v);
    table.vectors.col(static_cast<Eigen::Index>(k)) = std::sqrt(lambda) * v;
    basis.push_back(v);
  }
  return table;
}

double reconstruction_error(const Eigen::MatrixXd& ppmi, const WordEmbeddingTable& table) {
  return (ppmi - table.vectors * table.vectors.transpose()).norm();
}

void write_embedding_csv(const WordEmbeddingTable& table, const std::filesystem::path& path,
                         std::string_view header_comment) {
  std::string out;
  if (!header_comment.empty()) out += fmt::format("# {}\n", header_comment);
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table.names.empty() ? fmt::format("att{}", i) : table.names[i];
    for (std::size_t j = 0; j < table.dim(); ++j) out += fmt::format(",{}", table.vectors(i, j));
    out += "\n";
  }
  write_text_file(path, out);
}

WordEmbeddingTable parse_embedding_csv(std::string_view text) {
  const auto rows = parse_csv_rows(text);
  if (rows.empty()) throw ParseError("embedding CSV is empty");
  const auto width = rows.front().cells.size();
  if (width < 2) throw ParseError(fmt::format("embedding CSV line {} has no vector columns", rows.front().line));
  WordEmbeddingTable table{Eigen::MatrixXd(rows.size(), width - 1), {}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.cells.size() != width) {
      throw ParseError(fmt::format("embedding CSV line {} has {} columns, expected {}", row.line, row.cells.size(), width));
    }
    table.names.push_back(row.cells[0]);
    for (std::size_t j = 1; j < width; ++j) table.vectors(i, j - 1) = parse_double(row.cells[j], row.line);
  }
  return table;
}

WordEmbeddingTable read_embedding_csv(const std::filesystem::path& path) {
  return parse_embedding_csv(read_text_file(path));
}

}  // namespace gvse
