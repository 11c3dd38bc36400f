#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "gvse/error.hpp"
#include "gvse/graph.hpp"
#include "gvse/io.hpp"

namespace gvse {

CategoryAttributeMatrix parse_attributes_csv(std::string_view text) {
  const auto rows = parse_csv_rows(text);
  if (rows.empty()) throw ParseError("attributes CSV is empty");

  const auto& header = rows.front();
  if (header.cells.size() < 3) {
    throw ParseError(fmt::format("attributes CSV header (line {}) needs a name column and >= 2 attributes",
                                 header.line));
  }
  CategoryAttributeMatrix cam;
  cam.attribute_names.assign(header.cells.begin() + 1, header.cells.end());
  const auto m = cam.attribute_names.size();

  std::vector<std::vector<double>> values;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.cells.size() != m + 1) {
      throw ParseError(fmt::format("attributes CSV line {} (category '{}') has {} columns, expected {}", row.line,
                                   row.cells.empty() ? "" : row.cells[0], row.cells.size(), m + 1));
    }
    cam.category_names.push_back(row.cells[0]);
    std::vector<double> v;
    for (std::size_t c = 1; c < row.cells.size(); ++c) v.push_back(parse_double(row.cells[c], row.line));
    values.push_back(std::move(v));
  }
  cam.values.resize(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = 0; j < m; ++j) cam.values(i, j) = values[i][j];
  cam.validate();
  return cam;
}

CategoryAttributeMatrix read_attributes_csv(const std::filesystem::path& path) {
  return parse_attributes_csv(read_text_file(path));
}

void write_attributes_csv(const CategoryAttributeMatrix& cam, const std::filesystem::path& path) {
  std::string out = "category";
  for (std::size_t j = 0; j < cam.num_attributes(); ++j) {
    out += ",";
    out += cam.attribute_names.empty() ? fmt::format("att{}", j) : cam.attribute_names[j];
  }
  out += "\n";
  for (std::size_t i = 0; i < cam.num_categories(); ++i) {
    out += cam.category_names.empty() ? fmt::format("class{}", i) : cam.category_names[i];
    for (std::size_t j = 0; j < cam.num_attributes(); ++j) out += fmt::format(",{}", cam.values(i, j));
    out += "\n";
  }
  write_text_file(path, out);
}

nlohmann::json graph_to_json(const KnowledgeGraph& graph) {
  nlohmann::json j;
  j["kind"] = graph.kind == GraphKind::Attribute ? "attribute" : "category";
  j["m"] = graph.num_vertices();
  j["delta"] = graph.delta;
  auto edges = nlohmann::json::array();
  auto pmi = nlohmann::json::array();
  const auto n = static_cast<Eigen::Index>(graph.num_vertices());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j2 = i + 1; j2 < n; ++j2) {
      if (graph.edges(i, j2)) edges.push_back({i, j2});
      if (graph.pmi.present(i, j2)) pmi.push_back({i, j2, graph.pmi.value(i, j2)});
    }
  j["edges"] = std::move(edges);
  j["pmi"] = std::move(pmi);
  return j;
}

KnowledgeGraph graph_from_json(const nlohmann::json& j) {
  try {
    KnowledgeGraph g;
    g.kind = j.value("kind", std::string("attribute")) == "category" ? GraphKind::Category : GraphKind::Attribute;
    const auto n = j.at("m").get<Eigen::Index>();
    g.delta = j.at("delta").get<double>();
    g.edges = Membership::Zero(n, n);
    g.pmi = PmiMatrix{Eigen::MatrixXd::Zero(n, n), Mask::Constant(n, n, false)};
    for (const auto& e : j.at("edges")) {
      const auto a = e.at(0).get<Eigen::Index>(), b = e.at(1).get<Eigen::Index>();
      if (a < 0 || b < 0 || a >= n || b >= n || a == b) throw ParseError(fmt::format("bad edge [{},{}]", a, b));
      g.edges(a, b) = g.edges(b, a) = 1;
    }
    for (const auto& e : j.at("pmi")) {
      const auto a = e.at(0).get<Eigen::Index>(), b = e.at(1).get<Eigen::Index>();
      if (a < 0 || b < 0 || a >= n || b >= n) throw ParseError(fmt::format("bad pmi entry [{},{}]", a, b));
      g.pmi.value(a, b) = g.pmi.value(b, a) = e.at(2).get<double>();
      g.pmi.present(a, b) = g.pmi.present(b, a) = true;
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("graph JSON: ") + e.what());
  }
}

nlohmann::json graph_stats(const KnowledgeGraph& graph) {
  std::map<std::size_t, std::size_t> histogram;
  for (auto d : graph.degrees()) ++histogram[d];
  auto hist = nlohmann::json::object();
  for (auto [degree, count] : histogram) hist[std::to_string(degree)] = count;
  return {{"vertices", graph.num_vertices()}, {"edges", graph.edge_count()}, {"delta", graph.delta},
          {"degree_histogram", hist}};
}

}  // namespace gvse
