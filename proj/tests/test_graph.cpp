#include <doctest.h>

#include <cmath>
#include <random>

#include "gvse/error.hpp"
#include "gvse/graph.hpp"
#include "support.hpp"

using namespace gvse;
using namespace gvse::testing;

namespace {

// Rows are categories 1..4; columns A, B, C, D.
// A in {1,2}, B in {1,2}, C in {3}, D in {1,3}.
Membership worked_example() {
  return to_membership({{1, 1, 0, 1}, {1, 1, 0, 0}, {0, 0, 1, 1}, {0, 0, 0, 0}});
}

std::vector<std::vector<int>> random_membership(std::mt19937_64& rng, std::size_t& categories, std::size_t& m) {
  categories = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
  m = std::uniform_int_distribution<std::size_t>(2, 10)(rng);
  std::bernoulli_distribution coin(0.4);
  std::vector<std::vector<int>> rows(categories, std::vector<int>(m, 0));
  for (auto& r : rows)
    for (auto& v : r) v = coin(rng);
  // every attribute occurs somewhere
  for (std::size_t j = 0; j < m; ++j) {
    bool any = false;
    for (auto& r : rows) any = any || r[j];
    if (!any) rows[std::uniform_int_distribution<std::size_t>(0, categories - 1)(rng)][j] = 1;
  }
  return rows;
}

}  // namespace

TEST_CASE("worked PMI example") {
  const auto raw = compute_pmi(worked_example());
  CHECK(raw.value(0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(raw.value(0, 3) == doctest::Approx(0.0));
  CHECK(raw.present(0, 1));
  CHECK_FALSE(raw.present(0, 2));
  CHECK_FALSE(raw.present(2, 0));
}

TEST_CASE("worked graph example gives the single edge A-B at delta 0.75") {
  // A, B and D only: raw values {ln 2, 0, 0}.
  const auto raw = compute_pmi(to_membership({{1, 1, 1}, {1, 1, 0}, {0, 0, 1}, {0, 0, 0}}));
  const auto norm = normalize_pmi(raw);
  CHECK(norm.value(0, 1) == 1.0);
  CHECK(norm.value(0, 2) == 0.0);

  auto g = build_attribute_graph(cam_from((Eigen::MatrixXd(3, 3) << 1, 1, 1, 1, 1, 0, 0, 0, 1).finished()), 0.75,
                                 BinarizeMode::Nonzero);
  CHECK(g.edge_count() == 1);
  CHECK(g.edges(0, 1) == 1);
  CHECK(g.edges(1, 0) == 1);
  CHECK(g.delta == 0.75);
}

TEST_CASE("normalization conventions") {
  PmiMatrix raw{Eigen::MatrixXd::Zero(3, 3), Mask::Constant(3, 3, false)};
  raw.value(0, 1) = raw.value(1, 0) = 0.4;
  raw.value(1, 2) = raw.value(2, 1) = 0.4;
  raw.present(0, 1) = raw.present(1, 0) = raw.present(1, 2) = raw.present(2, 1) = true;
  const auto n = normalize_pmi(raw);
  CHECK(n.value(0, 1) == 1.0);
  CHECK(n.value(1, 2) == 1.0);
  CHECK_FALSE(n.present(0, 2));

  PmiMatrix empty{Eigen::MatrixXd::Zero(2, 2), Mask::Constant(2, 2, false)};
  empty.present(0, 0) = empty.present(1, 1) = true;
  CHECK_THROWS_AS(normalize_pmi(empty), DegenerateError);
}

TEST_CASE("compute_pmi matches pair enumeration on random instances") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    std::size_t categories = 0, m = 0;
    const auto rows = random_membership(rng, categories, m);
    const auto got = compute_pmi(to_membership(rows));
    const auto want = brute_force_pmi(rows);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        REQUIRE(got.present(i, j) == want.present[i][j]);
        if (want.present[i][j]) CHECK(got.value(i, j) == want.value[i][j]);
        CHECK(got.value(i, j) == got.value(j, i));
      }
  }
}

TEST_CASE("a never-used attribute is rejected") {
  CHECK_THROWS_AS(compute_pmi(to_membership({{1, 0}, {1, 0}})), DegenerateError);
}

TEST_CASE("binarization modes") {
  const auto mean = binarize_attributes(cam_from((Eigen::MatrixXd(2, 2) << 0.1, 1.0, 0.9, 0.0).finished()),
                                        BinarizeMode::MeanThreshold);
  CHECK(mean(0, 0) == 0);
  CHECK(mean(1, 0) == 1);
  const auto binary = cam_from((Eigen::MatrixXd(2, 3) << 1, 0, 1, 0, 1, 1).finished());
  CHECK(binarize_attributes(binary, BinarizeMode::Nonzero) == binary.values.cast<std::uint8_t>());
  CHECK_THROWS_AS(binarize_attributes(cam_from((Eigen::MatrixXd(2, 2) << 0, 0, 1, 1).finished()), BinarizeMode::Nonzero),
                  DegenerateError);
  CHECK(parse_binarize_mode("mean-threshold") == BinarizeMode::MeanThreshold);
  CHECK_THROWS_AS(parse_binarize_mode("median"), ConfigError);

  // Both modes keep every class non-empty when each class has a strong attribute.
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> weak(0.0, 0.3);
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd v(10, 15);
    for (Eigen::Index i = 0; i < v.rows(); ++i)
      for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = weak(rng);
    for (Eigen::Index i = 0; i < v.rows(); ++i) v(i, static_cast<Eigen::Index>(rng() % 15)) = 1.0;
    CHECK_NOTHROW(binarize_attributes(cam_from(v), BinarizeMode::Nonzero));
    CHECK_NOTHROW(binarize_attributes(cam_from(v), BinarizeMode::MeanThreshold));
  }
}

TEST_CASE("attribute matrix validation") {
  CHECK_THROWS_AS(cam_from((Eigen::MatrixXd(2, 2) << 0, 1.5, 1, 1).finished()).validate(), ValidationError);
  CHECK_THROWS_AS(cam_from(Eigen::MatrixXd::Ones(1, 3)).validate(), ValidationError);
}

TEST_CASE("thresholds") {
  // Distinct raw values: only the maximum pair survives a near-1 threshold.
  const auto cam = cam_from((Eigen::MatrixXd(5, 4) << 1, 1, 0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 0, 1, 0, 1, 1, 0, 0, 0).finished());
  const auto g = build_attribute_graph(cam, 0.99, BinarizeMode::Nonzero);
  const auto raw = compute_pmi(binarize_attributes(cam, BinarizeMode::Nonzero));
  double best = -1e300;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j && raw.present(i, j)) best = std::max(best, raw.value(i, j));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (g.edges(i, j)) CHECK(raw.value(i, j) == best);
  CHECK(g.edge_count() >= 1);

  CHECK(build_attribute_graph(cam, 1.0, BinarizeMode::Nonzero).edge_count() == 0);
  CHECK_THROWS_AS(build_attribute_graph(cam, 1.5, BinarizeMode::Nonzero), ConfigError);
  CHECK_THROWS_AS(build_attribute_graph(cam, -0.1, BinarizeMode::Nonzero), ConfigError);
}

TEST_CASE("raising delta never adds edges") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 50; ++t) {
    Eigen::MatrixXd v = (Eigen::MatrixXd::Random(8, 10).array() > 0.0).cast<double>();
    for (Eigen::Index i = 0; i < 8; ++i) v(i, static_cast<Eigen::Index>(rng() % 10)) = 1.0;
    for (Eigen::Index j = 0; j < 10; ++j) v(static_cast<Eigen::Index>(rng() % 8), j) = 1.0;
    const auto cam = cam_from(v);
    Membership prev;
    for (double delta : {0.0, 0.25, 0.5, 0.75, 0.9, 1.0}) {
      const auto g = build_attribute_graph(cam, delta, BinarizeMode::Nonzero);
      CHECK(g.edges == g.edges.transpose());
      CHECK(g.edges.diagonal().cast<int>().sum() == 0);
      if (prev.size() != 0) CHECK(((g.edges.array() > 0) && (prev.array() == 0)).count() == 0);
      for (Eigen::Index i = 0; i < 10; ++i)
        for (Eigen::Index j = 0; j < 10; ++j)
          if (g.edges(i, j)) CHECK(g.pmi.value(i, j) > delta);
      prev = g.edges;
    }
  }
}

TEST_CASE("category graph") {
  const auto cam = cam_from((Eigen::MatrixXd(3, 3) << 1, 1, 0, 1, 0, 0, 0, 0, 1).finished());
  const auto g = build_category_graph(cam, 0.5);
  CHECK(g.kind == GraphKind::Category);
  CHECK(g.num_vertices() == 3);
  CHECK(g.pmi.value(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(g.edges(0, 1) == 1);
  CHECK(g.edges(1, 2) == 0);
  CHECK(g.edges(0, 2) == 0);

  const auto same = build_category_graph(cam_from((Eigen::MatrixXd(2, 2) << 0.3, 0.4, 0.3, 0.4).finished()), 0.5);
  CHECK(same.edges(0, 1) == 1);
  CHECK_THROWS_AS(build_category_graph(cam_from((Eigen::MatrixXd(2, 2) << 0, 0, 1, 1).finished()), 0.5), DegenerateError);
  CHECK(parse_graph_kind("category") == GraphKind::Category);
  CHECK_THROWS_AS(parse_graph_kind("knn"), ConfigError);
}

TEST_CASE("category graph edges are invariant to positive row scaling") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.0, 1.0), s(0.05, 1.0);
  for (int t = 0; t < 1000; ++t) {
    Eigen::MatrixXd v(5, 4);
    for (Eigen::Index i = 0; i < 5; ++i)
      for (Eigen::Index j = 0; j < 4; ++j) v(i, j) = u(rng);
    Eigen::MatrixXd w = v;
    // Scale down so values stay inside [0,1].
    for (Eigen::Index i = 0; i < 5; ++i) w.row(i) *= s(rng);
    CHECK(build_category_graph(cam_from(v), 0.5).edges == build_category_graph(cam_from(w), 0.5).edges);
  }
}

TEST_CASE("propagation operator") {
  KnowledgeGraph none;
  none.edges = Membership::Zero(4, 4);
  CHECK(propagation_operator(none).matrix == Eigen::MatrixXd::Identity(4, 4));

  KnowledgeGraph pair;
  pair.edges = Membership::Zero(2, 2);
  pair.edges(0, 1) = pair.edges(1, 0) = 1;
  CHECK(propagation_operator(pair).matrix == Eigen::MatrixXd::Constant(2, 2, 0.5));
  CHECK(propagation_operator(none, false).matrix == Eigen::MatrixXd::Zero(4, 4));

  std::mt19937_64 rng(15);
  for (int t = 0; t < 100; ++t) {
    const auto n = static_cast<Eigen::Index>(2 + rng() % 12);
    KnowledgeGraph g;
    g.edges = Membership::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        if (rng() % 3 == 0) g.edges(i, j) = g.edges(j, i) = 1;
    const auto p = propagation_operator(g).matrix;
    CHECK((p.array() >= 0.0).all());
    for (Eigen::Index i = 0; i < n; ++i) CHECK(std::abs(p.row(i).sum() - 1.0) <= 1e-14);
  }
}

TEST_CASE("graph JSON and CSV round trips") {
  const auto cam = cam_from((Eigen::MatrixXd(4, 4) << 1, 1, 0, 1, 1, 1, 0, 0, 0, 0, 1, 1, 0.5, 0, 0.2, 0).finished());
  const auto g = build_attribute_graph(cam, 0.5, BinarizeMode::Nonzero);
  const auto j = graph_to_json(g);
  CHECK(j.at("m") == 4);
  const auto back = graph_from_json(j);
  CHECK(back.edges == g.edges);
  CHECK(back.delta == g.delta);
  for (Eigen::Index a = 0; a < 4; ++a)
    for (Eigen::Index b = 0; b < 4; ++b) {
      CHECK(back.pmi.present(a, b) == g.pmi.present(a, b));
      if (g.pmi.present(a, b)) CHECK(back.pmi.value(a, b) == g.pmi.value(a, b));
    }
  const auto stats = graph_stats(g);
  CHECK(stats.at("edges") == g.edge_count());

  const auto dir = temp_dir("graph_csv");
  write_attributes_csv(cam, dir / "a.csv");
  const auto read = read_attributes_csv(dir / "a.csv");
  CHECK(read.values == cam.values);
  CHECK(read.attribute_names == cam.attribute_names);
  CHECK(read.category_names == cam.category_names);

  CHECK_THROWS_AS(parse_attributes_csv("name,a,b\nx,0.5\n"), ParseError);
  CHECK_THROWS_AS(parse_attributes_csv("name,a,b\nx,0.5,2.0\ny,0,1\n"), ValidationError);
}
