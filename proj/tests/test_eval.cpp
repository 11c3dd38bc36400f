#include <doctest.h>

#include <cmath>
#include <random>

#include "gvse/error.hpp"
#include "gvse/eval.hpp"
#include "support.hpp"

using namespace gvse;

namespace {

// Exhaustive scan, strict improvement only, so the first maximum wins.
std::size_t scan_argmax(const std::vector<double>& scores, std::span<const std::size_t> space) {
  std::size_t best = space[0];
  double top = scores[space[0]];
  for (auto y : space)
    if (scores[y] > top || (scores[y] == top && y < best)) {
      top = scores[y];
      best = y;
    }
  return best;
}

}  // namespace

TEST_CASE("seen prototypes") {
  const Eigen::MatrixXd f = (Eigen::MatrixXd(4, 2) << 1, 2, -1, -2, 3, 4, 5, 6).finished();
  const std::vector<std::size_t> labels{0, 0, 1, 2};
  const std::vector<std::size_t> classes{0, 1, 2};
  const auto p = seen_prototypes(f, labels, classes);
  CHECK(p.row(0).norm() == 0.0);
  CHECK(p.row(1) == f.row(2));
  CHECK(p.row(2) == f.row(3));
  const std::vector<std::size_t> missing{0, 3};
  CHECK_THROWS_AS(seen_prototypes(f, labels, missing), DegenerateError);

  std::mt19937_64 rng(51);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Random(60, 5);
  std::vector<std::size_t> lab(60);
  for (auto& l : lab) l = rng() % 4;
  const std::vector<std::size_t> four{0, 1, 2, 3};
  const auto q = seen_prototypes(g, lab, four);
  for (std::size_t c = 0; c < 4; ++c) {
    for (Eigen::Index k = 0; k < 5; ++k) {
      double s = 0.0;
      int n = 0;
      for (std::size_t i = 0; i < 60; ++i)
        if (lab[i] == c) {
          s += g(static_cast<Eigen::Index>(i), k);
          ++n;
        }
      CHECK(std::abs(q(static_cast<Eigen::Index>(c), k) - s / n) <= 1e-14);
    }
  }
}

TEST_CASE("ridge prototypes") {
  Eigen::MatrixXd phi(1, 2);
  phi << 0.6, 0.8;
  const Eigen::Vector2d target(0.6, 0.8);
  const auto beta = ridge_coefficients(phi, target);
  CHECK(beta(0) == doctest::Approx(0.5).epsilon(1e-14));
  const Eigen::MatrixXd proto = (Eigen::MatrixXd(1, 3) << 2, -4, 6).finished();
  const Eigen::VectorXd u = unseen_prototype_ridge(phi, target, proto);
  CHECK((u - 0.5 * proto.row(0).transpose()).norm() < 1e-14);
  CHECK(unseen_prototype_ridge(phi, Eigen::Vector2d::Zero(), proto).norm() == 0.0);

  std::mt19937_64 rng(52);
  for (int t = 0; t < 100; ++t) {
    const auto s = static_cast<Eigen::Index>(1 + rng() % 20);
    const auto m = static_cast<Eigen::Index>(1 + rng() % 50);
    const Eigen::MatrixXd a = Eigen::MatrixXd::Random(s, m);
    const Eigen::VectorXd y = Eigen::VectorXd::Random(m);
    const auto b = ridge_coefficients(a, y);
    const Eigen::MatrixXd gram = a * a.transpose() + Eigen::MatrixXd::Identity(s, s);
    CHECK((gram * b - a * y).norm() < 1e-10);
  }
}

TEST_CASE("prototype set covers every class") {
  const Eigen::MatrixXd att = (Eigen::MatrixXd(3, 2) << 1, 0, 0, 1, 0.6, 0.8).finished();
  const Eigen::MatrixXd feats = (Eigen::MatrixXd(4, 2) << 1, 1, 3, 3, -2, 0, -2, 2).finished();
  const std::vector<std::size_t> labels{0, 0, 1, 1};
  const SplitSpec split{{0, 1}, {2}};
  const auto protos = build_prototypes(feats, labels, att, split);
  CHECK(protos.latent.rows() == 3);
  CHECK(protos.latent.row(0) == Eigen::RowVector2d(2, 2));
  for (bool b : protos.has_latent) CHECK(b);
  const Eigen::MatrixXd seen_att = att.topRows(2);
  const Eigen::MatrixXd seen_proto = protos.latent.topRows(2);
  const Eigen::VectorXd expect = unseen_prototype_ridge(seen_att, att.row(2).transpose(), seen_proto);
  CHECK((protos.latent.row(2).transpose() - expect).norm() < 1e-14);
}

TEST_CASE("CZSL prediction") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(4, 4);
  const std::vector<std::size_t> all{0, 1, 2, 3};
  CHECK(predict_czsl(eye.row(2).transpose(), eye, all) == 2);
  CHECK(predict_czsl(Eigen::VectorXd::Zero(4), eye, all) == 0);
  const std::vector<std::size_t> tail{3, 1};
  CHECK(predict_czsl(Eigen::VectorXd::Zero(4), eye, tail) == 1);

  std::mt19937_64 rng(53);
  for (int t = 0; t < 500; ++t) {
    const Eigen::MatrixXd att = Eigen::MatrixXd::Random(8, 5);
    const Eigen::VectorXd x = Eigen::VectorXd::Random(5);
    const std::vector<std::size_t> space{1, 3, 4, 6, 7};
    std::vector<double> s(8);
    for (int y = 0; y < 8; ++y) s[y] = x.dot(att.row(y));
    const auto pred = predict_czsl(x, att, space);
    CHECK(pred == scan_argmax(s, space));
    CHECK(predict_czsl(x * 3.7, att, space) == pred);
  }
}

TEST_CASE("latent prediction") {
  std::mt19937_64 rng(54);
  const std::vector<std::size_t> space{0, 1, 2, 3, 4};
  for (int t = 0; t < 300; ++t) {
    PrototypeSet p;
    p.attributes = Eigen::MatrixXd::Random(5, 4);
    p.latent = Eigen::MatrixXd::Random(5, 3);
    p.has_latent.assign(5, true);
    const Eigen::VectorXd phi = Eigen::VectorXd::Random(4), lat = Eigen::VectorXd::Random(3);
    std::vector<double> dot(5), dist(5);
    for (int y = 0; y < 5; ++y) {
      dot[y] = phi.dot(p.attributes.row(y)) + lat.dot(p.latent.row(y));
      dist[y] = dot[y] - 0.5 * p.latent.row(y).squaredNorm();
    }
    CHECK(predict_with_latent(phi, lat, p, space, LatentScore::Dot) == scan_argmax(dot, space));
    CHECK(predict_with_latent(phi, lat, p, space, LatentScore::Distance) == scan_argmax(dist, space));

    // Zero prototypes reduce to the attribute-only rule.
    PrototypeSet z = p;
    z.latent.setZero();
    for (auto score : {LatentScore::Dot, LatentScore::Distance})
      CHECK(predict_with_latent(phi, lat, z, space, score) == predict_czsl(phi, p.attributes, space));

    // Zero attribute scores leave the latent similarity alone.
    std::vector<double> lat_only(5);
    for (int y = 0; y < 5; ++y) lat_only[y] = lat.dot(p.latent.row(y));
    CHECK(predict_with_latent(Eigen::VectorXd::Zero(4), lat, p, space, LatentScore::Dot) == scan_argmax(lat_only, space));
  }

  PrototypeSet p;
  p.attributes = Eigen::MatrixXd::Identity(2, 2);
  p.latent = Eigen::MatrixXd::Zero(2, 1);
  p.has_latent = {true, false};
  const std::vector<std::size_t> both{0, 1};
  CHECK_THROWS_AS(predict_with_latent(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(1), p, both), ContractError);
  CHECK(parse_latent_score("distance") == LatentScore::Distance);
  CHECK_THROWS_AS(parse_latent_score("cosine"), ConfigError);
}

TEST_CASE("per-class accuracy") {
  std::vector<std::size_t> labels(11, 0), preds(11, 0);
  labels[10] = 1;
  const std::vector<std::size_t> classes{0, 1};
  auto acc = per_class_top1(preds, labels, classes);
  CHECK(acc.mean == 0.5);
  CHECK(acc.per_class.at(0) == 1.0);
  CHECK(acc.per_class.at(1) == 0.0);
  CHECK(per_class_top1(labels, labels, classes).mean == 1.0);

  const std::vector<std::size_t> with_empty{0, 1, 2};
  acc = per_class_top1(preds, labels, with_empty);
  CHECK(acc.excluded == std::vector<std::size_t>{2});
  CHECK(acc.mean == 0.5);

  // Tally oracle.
  std::mt19937_64 rng(55);
  std::vector<std::size_t> l(500), p(500);
  for (std::size_t i = 0; i < 500; ++i) {
    l[i] = rng() % 6;
    p[i] = rng() % 3 == 0 ? l[i] : rng() % 6;
  }
  const std::vector<std::size_t> six{0, 1, 2, 3, 4, 5};
  const auto r = per_class_top1(p, l, six);
  double total = 0.0;
  for (std::size_t c = 0; c < 6; ++c) {
    int hit = 0, n = 0;
    for (std::size_t i = 0; i < 500; ++i)
      if (l[i] == c) {
        ++n;
        hit += p[i] == c;
      }
    CHECK(r.per_class.at(c) == static_cast<double>(hit) / n);
    total += static_cast<double>(hit) / n;
  }
  CHECK(std::abs(r.mean - total / 6) < 1e-15);
}

TEST_CASE("harmonic mean") {
  CHECK(harmonic_mean(0.5, 0.5) == doctest::Approx(0.5));
  CHECK(harmonic_mean(0.8, 0.4) == doctest::Approx(8.0 / 15.0).epsilon(1e-15));
  CHECK(harmonic_mean(0.7, 0.0) == 0.0);
  CHECK(harmonic_mean(0.0, 0.0) == 0.0);
  std::mt19937_64 rng(56);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const double s = u(rng), v = u(rng);
    const double h = harmonic_mean(s, v);
    CHECK(h <= (s + v) / 2 + 1e-15);
    CHECK(h <= std::max(s, v));
    CHECK(h >= 0.0);
  }
}

TEST_CASE("CZSL and GZSL metrics") {
  const SplitSpec split{{0, 1}, {2, 3}};
  const std::vector<std::size_t> labels{0, 1, 2, 2, 3, 3};
  const std::vector<std::size_t> preds{0, 0, 2, 3, 3, 3};
  const auto g = gzsl_metrics(preds, labels, split);
  CHECK(g.acc_s == 0.5);
  CHECK(g.acc_u == 0.75);
  CHECK(g.h == doctest::Approx(harmonic_mean(0.5, 0.75)));
  CHECK(g.acc == g.h);

  const std::vector<std::size_t> u_labels{2, 2, 3}, u_preds{2, 3, 3};
  const auto c = czsl_metrics(u_preds, u_labels, split);
  CHECK(c.acc == 0.75);
  CHECK(c.setting == "czsl");
  CHECK_THROWS_AS(gzsl_metrics(u_preds, u_labels, split), ContractError);

  const auto j = metrics_to_json(g, "synthetic", "abcd");
  CHECK(j.at("setting") == "gzsl");
  CHECK(j.at("config_digest") == "abcd");
  CHECK(j.contains("h"));
  CHECK(j.at("per_class").size() == 4);
  CHECK_FALSE(metrics_to_json(c, "synthetic", "abcd").contains("h"));
}
