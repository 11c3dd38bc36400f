// Shared helpers and independent reference implementations for the tests.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gvse/config.hpp"
#include "gvse/graph.hpp"
#include "gvse/model.hpp"
#include "gvse/tensor.hpp"

namespace gvse::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> data(element_count(shape));
  for (auto& v : data) v = dist(rng);
  return Tensor(std::move(shape), std::move(data));
}

inline Param random_param(std::string name, Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  return Param(std::move(name), random_tensor(std::move(shape), rng, -scale, scale));
}

inline std::vector<double> naive_matmul(const std::vector<double>& a, const std::vector<double>& b, std::size_t p,
                                        std::size_t q, std::size_t r) {
  std::vector<double> out(p * r, 0.0);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < q; ++k) s += a[i * q + k] * b[k * r + j];
      out[i * r + j] = s;
    }
  return out;
}

// Direct cross-correlation, six nested loops.
inline std::vector<double> naive_conv2d(const Tensor& x, const Tensor& k, std::size_t stride, std::size_t pad) {
  const auto ci = x.dim(0), h = x.dim(1), w = x.dim(2);
  const auto co = k.dim(0), ks = k.dim(2);
  const auto ho = (h + 2 * pad - ks) / stride + 1, wo = (w + 2 * pad - ks) / stride + 1;
  std::vector<double> out(co * ho * wo, 0.0);
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t r = 0; r < ho; ++r)
      for (std::size_t c = 0; c < wo; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < ci; ++i)
          for (std::size_t kr = 0; kr < ks; ++kr)
            for (std::size_t kc = 0; kc < ks; ++kc) {
              const auto rr = static_cast<long>(r * stride + kr) - static_cast<long>(pad);
              const auto cc = static_cast<long>(c * stride + kc) - static_cast<long>(pad);
              if (rr < 0 || cc < 0 || rr >= static_cast<long>(h) || cc >= static_cast<long>(w)) continue;
              s += x[(i * h + rr) * w + cc] * k[((o * ci + i) * ks + kr) * ks + kc];
            }
        out[(o * ho + r) * wo + c] = s;
      }
  return out;
}

struct BrutePmi {
  std::vector<std::vector<double>> value;
  std::vector<std::vector<bool>> present;
};

// Counts categories by enumeration for every attribute pair.
inline BrutePmi brute_force_pmi(const std::vector<std::vector<int>>& member) {
  const auto categories = member.size();
  const auto m = member.front().size();
  BrutePmi out{std::vector<std::vector<double>>(m, std::vector<double>(m, 0.0)),
               std::vector<std::vector<bool>>(m, std::vector<bool>(m, false))};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      int ci = 0, cj = 0, both = 0;
      for (std::size_t y = 0; y < categories; ++y) {
        ci += member[y][i];
        cj += member[y][j];
        both += member[y][i] && member[y][j];
      }
      if (both == 0) continue;
      const double n = static_cast<double>(categories);
      out.value[i][j] = std::log((both / n) / ((ci / n) * (cj / n)));
      out.present[i][j] = true;
    }
  return out;
}

inline Membership to_membership(const std::vector<std::vector<int>>& rows) {
  Membership m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = static_cast<std::uint8_t>(rows[i][j]);
  return m;
}

inline CategoryAttributeMatrix cam_from(const Eigen::MatrixXd& values) {
  CategoryAttributeMatrix cam;
  cam.values = values;
  for (Eigen::Index i = 0; i < values.rows(); ++i) cam.category_names.push_back("c" + std::to_string(i));
  for (Eigen::Index j = 0; j < values.cols(); ++j) cam.attribute_names.push_back("a" + std::to_string(j));
  return cam;
}

// Two CNN blocks on 8x8 inputs, both wired, over an m = 6 graph with d = 4.
inline ModelConfig tiny_model_config() {
  ModelConfig mc;
  mc.image_channels = 3;
  mc.image_size = 8;
  mc.blocks = {{3, 4, 1, 3}, {4, 5, 2, 3}};
  mc.wiring = WiringStrategy::EachBlock;
  mc.fusion = FusionMode::Concat;
  mc.latent = true;
  mc.latent_dim = 3;
  mc.node_dim = 3;
  mc.gcn_hidden = 6;
  mc.word_dim = 4;
  mc.num_attributes = 6;
  mc.num_vertices = 6;
  return mc;
}

// A small attribute graph on 6 vertices: a path plus one chord.
inline PropagationOperator tiny_propagation() {
  KnowledgeGraph g;
  g.edges = Membership::Zero(6, 6);
  for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 3}}) {
    g.edges(i, j) = 1;
    g.edges(j, i) = 1;
  }
  return propagation_operator(g);
}

// Scalar-at-a-time Adam.
struct ScalarAdam {
  double lr, b1, b2, eps;
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double x, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return x - lr * mh / (std::sqrt(vh) + eps);
  }
};

// Small synthetic experiment that trains in well under a second per epoch.
inline ExperimentConfig tiny_experiment() {
  ExperimentConfig c;
  auto& sp = c.data.spec;
  sp.classes = 6;
  sp.seen = 4;
  sp.attributes = 8;
  sp.image_size = 8;
  sp.samples_per_class = 6;
  sp.group_size = 4;
  c.embedding_dim = 4;
  c.model.blocks = {{3, 4, 2, 3}, {4, 4, 1, 3}};
  c.model.latent_dim = 4;
  c.model.node_dim = 3;
  c.model.gcn_hidden = 8;
  c.graph.delta = 0.5;
  c.train.batch = 8;
  c.train.epochs = 2;
  c.validate();
  return c;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("gvse_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace gvse::testing
