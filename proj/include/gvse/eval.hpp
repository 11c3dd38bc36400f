#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gvse/data.hpp"

namespace gvse {

/// Per-class means of latent features, one row per entry of `classes`.
Eigen::MatrixXd seen_prototypes(const Eigen::MatrixXd& features, std::span<const std::size_t> labels,
                                std::span<const std::size_t> classes);

/// beta = (Phi Phi^T + I)^{-1} Phi phi_u for the S x m seen attribute matrix Phi.
template <typename DerivedA, typename DerivedB>
Eigen::VectorXd ridge_coefficients(const Eigen::MatrixBase<DerivedA>& phi_seen, const Eigen::MatrixBase<DerivedB>& phi_u) {
  const auto s = phi_seen.rows();
  const Eigen::MatrixXd gram = phi_seen * phi_seen.transpose() + Eigen::MatrixXd::Identity(s, s);
  return gram.ldlt().solve(phi_seen * phi_u);
}

/// sum_y beta_y * seen_protos.row(y)
template <typename DerivedA, typename DerivedB, typename DerivedC>
Eigen::VectorXd unseen_prototype_ridge(const Eigen::MatrixBase<DerivedA>& phi_seen,
                                       const Eigen::MatrixBase<DerivedB>& phi_u,
                                       const Eigen::MatrixBase<DerivedC>& seen_protos) {
  return seen_protos.transpose() * ridge_coefficients(phi_seen, phi_u);
}

/// Latent prototypes and attribute rows for every class, indexed by class id.
struct PrototypeSet {
  Eigen::MatrixXd latent;      // |Y| x h
  Eigen::MatrixXd attributes;  // |Y| x m
  std::vector<bool> has_latent;
};

/// Seen prototypes from training features, unseen ones by ridge regression.
PrototypeSet build_prototypes(const Eigen::MatrixXd& train_features, std::span<const std::size_t> train_labels,
                              const Eigen::MatrixXd& attributes, const SplitSpec& split);

/// argmax over `space` of phi_x . attributes.row(y); ties go to the lowest class id.
std::size_t predict_czsl(const Eigen::VectorXd& phi_x, const Eigen::MatrixXd& attributes,
                         std::span<const std::size_t> space);

// Dot: lat_x . phi_lat(y). Distance: lat_x . phi_lat(y) - |phi_lat(y)|^2 / 2,
// i.e. nearest prototype, which ignores the arbitrary origin of the latent space.
enum class LatentScore { Dot, Distance };
LatentScore parse_latent_score(std::string_view name);
std::string_view to_string(LatentScore s);

/// argmax over `space` of phi_x . phi(y) + latent score of y.
std::size_t predict_with_latent(const Eigen::VectorXd& phi_x, const Eigen::VectorXd& lat_x,
                                const PrototypeSet& protos, std::span<const std::size_t> space,
                                LatentScore score = LatentScore::Dot);

struct ClassAccuracy {
  std::map<std::size_t, double> per_class;
  std::vector<std::size_t> excluded;  // listed classes with no test sample
  double mean = 0.0;
};

ClassAccuracy per_class_top1(std::span<const std::size_t> preds, std::span<const std::size_t> labels,
                             std::span<const std::size_t> classes);

double harmonic_mean(double acc_s, double acc_u);

struct Metrics {
  std::string setting;  // "czsl" or "gzsl"
  ClassAccuracy seen, unseen;
  double acc = 0.0;  // czsl: unseen mean
  double acc_s = 0.0, acc_u = 0.0, h = 0.0;
};

Metrics czsl_metrics(std::span<const std::size_t> preds, std::span<const std::size_t> labels, const SplitSpec& split);
Metrics gzsl_metrics(std::span<const std::size_t> preds, std::span<const std::size_t> labels, const SplitSpec& split);

nlohmann::json metrics_to_json(const Metrics& metrics, const std::string& split_name, const std::string& digest);

}  // namespace gvse
