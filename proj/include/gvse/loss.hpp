#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gvse/autodiff.hpp"
#include "gvse/graph.hpp"

namespace gvse {

struct LossWeights {
  double gamma = 0.5;
  double alpha = 1.0;
  double bias_weight = 1.0;

  void validate() const;
};

struct Triplet {
  std::size_t anchor, positive, negative;
};
using TripletBatch = std::vector<Triplet>;

/// Softmax cross-entropy of scores phi * A_seen^T. `labels` are class ids and
/// `seen` lists the class ids whose rows of `attributes` form the score space.
Var loss_attribute_ce(Var phi, std::span<const std::size_t> labels, const Eigen::MatrixXd& attributes,
                      std::span<const std::size_t> seen);

struct TripletLoss {
  Var value;
  bool empty = false;  // no triplets: value is a zero constant
};

/// mean over triplets of max(0, |a-p|^2 - |a-n|^2 + alpha)
TripletLoss loss_triplet(Var lat, const TripletBatch& triplets, double alpha);

/// (1/N) sum_i sum over member vertices v of class y_i of |pred_i[v] - target[v]|^2.
/// `targets` has one row per graph vertex, `membership` one row per class.
Var loss_wordvec(std::span<const Var> predictions, std::span<const std::size_t> labels,
                 const Eigen::MatrixXd& targets, const Membership& membership);

/// mean over unlabeled samples of -log sum_{y in unseen} softmax(phi A^T)_y,
/// with the softmax taken over every class.
Var loss_bias(Var phi_unlabeled, const Eigen::MatrixXd& attributes, std::span<const std::size_t> unseen);

struct LossParts {
  Var attribute;
  std::optional<Var> triplet;
  std::optional<Var> wordvec;
  std::optional<Var> bias;
};

/// L_A + L_LT + gamma * L_W (+ bias_weight * L_B when transductive).
Var loss_total(const LossParts& parts, const LossWeights& weights, bool transductive);

/// For each anchor with a same-label partner, one random positive and one
/// random negative from the batch.
TripletBatch mine_triplets(std::span<const std::size_t> labels, std::mt19937_64& rng);

}  // namespace gvse
