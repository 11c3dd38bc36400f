#include "gvse/loss.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gvse/error.hpp"
#include "gvse/ops.hpp"

namespace gvse {

void LossWeights::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError(fmt::format("gamma must be >= 0, got {}", gamma));
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError(fmt::format("alpha must be >= 0, got {}", alpha));
  if (!(bias_weight >= 0.0) || !std::isfinite(bias_weight)) {
    throw ConfigError(fmt::format("bias_weight must be >= 0, got {}", bias_weight));
  }
}

namespace {

Tensor rows_of(const Eigen::MatrixXd& m, std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(rows.size() * static_cast<std::size_t>(m.cols()));
  for (auto r : rows) {
    if (r >= static_cast<std::size_t>(m.rows())) throw ContractError(fmt::format("class {} has no attribute row", r));
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(static_cast<Eigen::Index>(r), j));
  }
  return Tensor({rows.size(), static_cast<std::size_t>(m.cols())}, std::move(out));
}

// phi [N x m] against class rows -> scores [N x K]
Var class_scores(Var phi, const Eigen::MatrixXd& attributes, std::span<const std::size_t> classes) {
  if (phi.shape().size() != 2 || phi.shape()[1] != static_cast<std::size_t>(attributes.cols())) {
    throw DimensionError(fmt::format("attribute scores need phi [N x {}], got {}", attributes.cols(), to_string(phi.shape())));
  }
  auto table = phi.tape->constant(rows_of(attributes, classes));
  return matmul(phi, transpose(table));
}

}  // namespace

Var loss_attribute_ce(Var phi, std::span<const std::size_t> labels, const Eigen::MatrixXd& attributes,
                      std::span<const std::size_t> seen) {
  if (labels.size() != phi.shape()[0]) {
    throw DimensionError(fmt::format("{} labels for {} rows of phi", labels.size(), phi.shape()[0]));
  }
  if (labels.empty()) throw ContractError("attribute loss needs a non-empty batch");
  std::vector<std::size_t> target(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = std::find(seen.begin(), seen.end(), labels[i]);
    if (it == seen.end()) throw ContractError(fmt::format("label {} is not a seen class", labels[i]));
    target[i] = static_cast<std::size_t>(it - seen.begin());
  }
  auto scores = class_scores(phi, attributes, seen);
  return mean(sub(logsumexp_rows(scores), pick(scores, target)));
}

TripletLoss loss_triplet(Var lat, const TripletBatch& triplets, double alpha) {
  if (triplets.empty()) return {lat.tape->constant(Tensor::scalar(0.0)), true};
  std::vector<std::size_t> a, p, n;
  for (const auto& t : triplets) {
    a.push_back(t.anchor);
    p.push_back(t.positive);
    n.push_back(t.negative);
  }
  auto anchors = gather_rows(lat, a);
  auto dp = sub(anchors, gather_rows(lat, p));
  auto dn = sub(anchors, gather_rows(lat, n));
  auto margin = add_scalar(sub(row_sum(mul(dp, dp)), row_sum(mul(dn, dn))), alpha);
  return {mean(relu(margin)), false};
}

Var loss_wordvec(std::span<const Var> predictions, std::span<const std::size_t> labels,
                 const Eigen::MatrixXd& targets, const Membership& membership) {
  if (predictions.size() != labels.size()) {
    throw DimensionError(fmt::format("{} predictions for {} labels", predictions.size(), labels.size()));
  }
  if (predictions.empty()) throw ContractError("word-vector loss needs a non-empty batch");
  const auto vertices = static_cast<std::size_t>(targets.rows());
  const auto d = static_cast<std::size_t>(targets.cols());
  if (static_cast<std::size_t>(membership.cols()) != vertices) {
    throw DimensionError(fmt::format("membership has {} vertices, targets {}", membership.cols(), vertices));
  }
  Tape& tape = *predictions.front().tape;
  auto target = tape.constant(Tensor::from_eigen(targets));

  std::vector<std::optional<Var>> masks(static_cast<std::size_t>(membership.rows()));
  auto mask_for = [&](std::size_t y) {
    if (y >= masks.size()) throw ContractError(fmt::format("class {} has no membership row", y));
    if (!masks[y]) {
      std::vector<double> m(vertices * d, 0.0);
      std::size_t members = 0;
      for (std::size_t v = 0; v < vertices; ++v)
        if (membership(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(v))) {
          ++members;
          std::fill_n(m.begin() + static_cast<std::ptrdiff_t>(v * d), d, 1.0);
        }
      if (members == 0) throw DegenerateError(fmt::format("class {} has no member attributes", y));
      masks[y] = tape.constant(Tensor({vertices, d}, std::move(m)));
    }
    return *masks[y];
  };

  std::optional<Var> total;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].shape() != Shape{vertices, d}) {
      throw DimensionError(fmt::format("word-vector prediction {} has shape {}, expected [{} x {}]", i,
                                       to_string(predictions[i].shape()), vertices, d));
    }
    auto r = mul(sub(predictions[i], target), mask_for(labels[i]));
    auto term = sum(mul(r, r));
    total = total ? add(*total, term) : term;
  }
  return scale(*total, 1.0 / static_cast<double>(predictions.size()));
}

Var loss_bias(Var phi_unlabeled, const Eigen::MatrixXd& attributes, std::span<const std::size_t> unseen) {
  if (unseen.empty()) throw ContractError("bias loss needs unseen classes");
  std::vector<std::size_t> all(static_cast<std::size_t>(attributes.rows()));
  for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
  auto scores = class_scores(phi_unlabeled, attributes, all);
  return mean(sub(logsumexp_rows(scores), logsumexp_rows(select_columns(scores, unseen))));
}

Var loss_total(const LossParts& parts, const LossWeights& weights, bool transductive) {
  Var total = parts.attribute;
  if (parts.triplet) total = add(total, *parts.triplet);
  if (parts.wordvec) total = add(total, scale(*parts.wordvec, weights.gamma));
  if (transductive) {
    if (!parts.bias) throw ContractError("transductive training needs an unlabeled batch for the bias loss");
    total = add(total, scale(*parts.bias, weights.bias_weight));
  }
  return total;
}

TripletBatch mine_triplets(std::span<const std::size_t> labels, std::mt19937_64& rng) {
  TripletBatch out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (j == i) continue;
      (labels[j] == labels[i] ? pos : neg).push_back(j);
    }
    if (pos.empty() || neg.empty()) continue;
    const auto p = pos[std::uniform_int_distribution<std::size_t>(0, pos.size() - 1)(rng)];
    const auto n = neg[std::uniform_int_distribution<std::size_t>(0, neg.size() - 1)(rng)];
    out.push_back({i, p, n});
  }
  return out;
}

}  // namespace gvse
