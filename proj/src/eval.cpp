#include "gvse/eval.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "gvse/error.hpp"
#include "gvse/log.hpp"

namespace gvse {

Eigen::MatrixXd seen_prototypes(const Eigen::MatrixXd& features, std::span<const std::size_t> labels,
                                std::span<const std::size_t> classes) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw DimensionError(fmt::format("{} feature rows for {} labels", features.rows(), labels.size()));
  }
  Eigen::MatrixXd protos = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes.size()), features.cols());
  for (std::size_t k = 0; k < classes.size(); ++k) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == classes[k]) {
        protos.row(static_cast<Eigen::Index>(k)) += features.row(static_cast<Eigen::Index>(i));
        ++count;
      }
    if (count == 0) throw DegenerateError(fmt::format("class {} has no samples for its prototype", classes[k]));
    protos.row(static_cast<Eigen::Index>(k)) /= static_cast<double>(count);
  }
  return protos;
}

PrototypeSet build_prototypes(const Eigen::MatrixXd& train_features, std::span<const std::size_t> train_labels,
                              const Eigen::MatrixXd& attributes, const SplitSpec& split) {
  validate_split(split, static_cast<std::size_t>(attributes.rows()));
  const auto seen = seen_prototypes(train_features, train_labels, split.seen);
  Eigen::MatrixXd phi_seen(static_cast<Eigen::Index>(split.seen.size()), attributes.cols());
  for (std::size_t k = 0; k < split.seen.size(); ++k)
    phi_seen.row(static_cast<Eigen::Index>(k)) = attributes.row(static_cast<Eigen::Index>(split.seen[k]));

  PrototypeSet out{Eigen::MatrixXd::Zero(attributes.rows(), train_features.cols()), attributes,
                   std::vector<bool>(static_cast<std::size_t>(attributes.rows()), false)};
  for (std::size_t k = 0; k < split.seen.size(); ++k) {
    out.latent.row(static_cast<Eigen::Index>(split.seen[k])) = seen.row(static_cast<Eigen::Index>(k));
    out.has_latent[split.seen[k]] = true;
  }
  for (auto u : split.unseen) {
    const Eigen::VectorXd phi_u = attributes.row(static_cast<Eigen::Index>(u)).transpose();
    out.latent.row(static_cast<Eigen::Index>(u)) = unseen_prototype_ridge(phi_seen, phi_u, seen).transpose();
    out.has_latent[u] = true;
  }
  return out;
}

namespace {

template <typename Score>
std::size_t argmax_class(std::span<const std::size_t> space, Score score) {
  if (space.empty()) throw ContractError("prediction needs a non-empty search space");
  std::size_t best = space.front();
  double best_score = score(best);
  for (auto y : space.subspan(1)) {
    const double s = score(y);
    if (s > best_score || (s == best_score && y < best)) {
      best = y;
      best_score = s;
    }
  }
  return best;
}

}  // namespace

std::size_t predict_czsl(const Eigen::VectorXd& phi_x, const Eigen::MatrixXd& attributes,
                         std::span<const std::size_t> space) {
  return argmax_class(space, [&](std::size_t y) {
    if (y >= static_cast<std::size_t>(attributes.rows())) throw ContractError(fmt::format("class {} has no attribute row", y));
    return attributes.row(static_cast<Eigen::Index>(y)).dot(phi_x);
  });
}

LatentScore parse_latent_score(std::string_view name) {
  if (name == "dot") return LatentScore::Dot;
  if (name == "distance") return LatentScore::Distance;
  throw ConfigError(fmt::format("unknown latent score '{}' (dot or distance)", name));
}

std::string_view to_string(LatentScore s) { return s == LatentScore::Dot ? "dot" : "distance"; }

std::size_t predict_with_latent(const Eigen::VectorXd& phi_x, const Eigen::VectorXd& lat_x,
                                const PrototypeSet& protos, std::span<const std::size_t> space, LatentScore score) {
  return argmax_class(space, [&](std::size_t y) {
    if (y >= protos.has_latent.size() || !protos.has_latent[y]) {
      throw ContractError(fmt::format("class {} has no latent prototype", y));
    }
    const auto row = static_cast<Eigen::Index>(y);
    double latent = protos.latent.row(row).dot(lat_x);
    if (score == LatentScore::Distance) latent -= 0.5 * protos.latent.row(row).squaredNorm();
    return protos.attributes.row(row).dot(phi_x) + latent;
  });
}

ClassAccuracy per_class_top1(std::span<const std::size_t> preds, std::span<const std::size_t> labels,
                             std::span<const std::size_t> classes) {
  if (preds.size() != labels.size()) {
    throw DimensionError(fmt::format("{} predictions for {} labels", preds.size(), labels.size()));
  }
  ClassAccuracy out;
  double total = 0.0;
  for (auto c : classes) {
    std::size_t n = 0, correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) {
        ++n;
        correct += preds[i] == c;
      }
    if (n == 0) {
      log::warn("class {} has no test samples; excluded from the per-class mean", c);
      out.excluded.push_back(c);
      continue;
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(n);
    out.per_class[c] = acc;
    total += acc;
  }
  if (!out.per_class.empty()) out.mean = total / static_cast<double>(out.per_class.size());
  return out;
}

double harmonic_mean(double acc_s, double acc_u) {
  const double s = acc_s + acc_u;
  return s == 0.0 ? 0.0 : 2.0 * acc_s * acc_u / s;
}

Metrics czsl_metrics(std::span<const std::size_t> preds, std::span<const std::size_t> labels, const SplitSpec& split) {
  Metrics m;
  m.setting = "czsl";
  m.unseen = per_class_top1(preds, labels, split.unseen);
  if (m.unseen.per_class.empty()) throw ContractError("czsl evaluation has no unseen test samples");
  m.acc = m.acc_u = m.unseen.mean;
  return m;
}

Metrics gzsl_metrics(std::span<const std::size_t> preds, std::span<const std::size_t> labels, const SplitSpec& split) {
  Metrics m;
  m.setting = "gzsl";
  m.seen = per_class_top1(preds, labels, split.seen);
  m.unseen = per_class_top1(preds, labels, split.unseen);
  if (m.seen.per_class.empty()) throw ContractError("gzsl evaluation has no seen test samples");
  if (m.unseen.per_class.empty()) throw ContractError("gzsl evaluation has no unseen test samples");
  m.acc_s = m.seen.mean;
  m.acc_u = m.unseen.mean;
  m.h = harmonic_mean(m.acc_s, m.acc_u);
  m.acc = m.h;
  return m;
}

nlohmann::json metrics_to_json(const Metrics& metrics, const std::string& split_name, const std::string& digest) {
  nlohmann::json per_class = nlohmann::json::object();
  std::vector<std::size_t> excluded;
  for (const auto* acc : {&metrics.seen, &metrics.unseen}) {
    for (const auto& [c, a] : acc->per_class) per_class[std::to_string(c)] = a;
    excluded.insert(excluded.end(), acc->excluded.begin(), acc->excluded.end());
  }
  nlohmann::json j = {{"setting", metrics.setting},
                      {"split", split_name},
                      {"acc", metrics.acc},
                      {"per_class", per_class},
                      {"excluded_classes", excluded},
                      {"config_digest", digest}};
  if (metrics.setting == "gzsl") {
    j["acc_s"] = metrics.acc_s;
    j["acc_u"] = metrics.acc_u;
    j["h"] = metrics.h;
  }
  return j;
}

}  // namespace gvse
