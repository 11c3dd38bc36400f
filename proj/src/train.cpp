#include "gvse/train.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gvse/error.hpp"
#include "gvse/log.hpp"
#include "gvse/ops.hpp"

namespace gvse {

nlohmann::json epoch_report_to_json(const EpochReport& r) {
  nlohmann::json j = {{"epoch", r.epoch}, {"L_A", r.l_a}, {"L_LT", r.l_lt}, {"L_W", r.l_w}};
  if (r.l_b) j["L_B"] = *r.l_b;
  j["total"] = r.total;
  j["grad_norm"] = r.grad_norm;
  j["wall_ms"] = r.wall_ms;
  return j;
}

Trainer::Trainer(GvseModel& model, const Dataset& dataset, SamplePartition partition, WordTargets targets,
                 const TrainConfig& config)
    : model_(model),
      dataset_(dataset),
      partition_(std::move(partition)),
      targets_(std::move(targets)),
      config_(config),
      params_(model.parameters()),
      optimizer_(make_optimizer(params_, config.adam)),
      rng_(config.seed) {
  config_.weights.validate();
  if (partition_.train.empty()) throw ContractError("training set is empty");
  if (config_.transductive && partition_.test_unseen.empty()) {
    throw ContractError("transductive training needs unlabeled unseen-class samples");
  }
  for (auto i : partition_.train) {
    if (std::find(dataset_.split.seen.begin(), dataset_.split.seen.end(), dataset_.labels[i]) == dataset_.split.seen.end()) {
      throw ContractError(fmt::format("training sample {} belongs to unseen class {}", i, dataset_.labels[i]));
    }
  }
}

namespace {

void check_non_negative(const char* name, double value, std::size_t epoch, std::size_t step) {
  if (!std::isfinite(value) || value < -1e-9) {
    throw NumericFault(fmt::format("{} = {} at epoch {} step {}", name, value, epoch, step));
  }
}

}  // namespace

EpochReport Trainer::run_epoch() {
  const auto start = std::chrono::steady_clock::now();
  const auto& mc = model_.config();
  EpochReport report;
  report.epoch = ++epoch_;

  auto order = partition_.train;
  std::shuffle(order.begin(), order.end(), rng_);
  const auto batch = config_.batch;
  double l_b_sum = 0.0;

  for (std::size_t begin = 0; begin < order.size(); begin += batch) {
    const auto end = std::min(order.size(), begin + batch);
    const std::span<const std::size_t> idx(order.data() + begin, end - begin);
    const auto step = report.steps + 1;

    Tape tape;
    auto bound = model_.bind(tape);
    std::vector<Var> phis, lats, words;
    std::vector<std::size_t> labels;
    try {
      for (auto i : idx) {
        const auto trace = model_.forward(bound, tape.constant(dataset_.image(i)));
        phis.push_back(reshape(trace.phi, {1, mc.num_attributes}));
        if (trace.phi_lat) lats.push_back(reshape(*trace.phi_lat, {1, mc.latent_dim}));
        if (trace.word_vectors) words.push_back(*trace.word_vectors);
        labels.push_back(dataset_.labels[i]);
      }
    } catch (const NumericFault& e) {
      throw NumericFault(fmt::format("epoch {} step {}: {}", epoch_, step, e.what()));
    }

    LossParts parts;
    parts.attribute = loss_attribute_ce(concat(phis, 0), labels, dataset_.cam.values, dataset_.split.seen);
    std::optional<double> l_lt, l_w, l_b;
    if (!lats.empty()) {
      auto triplets = mine_triplets(labels, rng_);
      auto lt = loss_triplet(concat(lats, 0), triplets, config_.weights.alpha);
      if (lt.empty) ++report.empty_triplet_steps;
      parts.triplet = lt.value;
    }
    if (!words.empty()) parts.wordvec = loss_wordvec(words, labels, targets_.vectors, targets_.membership);
    if (config_.transductive) {
      std::vector<Var> unl;
      std::uniform_int_distribution<std::size_t> pick_unseen(0, partition_.test_unseen.size() - 1);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto i = partition_.test_unseen[pick_unseen(rng_)];
        unl.push_back(reshape(model_.forward(bound, tape.constant(dataset_.image(i))).phi, {1, mc.num_attributes}));
      }
      parts.bias = loss_bias(concat(unl, 0), dataset_.cam.values, dataset_.split.unseen);
    }
    auto total = loss_total(parts, config_.weights, config_.transductive);

    const double a = parts.attribute.value().item();
    check_non_negative("L_A", a, epoch_, step);
    report.l_a += a;
    if (parts.triplet) {
      const double v = parts.triplet->value().item();
      check_non_negative("L_LT", v, epoch_, step);
      report.l_lt += v;
    }
    if (parts.wordvec) {
      const double v = parts.wordvec->value().item();
      check_non_negative("L_W", v, epoch_, step);
      report.l_w += v;
    }
    if (parts.bias) {
      const double v = parts.bias->value().item();
      check_non_negative("L_B", v, epoch_, step);
      l_b_sum += v;
    }
    report.total += total.value().item();

    tape.backward(total);
    report.grad_norm += grad_norm(params_);
    try {
      adam_step(params_, optimizer_);
    } catch (const NumericFault& e) {
      throw NumericFault(fmt::format("epoch {} step {}: {}", epoch_, step, e.what()));
    }
    ++report.steps;
  }

  const double n = static_cast<double>(std::max<std::size_t>(1, report.steps));
  report.l_a /= n;
  report.l_lt /= n;
  report.l_w /= n;
  report.total /= n;
  report.grad_norm /= n;
  if (config_.transductive) report.l_b = l_b_sum / n;
  if (report.empty_triplet_steps > 0) {
    log::warn("epoch {}: {} batches had no valid triplet", report.epoch, report.empty_triplet_steps);
  }
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

SampleEmbeddings embed_samples(GvseModel& model, const Dataset& dataset, std::span<const std::size_t> indices,
                               const ForwardOptions& options) {
  const auto& mc = model.config();
  SampleEmbeddings out{Eigen::MatrixXd(static_cast<Eigen::Index>(indices.size()), static_cast<Eigen::Index>(mc.num_attributes)),
                       Eigen::MatrixXd(static_cast<Eigen::Index>(indices.size()),
                                       static_cast<Eigen::Index>(mc.latent ? mc.latent_dim : 0))};
  for (std::size_t k = 0; k < indices.size(); ++k) {
    Tape tape;
    auto bound = model.bind(tape);
    const auto trace = model.forward(bound, tape.constant(dataset.image(indices[k])), options);
    const auto row = static_cast<Eigen::Index>(k);
    out.phi.row(row) = trace.phi.value().as_matrix().transpose();
    if (trace.phi_lat) out.latent.row(row) = trace.phi_lat->value().as_matrix().transpose();
  }
  return out;
}

}  // namespace gvse
