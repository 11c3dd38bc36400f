#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gvse/config.hpp"
#include "gvse/data.hpp"
#include "gvse/loss.hpp"
#include "gvse/model.hpp"
#include "gvse/optim.hpp"

namespace gvse {

/// Regression targets for the word-vector loss: one row per graph vertex and,
/// per class, which vertices it regresses.
struct WordTargets {
  Eigen::MatrixXd vectors;
  Membership membership;
};

struct EpochReport {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double l_a = 0.0, l_lt = 0.0, l_w = 0.0;
  std::optional<double> l_b;
  double total = 0.0;
  double grad_norm = 0.0;  // mean over steps
  std::size_t empty_triplet_steps = 0;
  double wall_ms = 0.0;
};

nlohmann::json epoch_report_to_json(const EpochReport& report);

class Trainer {
 public:
  Trainer(GvseModel& model, const Dataset& dataset, SamplePartition partition, WordTargets targets,
          const TrainConfig& config);

  /// Shuffled mini-batches: forward, losses, backward, Adam.
  EpochReport run_epoch();

  const OptimizerState& optimizer() const { return optimizer_; }
  std::size_t epochs_done() const { return epoch_; }

 private:
  GvseModel& model_;
  const Dataset& dataset_;
  SamplePartition partition_;
  WordTargets targets_;
  TrainConfig config_;
  std::vector<Param*> params_;
  OptimizerState optimizer_;
  std::mt19937_64 rng_;
  std::size_t epoch_ = 0;
};

/// phi and (if enabled) latent outputs for the listed samples, one row each.
struct SampleEmbeddings {
  Eigen::MatrixXd phi;
  Eigen::MatrixXd latent;  // 0 columns when the latent head is off
};

SampleEmbeddings embed_samples(GvseModel& model, const Dataset& dataset, std::span<const std::size_t> indices,
                               const ForwardOptions& options = {});

}  // namespace gvse
