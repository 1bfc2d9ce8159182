#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "curvrec/field_network.hpp"
#include "curvrec/losses.hpp"
#include "curvrec/sampling.hpp"

namespace curvrec {

struct TrainConfig {
  int iterations = 10000;
  double learning_rate = 5e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  LossWeights weights;
  SamplingConfig sampling;
  int knn_k = 50;
  AnnealingMode annealing_mode = AnnealingMode::staged;
  std::uint64_t seed = 0;
  bool deterministic = false;
  int checkpoint_every = 1000;
  int threads = 0;
  std::vector<int> layer_sizes = {3, 256, 256, 256, 256, 1};
  double omega0 = 30.0;
  double input_scale = 2.0;

  void validate() const;
};

struct AdamState {
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
  std::vector<double> m, v;
  std::uint64_t step = 0;
};

/// Standard Adam update with bias correction; rejects non-finite gradients.
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
               double lr, double beta1, double beta2, double eps);

struct TrainingError : std::runtime_error {
  TrainingError(int it, const std::string& msg)
      : std::runtime_error("training failed at iteration " + std::to_string(it) + ": " + msg),
        iteration(it) {}
  int iteration;
};

/// Loss and full parameter gradient of the annealed objective on one batch.
/// Jets are evaluated in the network's native frame; the near-surface set
/// only enters for the curvature regularizers, and second-order jets are
/// computed only where the active regularizer needs them.
std::pair<LossBreakdown, std::vector<double>> total_loss_with_gradient(
    const FieldNetwork& net, const SampleBatch& batch, const LossWeights& w, double tau,
    int threads = 0);

/// Same objective value without the gradient (used by finite-difference
/// checks and held-out evaluations).
LossBreakdown total_loss_eval(const FieldNetwork& net, const SampleBatch& batch,
                              const LossWeights& w, double tau, int threads = 0);

struct LogRow {
  int iteration = 0;
  LossBreakdown loss;
};

struct FitOptions {
  std::filesystem::path checkpoint_path;  // rolling checkpoint; empty disables
  std::filesystem::path log_path;         // CSV loss log; empty disables
  const SimilarityTransform* transform = nullptr;
  std::optional<Checkpoint> resume;
  int progress_every = 100;  // stderr cadence; 0 silences progress output
};

struct FitResult {
  FieldNetwork net;
  std::vector<LogRow> log;
};

/// Runs the sample/evaluate/update loop over the normalized cloud.
FitResult fit(const PointCloud& cloud, const TrainConfig& cfg, const FitOptions& opts = {});

}  // namespace curvrec
