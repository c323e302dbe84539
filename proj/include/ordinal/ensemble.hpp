#pragma once

// Counting baseline: r independent binary perceptrons, w_1 = 0 as a
// sentinel, prediction yhat = sum_k 1[w_k.x >= 0].

#include "ordinal/core.hpp"
#include "ordinal/prank.hpp"

namespace ordinal {

struct CountingModel {
  WeightStack weights;

  CountingModel() = default;
  CountingModel(int rank_count, std::size_t dim) : weights(rank_count, dim) {}

  int rank_count() const { return weights.levels(); }
};

int counting_predict(const CountingModel& model, std::span<const double> x);

struct CountingFitOptions {
  std::size_t epochs = 1;
  /// Stop a level once it completes an epoch without mistakes.
  bool stop_when_clean = true;
};

struct CountingFit {
  CountingModel model;
  /// Per level (index k-1), total perceptron mistakes; level 1 stays 0.
  std::vector<std::size_t> level_mistakes;
  /// Per level, whether the last epoch run for it was mistake-free.
  std::vector<bool> level_converged;
};

/// Trains each level k >= 2 as a standalone perceptron on the task
/// "y >= k" (+1 / -1 targets). Levels are trained one after the other
/// (level-major); each level's trace depends only on its own task.
CountingFit counting_fit_online(const RankedDataset& data,
                                const CountingFitOptions& options = {});

/// Number of adjacent level pairs (k, k+1) where 1[w_k.x >= 0] <
/// 1[w_{k+1}.x >= 0], i.e. the indicator sequence is not non-increasing.
std::size_t monotone_violations(const CountingModel& model, std::span<const double> x);

/// Counting model with w_k = (u, b_k) taken from a PRank model (w_1 = 0).
CountingModel counting_from_prank(const PRankModel& model);

}  // namespace ordinal
