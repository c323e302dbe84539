#pragma once

// CuSum Rank: an ensemble of r per-level perceptrons combined through the
// cumulative score s(x,k) = sum_{j<=k} w_j.x, predicting the maximizing k.

#include <optional>

#include "ordinal/engine.hpp"

namespace ordinal {

struct CuSumModel {
  WeightStack weights;

  CuSumModel() = default;
  CuSumModel(int rank_count, std::size_t dim) : weights(rank_count, dim) {}
  explicit CuSumModel(WeightStack w) : weights(std::move(w)) {}

  int rank_count() const { return weights.levels(); }
  std::size_t dim() const { return weights.dim(); }
};

/// sum_{j=1..k} w_j . x
double cusum_score(const CuSumModel& model, std::span<const double> x, int k);

/// All r cumulative scores, index k-1 holding s(x,k).
Vector cusum_scores(const CuSumModel& model, std::span<const double> x);

/// Argmax over k of the cumulative score; ties go to the lowest rank.
int cusum_predict(const CuSumModel& model, std::span<const double> x);

/// Signed-sum score sum_j sign(k-j) w_j.x with sign(0) = +1, which equals
/// 2 s(x,k) - sum_j w_j.x and so shares the cumulative-score argmax.
double cusum_signed_score(const CuSumModel& model, std::span<const double> x, int k);

struct CuSumFitOptions {
  std::size_t epochs = 1;
  bool stop_when_clean = false;
  /// Fault injection for the bound harness: negate the update applied at
  /// this 0-based mistake index.
  std::optional<std::size_t> flip_update;
};

struct CuSumFit {
  CuSumModel model;
  TrainTrace trace;
};

/// The CuSum Rank online learner: on a mistake,
/// w_k += sign(y - yhat) x for k = min(y,yhat)+1 .. max(y,yhat).
CuSumFit cusum_fit_online(const RankedDataset& data, const CuSumFitOptions& options = {});

/// Passive-aggressive CuSum Rank with a known margin delta:
///   wbar = sum_{j in range} w_j
///   rho  = (sign(y-yhat) delta - wbar.x) / (|yhat-y| |x|^2)
///   w_j += rho x on the same range.
/// The trace records rho * sign(y - yhat), the step along Phi(x,y)-Phi(x,yhat).
CuSumFit cusum_fit_pa(const RankedDataset& data, double delta,
                      const CuSumFitOptions& options = {});

/// The CuSum instantiation of the structured perceptron. The weight vector
/// is the flattened WeightStack; Phi(x,y) = (x, ..., x, 0_{(r-y) d}).
class CuSumProblem : public StructuredProblem {
public:
  CuSumProblem(int rank_count, std::size_t dim) : rank_count_(rank_count), dim_(dim) {}

  std::size_t weight_dim() const override { return static_cast<std::size_t>(rank_count_) * dim_; }
  std::vector<int> feasible_outputs(std::span<const double> x) const override;
  Vector feature_map(std::span<const double> x, int y) const override;
  double score(std::span<const double> w, std::span<const double> x, int y) const override;
  void add_feature_difference(std::span<double> w, std::span<const double> x, int y, int yhat,
                              double scale) const override;
  double feature_difference_squared_norm(std::span<const double> x, int y,
                                         int yhat) const override;

  int rank_count() const { return rank_count_; }
  std::size_t dim() const { return dim_; }

  CuSumModel to_model(std::span<const double> w) const;

private:
  int rank_count_;
  std::size_t dim_;
};

}  // namespace ordinal
