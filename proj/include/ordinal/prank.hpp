#pragma once

// PRank (ranking by projecting): one direction u shared by all levels and
// ordered thresholds b_1 = -inf <= b_2 <= ... <= b_r. Provided both as the
// direct algorithm and as a structured-perceptron instantiation with
// Phi(x,y) = (y z, -1_y, 0_{r-y}) where x = (z, -1).

#include "ordinal/engine.hpp"

namespace ordinal {

struct PRankModel {
  Vector direction;   // u, length d-1
  Vector thresholds;  // b, length r; b[0] is the -inf sentinel

  PRankModel() = default;
  /// u = 0, b = (-inf, 0, ..., 0)
  PRankModel(int rank_count, std::size_t feature_dim);

  int rank_count() const { return static_cast<int>(thresholds.size()); }
  bool thresholds_sorted() const;
};

/// max{ y : u.z >= b_y } by binary search over the ordered thresholds.
int prank_predict(const PRankModel& model, std::span<const double> z);
/// Linear-scan version of prank_predict, kept for differential testing.
int prank_predict_scan(const PRankModel& model, std::span<const double> z);

struct PRankFitOptions {
  std::size_t epochs = 1;
  bool stop_when_clean = false;
};

struct PRankFit {
  PRankModel model;
  TrainTrace trace;
  /// Number of updates after which the threshold order was re-checked.
  std::size_t order_checks = 0;
};

/// Online PRank. On a mistake u += (y - yhat) z and b_k -= sign(y - yhat)
/// for k = min(y,yhat)+1 .. max(y,yhat). The threshold order is asserted
/// after every update; a violation throws std::logic_error.
PRankFit prank_fit_online(const RankedDataset& data, const PRankFitOptions& options = {});

/// b_y + delta <= u.z <= b_{y+1} - delta for every example (upper side
/// skipped for y = r). Throws on unsorted thresholds.
bool prank_margin_check(const RankedDataset& data, std::span<const double> direction,
                        std::span<const double> thresholds, double delta);

/// Structured-perceptron instantiation. Weight layout (u, b_1..b_r) of
/// length d-1+r. The b_1 slot is stored as 0: Phi has -1 in that slot for
/// every y, so the sentinel only shifts all scores equally. Ties go to the
/// highest rank, which makes the argmax equal max{ y : u.z >= b_y }.
class PRankProblem : public StructuredProblem {
public:
  PRankProblem(int rank_count, std::size_t dim) : rank_count_(rank_count), dim_(dim) {}

  std::size_t weight_dim() const override { return dim_ - 1 + static_cast<std::size_t>(rank_count_); }
  std::vector<int> feasible_outputs(std::span<const double> x) const override;
  Vector feature_map(std::span<const double> x, int y) const override;
  TieRule tie_rule() const override { return TieRule::highest; }

  Vector to_weights(const PRankModel& model) const;
  PRankModel to_model(std::span<const double> w) const;

private:
  int rank_count_;
  std::size_t dim_;
};

}  // namespace ordinal
