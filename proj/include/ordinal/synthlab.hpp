#pragma once

// Executable separability definitions, planted-margin generators and the
// mistake-bound harness.
//
// Rank separability: sign(y-k) w_k.x >= delta for 2 <= k <= r with the
// level task "y >= k", so sign(y-k) is +1 when y >= k and -1 otherwise.
// PRank separability: b_y + delta <= u.z <= b_{y+1} - delta.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "ordinal/engine.hpp"

namespace ordinal {

enum class PlantedFamily { rank_separable, prank_separable };

struct PlantedProblem {
  RankedDataset dataset;
  /// Unit-norm planted separator, w_1 = 0.
  WeightStack planted_weights;
  double margin = 0.0;            // requested delta
  double empirical_margin = 0.0;  // smallest observed margin (>= margin)
  /// Exact max |x| (rank family) or max |z| (prank family).
  double radius = 0.0;
  PlantedFamily family = PlantedFamily::rank_separable;
  // Prank family only: unit-norm (u, b_2..b_r); thresholds[0] = -inf.
  Vector prank_direction;
  Vector prank_thresholds;
};

/// Requested `radius` bounds the non-bias part |z|; the reported radius is
/// the exact maximum over the generated set.
PlantedProblem generate_rank_separable(std::uint64_t seed, std::size_t n, std::size_t d, int r,
                                       double delta, double radius);
PlantedProblem generate_prank_separable(std::uint64_t seed, std::size_t n, std::size_t d, int r,
                                        double delta, double radius);

struct SeparabilityReport {
  bool separable = false;
  std::size_t example = 0;  // witness of the smallest slack
  int level = 0;
  double slack = 0.0;       // sign(y-k) w_k.x - delta at the witness
};

/// Requires |weights| = 1 within 1e-9.
SeparabilityReport check_rank_separable(const RankedDataset& data, const WeightStack& weights,
                                        double delta);

/// Smallest signed level margin sign(y-k) w_k.x over the dataset.
double rank_margin(const RankedDataset& data, const WeightStack& weights);

struct LossAugmentedReport {
  bool separable = false;  // condition (b) for every pair
  double radius = 0.0;     // smallest R_aug satisfying (a)
  std::size_t example = 0; // witness of the worst (b) slack
  int output = 0;
  double slack = 0.0;      // min over pairs of wbar.dPhi - loss
};

/// Checks (a) |Phi(x,y) - Phi(x,y')|^2 <= loss(y,y') R^2 and
/// (b) wbar.(Phi(x,y) - Phi(x,y')) >= loss(y,y') over every example and
/// wrong output. Requires |wbar| = 1 within 1e-9.
LossAugmentedReport check_loss_augmented(const RankedDataset& data,
                                         const StructuredProblem& problem,
                                         std::span<const double> wbar, const LossFn& loss);

/// Coarse grid searches for two-feature data (d = 3). They return the best
/// normalized margin found; a value <= 0 means no separator on the grid.
/// Rank: per-level best margins, the minimum over levels.
double grid_search_rank_margin(const RankedDataset& data, int angle_steps, int bias_steps,
                               double bias_range);
/// PRank: shared direction with sorted thresholds.
double grid_search_prank_margin(const RankedDataset& data, int angle_steps, int bias_steps,
                                double bias_range);

enum class BoundLearner { cusum_vanilla, cusum_pa, prank, engine_generic };

std::string to_string(BoundLearner learner);
BoundLearner bound_learner_from_string(const std::string& name);

struct BoundLedger {
  double radius = 0.0;
  double delta = 0.0;
  int rank_count = 0;
  double cumulative_loss = 0.0;          // sum |y - yhat|
  double cumulative_squared_loss = 0.0;  // sum l^2 for the learner's bound loss
  std::size_t mistakes = 0;
  double bound_T1 = 0.0;  // R_aug^2 for the learner's bound loss
  double bound_C1 = 0.0;  // R^2 / delta^2
  double bound_C3 = 0.0;  // R^2 / delta^2
  double bound_C4 = 0.0;  // R^2 / delta^4

  static BoundLedger make(BoundLearner learner, double radius, double delta, int rank_count);
};

struct BoundCheck {
  std::string name;   // "T1", "T2", "C1", "C3", "C4", "C1-prank"
  double value = 0.0; // final cumulative quantity
  double bound = 0.0;
  bool holds = true;
  std::optional<std::size_t> violation_step;  // first violating 0-based step
};

struct BoundReport {
  BoundLearner learner = BoundLearner::cusum_vanilla;
  bool separable = false;
  bool converged = false;  // finished an epoch without mistakes
  std::size_t epochs_run = 0;
  BoundLedger ledger;
  std::vector<BoundCheck> checks;
  TrainTrace trace;

  bool passed() const;
};

struct VerifyOptions {
  std::size_t max_epochs = 1000;
  /// Negate the update at this 0-based mistake index (fault injection).
  std::optional<std::size_t> flip_update;
};

/// Runs the learner online (until a clean epoch or max_epochs) and checks
/// every applicable bound at every prefix. Learners and bounds:
///   cusum-vanilla / engine-generic: T1 (l = delta|y-y'|), C1, C3
///   cusum-pa: T2 (l = delta 1[y!=y']), C4 (requires delta <= 1)
///   prank: T1 and C1-prank with bound (r-1)(R^2+1)/delta^2
/// A problem failing its separability check is reported, not asserted.
BoundReport verify_bounds(const PlantedProblem& problem, BoundLearner learner,
                          const VerifyOptions& options = {});

/// Per-step ledger as CSV: step, cumulative loss, mistakes and each bound.
void write_ledger_csv(std::ostream& out, const BoundReport& report);

}  // namespace ordinal
