#pragma once

// Online structured perceptron over a pluggable problem definition: the
// weight vector, the feasible outputs, the joint feature map and the argmax
// solver. Vanilla and loss-sensitive passive-aggressive updates, optional
// weight averaging and margin-rescaled (cost-augmented) decoding.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ordinal/core.hpp"

namespace ordinal {

/// Which output wins when several reach the maximal score.
enum class TieRule { lowest, highest };

/// Training-time decoding bonus: argmax_k w.Phi(x,k) + scale * loss(truth, k).
struct CostAugment {
  LossFn loss = LossFn::absolute();
  double scale = 0.0;
};

class StructuredProblem {
public:
  virtual ~StructuredProblem() = default;

  virtual std::size_t weight_dim() const = 0;
  /// Candidate outputs, in ascending index order.
  virtual std::vector<int> feasible_outputs(std::span<const double> x) const = 0;
  virtual Vector feature_map(std::span<const double> x, int y) const = 0;
  virtual TieRule tie_rule() const { return TieRule::lowest; }

  // The defaults below go through the dense feature map. Instantiations
  // override them with structure-aware versions.
  virtual double score(std::span<const double> w, std::span<const double> x, int y) const;
  /// w += scale * (Phi(x,y) - Phi(x,yhat))
  virtual void add_feature_difference(std::span<double> w, std::span<const double> x, int y,
                                      int yhat, double scale) const;
  virtual double feature_difference_squared_norm(std::span<const double> x, int y,
                                                 int yhat) const;

  /// Argmax of the (optionally cost-augmented) score over the feasible set.
  int argmax(std::span<const double> w, std::span<const double> x,
             const CostAugment* augment = nullptr, int truth = 0) const;
};

int sp_predict(const StructuredProblem& problem, std::span<const double> w,
               std::span<const double> x);

/// w + Phi(x,y) - Phi(x,yhat)
Vector sp_update_vanilla(const StructuredProblem& problem, std::span<const double> w,
                         std::span<const double> x, int y, int yhat);

/// Loss-sensitive passive-aggressive step size
///   tau = (w.Phi(x,yhat) - w.Phi(x,y) + loss(y,yhat)) / |Phi(x,y) - Phi(x,yhat)|^2
double sp_step_pa(const StructuredProblem& problem, std::span<const double> w,
                  std::span<const double> x, int y, int yhat, const LossFn& loss);

struct UpdateRule {
  enum class Kind { vanilla, passive_aggressive };
  Kind kind = Kind::vanilla;
  LossFn loss = LossFn::absolute();  // used by the PA step only

  static UpdateRule vanilla() { return {}; }
  static UpdateRule passive_aggressive(LossFn loss) {
    return {Kind::passive_aggressive, loss};
  }
};

struct StepRecord {
  std::size_t visit = 0;    // 0-based position in the stream
  std::size_t example = 0;  // index into the dataset
  int truth = 0;
  int predicted = 0;
  double loss = 0.0;
  double step = 0.0;  // 0 when no update happened
  double cumulative_loss = 0.0;
  double cumulative_squared_loss = 0.0;
};

/// Per-visit record of an online run.
class TrainTrace {
public:
  explicit TrainTrace(LossFn loss = LossFn::absolute()) : loss_(loss) {}

  void record(std::size_t example, int truth, int predicted, double step);

  const std::vector<StepRecord>& steps() const { return steps_; }
  std::size_t size() const { return steps_.size(); }
  std::size_t mistakes() const { return mistakes_; }
  std::size_t epochs() const { return epochs_; }
  void set_epochs(std::size_t e) { epochs_ = e; }
  double cumulative_loss() const { return steps_.empty() ? 0.0 : steps_.back().cumulative_loss; }
  const LossFn& loss() const { return loss_; }

private:
  LossFn loss_;
  std::vector<StepRecord> steps_;
  std::size_t mistakes_ = 0;
  std::size_t epochs_ = 0;
};

struct TrainOptions {
  UpdateRule rule = UpdateRule::vanilla();
  std::size_t epochs = 1;
  /// Stop after the first epoch without a mistake.
  bool stop_when_clean = false;
  bool averaging = false;
  std::optional<CostAugment> cost_augment;
  /// Multiplies w before every update; 1.0 disables it.
  double shrinkage = 1.0;
  /// Shuffle the visiting order each epoch with this seed.
  std::optional<std::uint64_t> shuffle_seed;
  /// Loss recorded in the trace.
  LossFn trace_loss = LossFn::absolute();
  /// Called after every visit with the current weights.
  std::function<void(const StepRecord&, std::span<const double>)> observer;
};

struct TrainResult {
  Vector weights;
  Vector averaged;  // empty unless averaging was requested
  TrainTrace trace;
};

TrainResult sp_train_online(const StructuredProblem& problem, const RankedDataset& data,
                            const TrainOptions& options);

/// Visiting order for one epoch; identity unless a shuffle seed is given.
std::vector<std::size_t> epoch_order(std::size_t n, std::size_t epoch,
                                     const std::optional<std::uint64_t>& shuffle_seed);

}  // namespace ordinal
