#include "ordinal/engine.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace ordinal {

double StructuredProblem::score(std::span<const double> w, std::span<const double> x,
                                int y) const {
  return dot(w, feature_map(x, y));
}

void StructuredProblem::add_feature_difference(std::span<double> w, std::span<const double> x,
                                               int y, int yhat, double scale) const {
  axpy(scale, feature_map(x, y), w);
  axpy(-scale, feature_map(x, yhat), w);
}

double StructuredProblem::feature_difference_squared_norm(std::span<const double> x, int y,
                                                          int yhat) const {
  Vector diff = feature_map(x, y);
  axpy(-1.0, feature_map(x, yhat), diff);
  return squared_norm(diff);
}

int StructuredProblem::argmax(std::span<const double> w, std::span<const double> x,
                              const CostAugment* augment, int truth) const {
  if (w.size() != weight_dim()) throw Error("argmax: weight dimension mismatch");
  const auto outputs = feasible_outputs(x);
  if (outputs.empty()) throw Error("argmax: empty feasible set");
  const bool prefer_high = tie_rule() == TieRule::highest;
  int best = outputs.front();
  double best_score = 0.0;
  bool first = true;
  for (int y : outputs) {
    double s = score(w, x, y);
    if (augment && augment->scale != 0.0) s += augment->scale * augment->loss(truth, y);
    if (first || s > best_score || (prefer_high && s == best_score)) {
      best = y;
      best_score = s;
      first = false;
    }
  }
  return best;
}

int sp_predict(const StructuredProblem& problem, std::span<const double> w,
               std::span<const double> x) {
  return problem.argmax(w, x);
}

Vector sp_update_vanilla(const StructuredProblem& problem, std::span<const double> w,
                         std::span<const double> x, int y, int yhat) {
  Vector out(w.begin(), w.end());
  problem.add_feature_difference(out, x, y, yhat, 1.0);
  return out;
}

double sp_step_pa(const StructuredProblem& problem, std::span<const double> w,
                  std::span<const double> x, int y, int yhat, const LossFn& loss) {
  const double norm2 = problem.feature_difference_squared_norm(x, y, yhat);
  if (norm2 == 0.0) throw Error("sp_step_pa: zero feature-difference norm");
  const double margin = problem.score(w, x, yhat) - problem.score(w, x, y) + loss(y, yhat);
  return margin / norm2;
}

void TrainTrace::record(std::size_t example, int truth, int predicted, double step) {
  StepRecord rec;
  rec.visit = steps_.size();
  rec.example = example;
  rec.truth = truth;
  rec.predicted = predicted;
  rec.loss = loss_(truth, predicted);
  rec.step = step;
  const double prev = steps_.empty() ? 0.0 : steps_.back().cumulative_loss;
  const double prev_sq = steps_.empty() ? 0.0 : steps_.back().cumulative_squared_loss;
  rec.cumulative_loss = prev + rec.loss;
  rec.cumulative_squared_loss = prev_sq + rec.loss * rec.loss;
  if (truth != predicted) ++mistakes_;
  steps_.push_back(rec);
}

std::vector<std::size_t> epoch_order(std::size_t n, std::size_t epoch,
                                     const std::optional<std::uint64_t>& shuffle_seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed + 0x9E3779B97F4A7C15ULL * (epoch + 1));
    std::shuffle(order.begin(), order.end(), rng);
  }
  return order;
}

TrainResult sp_train_online(const StructuredProblem& problem, const RankedDataset& data,
                            const TrainOptions& options) {
  if (options.epochs < 1) throw Error("sp_train_online: epochs must be >= 1");
  const std::size_t dim = problem.weight_dim();
  TrainResult result{Vector(dim, 0.0), {}, TrainTrace(options.trace_loss)};
  Vector& w = result.weights;

  // Lazy averaging: avg = ((T+1) w_T - sum_t t * delta_t) / T, where delta_t
  // is the update applied at visit t. Shrinkage rescales the whole vector,
  // which the lazy form cannot express, so that case sums snapshots.
  const bool lazy = options.averaging && options.shrinkage == 1.0;
  Vector weighted_updates(lazy ? dim : 0, 0.0);
  Vector snapshot_sum(options.averaging && !lazy ? dim : 0, 0.0);
  std::size_t visits = 0;

  const CostAugment* augment = options.cost_augment ? &*options.cost_augment : nullptr;
  std::size_t epoch = 0;
  for (; epoch < options.epochs; ++epoch) {
    std::size_t epoch_mistakes = 0;
    for (std::size_t i : epoch_order(data.size(), epoch, options.shuffle_seed)) {
      const auto& ex = data[i];
      const int yhat = problem.argmax(w, ex.x(), augment, ex.rank);
      ++visits;
      double step = 0.0;
      if (yhat != ex.rank) {
        ++epoch_mistakes;
        step = options.rule.kind == UpdateRule::Kind::vanilla
                   ? 1.0
                   : sp_step_pa(problem, w, ex.x(), ex.rank, yhat, options.rule.loss);
        if (options.shrinkage != 1.0)
          for (double& v : w) v *= options.shrinkage;
        problem.add_feature_difference(w, ex.x(), ex.rank, yhat, step);
        if (lazy)
          problem.add_feature_difference(weighted_updates, ex.x(), ex.rank, yhat,
                                         step * static_cast<double>(visits));
      }
      if (!snapshot_sum.empty()) axpy(1.0, w, snapshot_sum);
      result.trace.record(i, ex.rank, yhat, step);
      if (options.observer) options.observer(result.trace.steps().back(), w);
    }
    if (options.stop_when_clean && epoch_mistakes == 0) {
      ++epoch;
      break;
    }
  }
  result.trace.set_epochs(epoch);

  if (options.averaging && visits > 0) {
    const double t = static_cast<double>(visits);
    result.averaged.assign(dim, 0.0);
    if (lazy) {
      for (std::size_t j = 0; j < dim; ++j)
        result.averaged[j] = ((t + 1.0) * w[j] - weighted_updates[j]) / t;
    } else {
      for (std::size_t j = 0; j < dim; ++j) result.averaged[j] = snapshot_sum[j] / t;
    }
  }
  return result;
}

}  // namespace ordinal
