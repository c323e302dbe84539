#include "ordinal/ensemble.hpp"

#include <algorithm>

namespace ordinal {

int counting_predict(const CountingModel& model, std::span<const double> x) {
  if (x.size() != model.weights.dim()) throw Error("counting_predict: dimension mismatch");
  int count = 0;
  for (int k = 1; k <= model.rank_count(); ++k)
    if (dot(model.weights.level(k), x) >= 0.0) ++count;
  return count;
}

CountingFit counting_fit_online(const RankedDataset& data, const CountingFitOptions& options) {
  const int r = data.rank_count();
  CountingFit fit{CountingModel(r, data.dim()), std::vector<std::size_t>(static_cast<std::size_t>(r), 0),
                  std::vector<bool>(static_cast<std::size_t>(r), false)};
  fit.level_converged[0] = true;
  for (int k = 2; k <= r; ++k) {
    auto w = fit.model.weights.level(k);
    const auto slot = static_cast<std::size_t>(k - 1);
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
      std::size_t mistakes = 0;
      for (const auto& ex : data) {
        const double target = ex.rank >= k ? 1.0 : -1.0;
        const double predicted = dot(w, ex.x()) >= 0.0 ? 1.0 : -1.0;
        if (predicted != target) {
          ++mistakes;
          axpy(target, ex.x(), w);
        }
      }
      fit.level_mistakes[slot] += mistakes;
      fit.level_converged[slot] = mistakes == 0;
      if (options.stop_when_clean && mistakes == 0) break;
    }
  }
  return fit;
}

std::size_t monotone_violations(const CountingModel& model, std::span<const double> x) {
  std::size_t violations = 0;
  bool previous = dot(model.weights.level(1), x) >= 0.0;
  for (int k = 2; k <= model.rank_count(); ++k) {
    const bool current = dot(model.weights.level(k), x) >= 0.0;
    if (current && !previous) ++violations;
    previous = current;
  }
  return violations;
}

CountingModel counting_from_prank(const PRankModel& model) {
  const std::size_t d = model.direction.size() + 1;
  CountingModel out(model.rank_count(), d);
  for (int k = 2; k <= model.rank_count(); ++k) {
    auto w = out.weights.level(k);
    std::copy(model.direction.begin(), model.direction.end(), w.begin());
    w[d - 1] = model.thresholds[static_cast<std::size_t>(k - 1)];
  }
  return out;
}

}  // namespace ordinal
