#include "ordinal/prank.hpp"

#include <algorithm>
#include <limits>

namespace ordinal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double projection(const PRankModel& model, std::span<const double> z) {
  if (z.size() != model.direction.size()) throw Error("prank: dimension mismatch");
  return dot(model.direction, z);
}

}  // namespace

PRankModel::PRankModel(int rank_count, std::size_t feature_dim)
    : direction(feature_dim, 0.0), thresholds(static_cast<std::size_t>(rank_count), 0.0) {
  if (rank_count < 2) throw Error("prank: need at least 2 ranks");
  thresholds[0] = kNegInf;
}

bool PRankModel::thresholds_sorted() const {
  return std::is_sorted(thresholds.begin(), thresholds.end());
}

int prank_predict(const PRankModel& model, std::span<const double> z) {
  const double a = projection(model, z);
  // thresholds[0] = -inf always satisfies b <= a; find the last b_y <= a.
  auto it = std::upper_bound(model.thresholds.begin(), model.thresholds.end(), a);
  return static_cast<int>(it - model.thresholds.begin());
}

int prank_predict_scan(const PRankModel& model, std::span<const double> z) {
  const double a = projection(model, z);
  int best = 1;
  for (int y = 1; y <= model.rank_count(); ++y)
    if (a >= model.thresholds[static_cast<std::size_t>(y - 1)]) best = y;
  return best;
}

PRankFit prank_fit_online(const RankedDataset& data, const PRankFitOptions& options) {
  PRankFit fit{PRankModel(data.rank_count(), data.dim() - 1), TrainTrace(), 0};
  auto& model = fit.model;
  std::size_t epoch = 0;
  for (; epoch < options.epochs; ++epoch) {
    std::size_t mistakes = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& ex = data[i];
      const int y = ex.rank;
      const int yhat = prank_predict(model, ex.z());
      if (y != yhat) {
        ++mistakes;
        axpy(static_cast<double>(y - yhat), ex.z(), model.direction);
        const double s = sign_of(y - yhat);
        for (int k = std::min(y, yhat) + 1; k <= std::max(y, yhat); ++k)
          model.thresholds[static_cast<std::size_t>(k - 1)] -= s;
        ++fit.order_checks;
        if (!model.thresholds_sorted())
          throw std::logic_error("prank: threshold order broken at visit " +
                                 std::to_string(fit.trace.size()));
      }
      fit.trace.record(i, y, yhat, y != yhat ? 1.0 : 0.0);
    }
    if (options.stop_when_clean && mistakes == 0) {
      ++epoch;
      break;
    }
  }
  fit.trace.set_epochs(epoch);
  return fit;
}

bool prank_margin_check(const RankedDataset& data, std::span<const double> direction,
                        std::span<const double> thresholds, double delta) {
  if (static_cast<int>(thresholds.size()) != data.rank_count())
    throw Error("prank_margin_check: threshold count != rank count");
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw Error("prank_margin_check: thresholds not sorted");
  for (const auto& ex : data) {
    const double a = dot(direction, ex.z());
    const auto y = static_cast<std::size_t>(ex.rank);
    if (!(thresholds[y - 1] + delta <= a)) return false;
    if (ex.rank < data.rank_count() && !(a <= thresholds[y] - delta)) return false;
  }
  return true;
}

std::vector<int> PRankProblem::feasible_outputs(std::span<const double>) const {
  std::vector<int> out(static_cast<std::size_t>(rank_count_));
  for (int k = 1; k <= rank_count_; ++k) out[static_cast<std::size_t>(k - 1)] = k;
  return out;
}

Vector PRankProblem::feature_map(std::span<const double> x, int y) const {
  if (x.size() != dim_) throw Error("prank feature map: dimension mismatch");
  Vector phi(weight_dim(), 0.0);
  for (std::size_t j = 0; j + 1 < dim_; ++j) phi[j] = y * x[j];
  for (int k = 0; k < y; ++k) phi[dim_ - 1 + static_cast<std::size_t>(k)] = -1.0;
  return phi;
}

Vector PRankProblem::to_weights(const PRankModel& model) const {
  Vector w(weight_dim(), 0.0);
  std::copy(model.direction.begin(), model.direction.end(), w.begin());
  for (int k = 2; k <= rank_count_; ++k)
    w[dim_ - 1 + static_cast<std::size_t>(k - 1)] = model.thresholds[static_cast<std::size_t>(k - 1)];
  return w;
}

PRankModel PRankProblem::to_model(std::span<const double> w) const {
  if (w.size() != weight_dim()) throw Error("prank: weight dimension mismatch");
  PRankModel model(rank_count_, dim_ - 1);
  std::copy(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(dim_ - 1), model.direction.begin());
  for (int k = 2; k <= rank_count_; ++k)
    model.thresholds[static_cast<std::size_t>(k - 1)] = w[dim_ - 1 + static_cast<std::size_t>(k - 1)];
  return model;
}

}  // namespace ordinal
