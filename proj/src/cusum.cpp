#include "ordinal/cusum.hpp"

#include <algorithm>
#include <cmath>

namespace ordinal {

namespace {

void check_dims(const CuSumModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) throw Error("cusum: dimension mismatch");
}

}  // namespace

double cusum_score(const CuSumModel& model, std::span<const double> x, int k) {
  check_dims(model, x);
  if (k < 1 || k > model.rank_count()) throw Error("cusum_score: rank out of range");
  double s = 0.0;
  for (int j = 1; j <= k; ++j) s += dot(model.weights.level(j), x);
  return s;
}

Vector cusum_scores(const CuSumModel& model, std::span<const double> x) {
  check_dims(model, x);
  Vector scores(static_cast<std::size_t>(model.rank_count()));
  double s = 0.0;
  for (int k = 1; k <= model.rank_count(); ++k) {
    s += dot(model.weights.level(k), x);
    scores[static_cast<std::size_t>(k - 1)] = s;
  }
  return scores;
}

int cusum_predict(const CuSumModel& model, std::span<const double> x) {
  const Vector scores = cusum_scores(model, x);
  // max_element returns the first maximum, i.e. the lowest rank on ties.
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin()) + 1;
}

double cusum_signed_score(const CuSumModel& model, std::span<const double> x, int k) {
  check_dims(model, x);
  double s = 0.0;
  for (int j = 1; j <= model.rank_count(); ++j)
    s += (j <= k ? 1.0 : -1.0) * dot(model.weights.level(j), x);
  return s;
}

CuSumFit cusum_fit_online(const RankedDataset& data, const CuSumFitOptions& options) {
  CuSumFit fit{CuSumModel(data.rank_count(), data.dim()), TrainTrace()};
  std::size_t update_index = 0;
  std::size_t epoch = 0;
  for (; epoch < options.epochs; ++epoch) {
    std::size_t mistakes = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& ex = data[i];
      const int y = ex.rank;
      const int yhat = cusum_predict(fit.model, ex.x());
      double step = 0.0;
      if (y != yhat) {
        ++mistakes;
        double s = sign_of(y - yhat);
        if (options.flip_update && *options.flip_update == update_index) s = -s;
        ++update_index;
        for (int k = std::min(y, yhat) + 1; k <= std::max(y, yhat); ++k)
          axpy(s, ex.x(), fit.model.weights.level(k));
        step = 1.0;
      }
      fit.trace.record(i, y, yhat, step);
    }
    if (options.stop_when_clean && mistakes == 0) {
      ++epoch;
      break;
    }
  }
  fit.trace.set_epochs(epoch);
  return fit;
}

CuSumFit cusum_fit_pa(const RankedDataset& data, double delta, const CuSumFitOptions& options) {
  if (!(delta > 0.0)) throw Error("cusum_fit_pa: delta must be > 0");
  CuSumFit fit{CuSumModel(data.rank_count(), data.dim()), TrainTrace()};
  Vector wbar(data.dim());
  std::size_t update_index = 0;
  std::size_t epoch = 0;
  for (; epoch < options.epochs; ++epoch) {
    std::size_t mistakes = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& ex = data[i];
      const int y = ex.rank;
      const int yhat = cusum_predict(fit.model, ex.x());
      double step = 0.0;
      if (y != yhat) {
        ++mistakes;
        const double xnorm2 = squared_norm(ex.x());
        if (xnorm2 == 0.0) throw Error("cusum_fit_pa: zero-norm example " + std::to_string(i));
        const int lo = std::min(y, yhat) + 1;
        const int hi = std::max(y, yhat);
        std::fill(wbar.begin(), wbar.end(), 0.0);
        for (int j = lo; j <= hi; ++j) axpy(1.0, fit.model.weights.level(j), wbar);
        double rho = (sign_of(y - yhat) * delta - dot(wbar, ex.x())) /
                     (std::abs(yhat - y) * xnorm2);
        if (options.flip_update && *options.flip_update == update_index) rho = -rho;
        ++update_index;
        for (int j = lo; j <= hi; ++j) axpy(rho, ex.x(), fit.model.weights.level(j));
        step = rho * sign_of(y - yhat);
      }
      fit.trace.record(i, y, yhat, step);
    }
    if (options.stop_when_clean && mistakes == 0) {
      ++epoch;
      break;
    }
  }
  fit.trace.set_epochs(epoch);
  return fit;
}

std::vector<int> CuSumProblem::feasible_outputs(std::span<const double>) const {
  std::vector<int> out(static_cast<std::size_t>(rank_count_));
  for (int k = 1; k <= rank_count_; ++k) out[static_cast<std::size_t>(k - 1)] = k;
  return out;
}

Vector CuSumProblem::feature_map(std::span<const double> x, int y) const {
  if (x.size() != dim_) throw Error("cusum feature map: dimension mismatch");
  Vector phi(weight_dim(), 0.0);
  for (int j = 0; j < y; ++j)
    std::copy(x.begin(), x.end(), phi.begin() + static_cast<std::ptrdiff_t>(j * dim_));
  return phi;
}

double CuSumProblem::score(std::span<const double> w, std::span<const double> x, int y) const {
  if (x.size() != dim_ || w.size() != weight_dim()) throw Error("cusum score: dimension mismatch");
  double s = 0.0;
  for (int j = 0; j < y; ++j) s += dot(w.subspan(static_cast<std::size_t>(j) * dim_, dim_), x);
  return s;
}

void CuSumProblem::add_feature_difference(std::span<double> w, std::span<const double> x, int y,
                                          int yhat, double scale) const {
  const double s = scale * sign_of(y - yhat);
  for (int k = std::min(y, yhat) + 1; k <= std::max(y, yhat); ++k)
    axpy(s, x, w.subspan(static_cast<std::size_t>(k - 1) * dim_, dim_));
}

double CuSumProblem::feature_difference_squared_norm(std::span<const double> x, int y,
                                                     int yhat) const {
  return std::abs(y - yhat) * squared_norm(x);
}

CuSumModel CuSumProblem::to_model(std::span<const double> w) const {
  if (w.size() != weight_dim()) throw Error("cusum: weight dimension mismatch");
  CuSumModel model(rank_count_, dim_);
  std::copy(w.begin(), w.end(), model.weights.flat().begin());
  return model;
}

}  // namespace ordinal
