#include "ordinal/kernel.hpp"

#include <algorithm>
#include <cmath>

namespace ordinal {

double Kernel::operator()(std::span<const double> a, std::span<const double> b) const {
  double v = 0.0;
  switch (kind) {
    case Kind::linear: v = dot(a, b); break;
    case Kind::polynomial: v = std::pow(dot(a, b) + coef0, degree); break;
    case Kind::rbf: {
      if (a.size() != b.size()) throw Error("kernel: dimension mismatch");
      double d2 = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
      v = std::exp(-gamma * d2);
      break;
    }
  }
  if (!std::isfinite(v)) throw Error("kernel evaluation is not finite");
  return v;
}

SupportEntry& DualCuSumModel::entry_for(std::size_t example, std::span<const double> x) {
  auto it = slot_of_.find(example);
  if (it != slot_of_.end()) return support_[it->second];
  add_entry({example, Vector(x.begin(), x.end()), std::vector<int>(static_cast<std::size_t>(rank_count_ - 1), 0)});
  return support_.back();
}

void DualCuSumModel::add_entry(SupportEntry entry) {
  if (entry.features.size() != dim_) throw Error("dual model: support dimension mismatch");
  if (entry.beta.size() != static_cast<std::size_t>(rank_count_ - 1))
    throw Error("dual model: coefficient count mismatch");
  slot_of_.emplace(entry.example, support_.size());
  support_.push_back(std::move(entry));
}

Vector DualCuSumModel::level_responses(std::span<const double> kernel_values) const {
  Vector resp(static_cast<std::size_t>(rank_count_), 0.0);
  for (std::size_t s = 0; s < support_.size(); ++s) {
    const double kv = kernel_values[s];
    const auto& beta = support_[s].beta;
    for (std::size_t j = 0; j < beta.size(); ++j)
      if (beta[j] != 0) resp[j + 1] += beta[j] * kv;
  }
  return resp;
}

Vector DualCuSumModel::scores(std::span<const double> x) const {
  if (x.size() != dim_) throw Error("dual model: dimension mismatch");
  Vector kv(support_.size());
  for (std::size_t s = 0; s < support_.size(); ++s) kv[s] = kernel_(support_[s].features, x);
  Vector resp = level_responses(kv);
  for (std::size_t k = 1; k < resp.size(); ++k) resp[k] += resp[k - 1];
  return resp;
}

namespace {

int argmax_lowest(const Vector& scores) {
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin()) + 1;
}

}  // namespace

int dual_predict(const DualCuSumModel& model, std::span<const double> x) {
  return argmax_lowest(model.scores(x));
}

DualFit dual_fit_online(const RankedDataset& data, const Kernel& kernel,
                        const DualFitOptions& options) {
  DualFit fit{DualCuSumModel(data.rank_count(), data.dim(), kernel), TrainTrace()};
  auto& model = fit.model;
  // rows[i][s] = K(x_i, support_s), filled lazily as the support set grows.
  std::vector<Vector> rows(options.cache ? data.size() : 0);
  Vector scratch;

  std::size_t epoch = 0;
  for (; epoch < options.epochs; ++epoch) {
    std::size_t mistakes = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& ex = data[i];
      const auto& support = model.support();
      Vector* kv = &scratch;
      if (options.cache) {
        kv = &rows[i];
        for (std::size_t s = kv->size(); s < support.size(); ++s)
          kv->push_back(kernel(support[s].features, ex.x()));
      } else {
        scratch.resize(support.size());
        for (std::size_t s = 0; s < support.size(); ++s)
          scratch[s] = kernel(support[s].features, ex.x());
      }
      Vector scores = model.level_responses(*kv);
      for (std::size_t k = 1; k < scores.size(); ++k) scores[k] += scores[k - 1];
      const int y = ex.rank;
      const int yhat = argmax_lowest(scores);
      if (y != yhat) {
        ++mistakes;
        auto& entry = model.entry_for(i, ex.x());
        const int s = sign_of(y - yhat);
        for (int j = std::min(y, yhat) + 1; j <= std::max(y, yhat); ++j)
          entry.beta[static_cast<std::size_t>(j - 2)] += s;
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

}  // namespace ordinal
