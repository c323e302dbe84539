#include "ordinal/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace ordinal {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

void axpy(double scale, std::span<const double> b, std::span<double> a) {
  if (a.size() != b.size()) throw Error("axpy: dimension mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += scale * b[i];
}

RankedDataset::RankedDataset(std::vector<RankedExample> examples, int rank_count)
    : examples_(std::move(examples)), rank_count_(rank_count) {
  if (rank_count_ < 2) throw Error("dataset needs at least 2 ranks");
  if (examples_.empty()) return;
  dim_ = examples_.front().features.size();
  if (dim_ < 1) throw Error("dataset examples need at least the bias feature");
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const auto& e = examples_[i];
    if (e.features.size() != dim_)
      throw Error("example " + std::to_string(i) + ": dimension " +
                  std::to_string(e.features.size()) + " != " + std::to_string(dim_));
    if (e.features.back() != -1.0)
      throw Error("example " + std::to_string(i) + ": last feature must be -1");
    if (e.rank < 1 || e.rank > rank_count_)
      throw Error("example " + std::to_string(i) + ": rank " + std::to_string(e.rank) +
                  " outside 1.." + std::to_string(rank_count_));
  }
}

double RankedDataset::radius() const {
  double r2 = 0.0;
  for (const auto& e : examples_) r2 = std::max(r2, squared_norm(e.features));
  return std::sqrt(r2);
}

WeightStack::WeightStack(int levels, std::size_t dim)
    : levels_(levels), dim_(dim), data_(static_cast<std::size_t>(levels) * dim, 0.0) {
  if (levels < 1) throw Error("weight stack needs at least one level");
}

std::span<double> WeightStack::level(int k) {
  if (k < 1 || k > levels_) throw Error("weight stack level out of range");
  return std::span<double>(data_).subspan(static_cast<std::size_t>(k - 1) * dim_, dim_);
}

std::span<const double> WeightStack::level(int k) const {
  if (k < 1 || k > levels_) throw Error("weight stack level out of range");
  return std::span<const double>(data_).subspan(static_cast<std::size_t>(k - 1) * dim_, dim_);
}

double WeightStack::norm() const { return std::sqrt(squared_norm(data_)); }

bool WeightStack::level_one_is_zero() const {
  auto w1 = level(1);
  return std::all_of(w1.begin(), w1.end(), [](double v) { return v == 0.0; });
}

LossFn LossFn::scaled_zero_one(double delta) {
  if (!(delta > 0.0)) throw Error("scaled loss needs delta > 0");
  return LossFn(Kind::scaled_zero_one, delta);
}

LossFn LossFn::scaled_absolute(double delta) {
  if (!(delta > 0.0)) throw Error("scaled loss needs delta > 0");
  return LossFn(Kind::scaled_absolute, delta);
}

double LossFn::operator()(int y, int yhat) const {
  switch (kind_) {
    case Kind::absolute: return absolute_loss(y, yhat);
    case Kind::zero_one: return y == yhat ? 0.0 : 1.0;
    case Kind::scaled_zero_one: return y == yhat ? 0.0 : scale_;
    case Kind::scaled_absolute: return scale_ * absolute_loss(y, yhat);
  }
  return 0.0;
}

int absolute_loss(int y, int yhat) { return std::abs(y - yhat); }

double mean_absolute_error(std::span<const int> truths, std::span<const int> preds) {
  if (truths.size() != preds.size()) throw Error("mean_absolute_error: length mismatch");
  if (truths.empty()) throw Error("mean_absolute_error: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) total += absolute_loss(truths[i], preds[i]);
  return total / static_cast<double>(truths.size());
}

}  // namespace ordinal
