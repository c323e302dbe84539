#pragma once

// Domain types shared by every learner: ranked examples, datasets, the
// per-level weight stack and the rank losses.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ordinal {

using Vector = std::vector<double>;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
// a += scale * b
void axpy(double scale, std::span<const double> b, std::span<double> a);

inline int sign_of(int v) { return (v > 0) - (v < 0); }

/// A feature vector whose last entry is the constant -1, plus a rank in 1..r.
struct RankedExample {
  Vector features;
  int rank = 1;

  std::span<const double> x() const { return features; }
  /// The features without the trailing bias entry.
  std::span<const double> z() const {
    return std::span<const double>(features).first(features.size() - 1);
  }
};

/// An ordered collection of ranked examples sharing one dimension.
///
/// Construction validates the bias convention (last feature == -1 exactly),
/// the rank range and the dimension; the data module is the place that
/// appends the bias to raw features.
class RankedDataset {
public:
  RankedDataset(std::vector<RankedExample> examples, int rank_count);

  const std::vector<RankedExample>& examples() const { return examples_; }
  const RankedExample& operator[](std::size_t i) const { return examples_[i]; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  int rank_count() const { return rank_count_; }
  std::size_t dim() const { return dim_; }

  /// Largest Euclidean norm over all feature vectors.
  double radius() const;

  auto begin() const { return examples_.begin(); }
  auto end() const { return examples_.end(); }

private:
  std::vector<RankedExample> examples_;
  int rank_count_;
  std::size_t dim_ = 0;
};

/// The r per-level weight vectors w_1..w_r stored as one contiguous r*d
/// block. Levels are addressed 1-based. Level 1 is never written by any
/// learner; `level_one_is_zero` lets callers assert that.
class WeightStack {
public:
  WeightStack() = default;
  WeightStack(int levels, std::size_t dim);

  int levels() const { return levels_; }
  std::size_t dim() const { return dim_; }

  std::span<double> level(int k);
  std::span<const double> level(int k) const;

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  double norm() const;
  bool level_one_is_zero() const;

  friend bool operator==(const WeightStack&, const WeightStack&) = default;

private:
  int levels_ = 0;
  std::size_t dim_ = 0;
  Vector data_;
};

/// Rank losses. All satisfy l(y,y) = 0, l(y,y') > 0 for y != y', symmetry.
class LossFn {
public:
  enum class Kind { absolute, zero_one, scaled_zero_one, scaled_absolute };

  static LossFn absolute() { return LossFn(Kind::absolute, 1.0); }
  static LossFn zero_one() { return LossFn(Kind::zero_one, 1.0); }
  static LossFn scaled_zero_one(double delta);
  static LossFn scaled_absolute(double delta);

  double operator()(int y, int yhat) const;
  Kind kind() const { return kind_; }
  double scale() const { return scale_; }

private:
  LossFn(Kind kind, double scale) : kind_(kind), scale_(scale) {}
  Kind kind_;
  double scale_;
};

int absolute_loss(int y, int yhat);

double mean_absolute_error(std::span<const int> truths, std::span<const int> preds);

}  // namespace ordinal
