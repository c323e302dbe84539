#pragma once

// Dual (kernelized) CuSum Rank with atom-level coefficients. The CuSum
// feature map decomposes as Phi(x,y) = sum_{j<=y} block_j(x), so each
// threshold level j is an atom and every support example carries one
// integer coefficient per level 2..r instead of one per structure pair.

#include <unordered_map>

#include "ordinal/engine.hpp"

namespace ordinal {

struct Kernel {
  enum class Kind { linear, polynomial, rbf };
  Kind kind = Kind::linear;
  int degree = 2;
  double coef0 = 1.0;
  double gamma = 1.0;

  static Kernel linear() { return {}; }
  static Kernel polynomial(int degree, double coef0) { return {Kind::polynomial, degree, coef0, 1.0}; }
  static Kernel rbf(double gamma) { return {Kind::rbf, 2, 1.0, gamma}; }

  double operator()(std::span<const double> a, std::span<const double> b) const;
};

struct SupportEntry {
  std::size_t example = 0;  // index in the training set
  Vector features;
  std::vector<int> beta;    // beta[k-2] for levels k = 2..r
};

class DualCuSumModel {
public:
  DualCuSumModel() = default;
  DualCuSumModel(int rank_count, std::size_t dim, Kernel kernel)
      : rank_count_(rank_count), dim_(dim), kernel_(kernel) {}

  int rank_count() const { return rank_count_; }
  std::size_t dim() const { return dim_; }
  const Kernel& kernel() const { return kernel_; }
  const std::vector<SupportEntry>& support() const { return support_; }

  /// Support slot for a training example, created on first use.
  SupportEntry& entry_for(std::size_t example, std::span<const double> x);
  void add_entry(SupportEntry entry);

  /// Per-level responses sum_i beta_{i,k} K(x_i, x) for k = 1..r (level 1
  /// is always 0), given the kernel values against every support entry.
  Vector level_responses(std::span<const double> kernel_values) const;
  /// Cumulative scores s(x,k), k = 1..r.
  Vector scores(std::span<const double> x) const;

private:
  int rank_count_ = 2;
  std::size_t dim_ = 0;
  Kernel kernel_;
  std::vector<SupportEntry> support_;
  std::unordered_map<std::size_t, std::size_t> slot_of_;
};

/// argmax_k sum_{j<=k} sum_i beta_{i,j} K(x_i, x); ties go to the lowest k.
int dual_predict(const DualCuSumModel& model, std::span<const double> x);

struct DualFitOptions {
  std::size_t epochs = 1;
  bool stop_when_clean = false;
  /// Cache kernel rows between training examples and support entries.
  bool cache = true;
};

struct DualFit {
  DualCuSumModel model;
  TrainTrace trace;
};

/// On a mistake at example i: beta_{i,j} += sign(y - yhat) for
/// j = min(y,yhat)+1 .. max(y,yhat).
DualFit dual_fit_online(const RankedDataset& data, const Kernel& kernel,
                        const DualFitOptions& options = {});

}  // namespace ordinal
