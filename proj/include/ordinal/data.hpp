#pragma once

// Benchmark ingestion: whitespace-separated numeric rows with the target in
// the last column, target discretization, feature normalization, seeded
// partitions and the final bias-augmented ranked dataset.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>

#include "ordinal/core.hpp"

namespace ordinal {

struct RawDataset {
  std::vector<Vector> features;  // rows of width d-1
  Vector targets;

  std::size_t size() const { return targets.size(); }
  std::size_t width() const { return features.empty() ? 0 : features.front().size(); }
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line) : Error(what), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

RawDataset parse_raw(std::istream& in);
RawDataset parse_raw(const std::filesystem::path& path);

class Discretizer {
public:
  enum class Strategy { equal_width, equal_frequency, given };

  Discretizer() = default;
  Discretizer(Strategy strategy, int bins, Vector cuts)
      : strategy_(strategy), bins_(bins), cuts_(std::move(cuts)) {}

  /// Fits cut points on `targets`. equal-width cuts sit at
  /// min + i (max-min)/r; equal-frequency cuts at sorted[floor(i n / r)];
  /// `given` expects integer ranks 1..r and has no cuts.
  static Discretizer fit(std::span<const double> targets, Strategy strategy, int bins);

  /// 1 + number of cuts <= value (the top bin is closed).
  int rank(double value) const;
  std::vector<int> transform(std::span<const double> targets) const;

  Strategy strategy() const { return strategy_; }
  int bins() const { return bins_; }
  const Vector& cuts() const { return cuts_; }

private:
  Strategy strategy_ = Strategy::equal_width;
  int bins_ = 2;
  Vector cuts_;
};

std::pair<Discretizer, std::vector<int>> discretize(std::span<const double> targets,
                                                    Discretizer::Strategy strategy, int bins);

Discretizer::Strategy binning_from_string(const std::string& name);
std::string to_string(Discretizer::Strategy s);

/// Per-feature affine map x -> (x - offset) / scale, fitted on one split.
class Normalizer {
public:
  enum class Strategy { none, standardize, minmax };

  Normalizer() = default;
  Normalizer(Strategy strategy, Vector offset, Vector scale)
      : strategy_(strategy), offset_(std::move(offset)), scale_(std::move(scale)) {}

  /// standardize: mean / population std; minmax: min / (max - min).
  /// Constant features map to 0.
  static Normalizer fit(const std::vector<Vector>& rows, Strategy strategy);

  Vector transform(std::span<const double> row) const;
  std::vector<Vector> transform(const std::vector<Vector>& rows) const;

  Strategy strategy() const { return strategy_; }
  const Vector& offset() const { return offset_; }
  const Vector& scale() const { return scale_; }
  std::size_t width() const { return offset_.size(); }

private:
  Strategy strategy_ = Strategy::none;
  Vector offset_;
  Vector scale_;  // 0 marks a constant feature
};

Normalizer::Strategy normalization_from_string(const std::string& name);
std::string to_string(Normalizer::Strategy s);

struct Partition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded shuffle, first round(fraction * n) indices train, the rest test.
Partition partition(std::size_t n, std::uint64_t seed, double train_fraction);
/// Same, with an absolute training-set size.
Partition partition_by_size(std::size_t n, std::uint64_t seed, std::size_t train_size);

/// Partition file: one line per fold, space-separated 0-based test indices.
std::vector<Partition> read_partition_file(const std::filesystem::path& path, std::size_t n);

/// Normalizes features, appends the -1 bias, pairs them with ranks.
RankedDataset finalize(const std::vector<Vector>& features, const Normalizer& normalizer,
                       std::span<const int> ranks, int rank_count);

template <typename T>
std::vector<T> select(const std::vector<T>& items, std::span<const std::size_t> indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(items.at(i));
  return out;
}

}  // namespace ordinal
