#include "ordinal/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace ordinal {

namespace {

bool parse_double(const std::string& token, double& out) {
  // strtod accepts forms like "3504." that from_chars also handles; use
  // from_chars for locale independence.
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

RawDataset parse_raw(std::istream& in) {
  RawDataset out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream tokens(line);
    Vector row;
    std::string token;
    while (tokens >> token) {
      double v = 0.0;
      if (!parse_double(token, v) || !std::isfinite(v))
        throw ParseError("line " + std::to_string(line_no) + ": non-numeric token '" + token + "'",
                         line_no);
      row.push_back(v);
    }
    if (row.empty()) continue;
    if (row.size() < 2)
      throw ParseError("line " + std::to_string(line_no) + ": need at least one feature and a target",
                       line_no);
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw ParseError("line " + std::to_string(line_no) + ": ragged row (" +
                           std::to_string(row.size()) + " columns, expected " +
                           std::to_string(width) + ")",
                       line_no);
    out.targets.push_back(row.back());
    row.pop_back();
    out.features.push_back(std::move(row));
  }
  if (out.targets.empty()) throw ParseError("empty dataset", line_no);
  return out;
}

RawDataset parse_raw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());
  try {
    return parse_raw(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

Discretizer Discretizer::fit(std::span<const double> targets, Strategy strategy, int bins) {
  if (bins < 2) throw Error("discretize: need at least 2 bins");
  if (targets.empty()) throw Error("discretize: no targets");
  const auto [lo, hi] = std::minmax_element(targets.begin(), targets.end());
  Vector cuts;
  switch (strategy) {
    case Strategy::equal_width: {
      if (!(*hi > *lo)) throw Error("discretize: degenerate target range");
      const double width = (*hi - *lo) / bins;
      for (int i = 1; i < bins; ++i) cuts.push_back(*lo + i * width);
      break;
    }
    case Strategy::equal_frequency: {
      std::set<double> distinct(targets.begin(), targets.end());
      if (static_cast<int>(distinct.size()) < bins)
        throw Error("discretize: fewer distinct targets than bins");
      Vector sorted(targets.begin(), targets.end());
      std::sort(sorted.begin(), sorted.end());
      const std::size_t n = sorted.size();
      for (int i = 1; i < bins; ++i)
        cuts.push_back(sorted[static_cast<std::size_t>(i) * n / static_cast<std::size_t>(bins)]);
      break;
    }
    case Strategy::given:
      for (double t : targets)
        if (t != std::floor(t) || t < 1 || t > bins)
          throw Error("discretize: given ranks must be integers in 1.." + std::to_string(bins));
      break;
  }
  return Discretizer(strategy, bins, std::move(cuts));
}

int Discretizer::rank(double value) const {
  if (strategy_ == Strategy::given) {
    const int r = static_cast<int>(value);
    if (r != value || r < 1 || r > bins_) throw Error("discretize: target is not a rank in range");
    return r;
  }
  return 1 + static_cast<int>(std::upper_bound(cuts_.begin(), cuts_.end(), value) - cuts_.begin());
}

std::vector<int> Discretizer::transform(std::span<const double> targets) const {
  std::vector<int> out;
  out.reserve(targets.size());
  for (double t : targets) out.push_back(rank(t));
  return out;
}

std::pair<Discretizer, std::vector<int>> discretize(std::span<const double> targets,
                                                    Discretizer::Strategy strategy, int bins) {
  Discretizer d = Discretizer::fit(targets, strategy, bins);
  auto ranks = d.transform(targets);
  return {std::move(d), std::move(ranks)};
}

Discretizer::Strategy binning_from_string(const std::string& name) {
  if (name == "equal-width") return Discretizer::Strategy::equal_width;
  if (name == "equal-frequency") return Discretizer::Strategy::equal_frequency;
  if (name == "given") return Discretizer::Strategy::given;
  throw Error("unknown binning strategy '" + name + "'");
}

std::string to_string(Discretizer::Strategy s) {
  switch (s) {
    case Discretizer::Strategy::equal_width: return "equal-width";
    case Discretizer::Strategy::equal_frequency: return "equal-frequency";
    case Discretizer::Strategy::given: return "given";
  }
  return "?";
}

Normalizer Normalizer::fit(const std::vector<Vector>& rows, Strategy strategy) {
  if (rows.empty()) throw Error("normalizer: no rows to fit");
  const std::size_t width = rows.front().size();
  Vector offset(width, 0.0), scale(width, 1.0);
  if (strategy == Strategy::standardize) {
    const double n = static_cast<double>(rows.size());
    for (std::size_t j = 0; j < width; ++j) {
      double mean = 0.0;
      for (const auto& r : rows) mean += r.at(j);
      mean /= n;
      double var = 0.0;
      for (const auto& r : rows) var += (r[j] - mean) * (r[j] - mean);
      var /= n;
      offset[j] = mean;
      scale[j] = var > 0.0 ? std::sqrt(var) : 0.0;
    }
  } else if (strategy == Strategy::minmax) {
    for (std::size_t j = 0; j < width; ++j) {
      double lo = rows.front().at(j), hi = lo;
      for (const auto& r : rows) {
        lo = std::min(lo, r.at(j));
        hi = std::max(hi, r[j]);
      }
      offset[j] = lo;
      scale[j] = hi > lo ? hi - lo : 0.0;
    }
  }
  return Normalizer(strategy, std::move(offset), std::move(scale));
}

Vector Normalizer::transform(std::span<const double> row) const {
  if (row.size() != offset_.size())
    throw Error("normalizer: row width " + std::to_string(row.size()) + " != fitted width " +
                std::to_string(offset_.size()));
  Vector out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j)
    out[j] = scale_[j] == 0.0 ? 0.0 : (row[j] - offset_[j]) / scale_[j];
  if (strategy_ == Strategy::none) std::copy(row.begin(), row.end(), out.begin());
  return out;
}

std::vector<Vector> Normalizer::transform(const std::vector<Vector>& rows) const {
  std::vector<Vector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(transform(r));
  return out;
}

Normalizer::Strategy normalization_from_string(const std::string& name) {
  if (name == "none") return Normalizer::Strategy::none;
  if (name == "standardize") return Normalizer::Strategy::standardize;
  if (name == "minmax") return Normalizer::Strategy::minmax;
  throw Error("unknown normalization '" + name + "'");
}

std::string to_string(Normalizer::Strategy s) {
  switch (s) {
    case Normalizer::Strategy::none: return "none";
    case Normalizer::Strategy::standardize: return "standardize";
    case Normalizer::Strategy::minmax: return "minmax";
  }
  return "?";
}

Partition partition_by_size(std::size_t n, std::uint64_t seed, std::size_t train_size) {
  if (train_size == 0 || train_size >= n) throw Error("partition: split would be empty");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  Partition p;
  p.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_size));
  p.test.assign(order.begin() + static_cast<std::ptrdiff_t>(train_size), order.end());
  std::sort(p.train.begin(), p.train.end());
  std::sort(p.test.begin(), p.test.end());
  return p;
}

Partition partition(std::size_t n, std::uint64_t seed, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error("partition: train fraction must be in (0, 1)");
  const auto train_size = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  return partition_by_size(n, seed, train_size);
}

std::vector<Partition> read_partition_file(const std::filesystem::path& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open partition file " + path.string());
  std::vector<Partition> folds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::vector<bool> is_test(n, false);
    std::size_t idx = 0;
    bool any = false;
    while (tokens >> idx) {
      if (idx >= n)
        throw ParseError("partition line " + std::to_string(line_no) + ": index out of range",
                         line_no);
      is_test[idx] = true;
      any = true;
    }
    if (!any) continue;
    Partition p;
    for (std::size_t i = 0; i < n; ++i) (is_test[i] ? p.test : p.train).push_back(i);
    if (p.train.empty()) throw ParseError("partition leaves no training rows", line_no);
    folds.push_back(std::move(p));
  }
  if (folds.empty()) throw Error("partition file has no folds");
  return folds;
}

RankedDataset finalize(const std::vector<Vector>& features, const Normalizer& normalizer,
                       std::span<const int> ranks, int rank_count) {
  if (features.size() != ranks.size()) throw Error("finalize: feature/rank count mismatch");
  std::vector<RankedExample> examples;
  examples.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    Vector x = normalizer.strategy() == Normalizer::Strategy::none && normalizer.width() == 0
                   ? features[i]
                   : normalizer.transform(features[i]);
    x.push_back(-1.0);
    examples.push_back({std::move(x), ranks[i]});
  }
  return RankedDataset(std::move(examples), rank_count);
}

}  // namespace ordinal
