#pragma once

// Run configuration, the train/evaluate pipeline, model artifacts and the
// report writers used by the `ordinal` command-line tool.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "ordinal/cusum.hpp"
#include "ordinal/data.hpp"
#include "ordinal/ensemble.hpp"
#include "ordinal/features.hpp"
#include "ordinal/kernel.hpp"
#include "ordinal/prank.hpp"
#include "ordinal/synthlab.hpp"

namespace ordinal {

class ConfigError : public Error {
public:
  using Error::Error;
};

struct RunConfig {
  std::filesystem::path dataset;
  int bins = 5;
  Discretizer::Strategy binning = Discretizer::Strategy::equal_frequency;
  std::string algorithm = "cusum";  // cusum, cusum-pa, prank, counting, kernel-cusum

  // Lists are candidate grids, selected on partition 0.
  std::vector<Normalizer::Strategy> normalization{Normalizer::Strategy::standardize};
  std::vector<std::size_t> epochs{10};
  std::vector<double> margin_scale{0.0};
  std::vector<double> shrinkage{1.0};

  double delta = 0.1;
  Kernel kernel;
  bool averaging = false;
  bool shuffle = false;

  bool features = false;
  MLPOptions mlp;
  double validation_fraction = 0.2;

  std::uint64_t seed = 1;
  std::size_t partitions = 20;
  double train_fraction = 0.75;  // 1.0 trains and evaluates on everything
  std::size_t train_size = 0;    // overrides train_fraction when > 0
  std::optional<std::filesystem::path> partition_file;
  std::vector<std::size_t> folds;  // empty: every partition except 0
  std::size_t threads = 1;

  std::optional<std::filesystem::path> model_path;
  std::optional<std::filesystem::path> report_path;

  // verify-bounds
  std::size_t bound_seeds = 100;
  std::uint64_t bound_first_seed = 1;
  std::size_t bound_n = 200;
  std::size_t bound_d = 10;
  int bound_r = 5;
  double bound_radius = 1.0;
  std::string bound_learner = "cusum-vanilla";
  std::string bound_family = "rank";
  std::size_t bound_max_epochs = 1000;
  std::optional<std::size_t> flip_update;
};

/// Flat `key = value` text: numbers, true/false, quoted or bare strings and
/// [a, b] lists; `#` starts a comment. Unknown keys are rejected by name.
/// Relative paths resolve against `base_dir`.
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
/// Throws ConfigError naming the offending key.
void validate_config(const RunConfig& config);

const std::vector<std::string>& known_config_keys();

// ---- pipeline -----------------------------------------------------------

/// Raw features -> normalized -> (optional) hidden embedding -> normalized
/// -> bias-augmented x.
struct Pipeline {
  Discretizer discretizer;
  Normalizer input;
  std::optional<MLPRegressor> network;
  Normalizer embedding;

  Vector transform(std::span<const double> raw) const;
  std::vector<Vector> transform(const std::vector<Vector>& rows) const;
  RankedDataset dataset(const std::vector<Vector>& rows, std::span<const int> ranks) const;
};

using LearnedModel = std::variant<CuSumModel, PRankModel, CountingModel, DualCuSumModel>;

int predict_rank(const LearnedModel& model, std::span<const double> x);

struct ModelArtifact {
  std::string algorithm;
  Pipeline pipeline;
  LearnedModel model;

  int rank_count() const { return pipeline.discretizer.bins(); }
  /// Predicted rank for one raw feature row.
  int predict(std::span<const double> raw) const;
};

void save_artifact(std::ostream& out, const ModelArtifact& artifact);
ModelArtifact load_artifact(std::istream& in);
void save_artifact(const std::filesystem::path& path, const ModelArtifact& artifact);
ModelArtifact load_artifact(const std::filesystem::path& path);

// ---- training -----------------------------------------------------------

struct GridPoint {
  Normalizer::Strategy normalization = Normalizer::Strategy::standardize;
  std::size_t epochs = 10;
  double margin_scale = 0.0;
  double shrinkage = 1.0;
};

struct LearnerOutcome {
  LearnedModel model;
  std::size_t mistakes = 0;
  std::size_t epochs_run = 0;
};

/// Trains the configured ordinal learner on a finished dataset.
LearnerOutcome train_learner(const RunConfig& config, const GridPoint& point,
                             const RankedDataset& data);

struct FoldResult {
  std::size_t fold = 0;
  GridPoint point;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  double train_mae = 0.0;
  double test_mae = 0.0;
  std::size_t mistakes = 0;
  std::size_t epochs_run = 0;
  std::size_t feature_epochs = 0;
  ModelArtifact artifact;
};

struct PreparedData {
  RawDataset raw;
  Discretizer discretizer;
  std::vector<int> ranks;
  std::vector<Partition> partitions;
};

/// Parses the dataset, discretizes the targets and builds every partition.
PreparedData prepare_data(const RunConfig& config);

FoldResult run_fold(const RunConfig& config, const PreparedData& data, std::size_t fold,
                    const GridPoint& point);

struct BenchResult {
  GridPoint selected;
  std::vector<FoldResult> folds;
  double mean_test_mae = 0.0;
  double stderr_test_mae = 0.0;
};

/// Grid selection on partition 0 (by its test MAE) when the grid has more
/// than one point. Returns the selected point and its partition-0 result.
FoldResult select_on_first_partition(const RunConfig& config, const PreparedData& data);

/// Runs the reported folds with the selected grid point; folds may run on
/// `config.threads` threads but results keep fold order.
BenchResult run_bench(const RunConfig& config, const PreparedData& data);

// ---- verify-bounds --------------------------------------------------------

struct BoundSuiteRow {
  std::uint64_t seed = 0;
  BoundReport report;
};

struct BoundSuite {
  std::vector<BoundSuiteRow> rows;
  std::size_t violations = 0;
};

BoundSuite run_bound_suite(const RunConfig& config);

// ---- reports --------------------------------------------------------------

extern const char* const kFoldReportVersion;
extern const char* const kBoundReportVersion;
extern const char* const kPredictionReportVersion;

void write_fold_csv(std::ostream& out, const std::vector<FoldResult>& folds,
                    const std::optional<BenchResult>& aggregate);
void write_fold_table(std::ostream& out, const std::vector<FoldResult>& folds,
                      const std::optional<BenchResult>& aggregate);
void write_bound_csv(std::ostream& out, const RunConfig& config, const BoundSuite& suite);
void write_bound_table(std::ostream& out, const BoundSuite& suite);

std::string format_double(double v);  // %.17g

}  // namespace ordinal
