// ordinal: train, predict, benchmark and bound-verification front end.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ordinal/bench.hpp"

using namespace ordinal;

namespace {

struct Overrides {
  std::string config;
  std::optional<int> bins;
  std::optional<std::string> algo;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<double> delta;
  std::optional<std::string> report;
  std::optional<std::string> model;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "run configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--bins", o.bins, "number of ranks");
  cmd->add_option("--algo", o.algo, "learner (cusum, cusum-pa, prank, counting, kernel-cusum)");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--epochs", o.epochs, "epoch budget");
  cmd->add_option("--delta", o.delta, "margin delta");
  cmd->add_option("--report", o.report, "CSV report path");
}

RunConfig resolve_config(const Overrides& o, bool bounds) {
  RunConfig c = load_config(o.config);
  if (o.bins) c.bins = *o.bins;
  if (o.delta) c.delta = *o.delta;
  if (bounds) {
    if (o.algo) c.bound_learner = *o.algo;
    if (o.seed) c.bound_first_seed = *o.seed;
    if (o.epochs) c.bound_max_epochs = *o.epochs;
  } else {
    if (o.algo) c.algorithm = *o.algo;
    if (o.seed) c.seed = *o.seed;
    if (o.epochs) c.epochs = {*o.epochs};
  }
  if (o.report) c.report_path = *o.report;
  if (o.model) c.model_path = *o.model;
  validate_config(c);
  return c;
}

// Renders to memory first so a failure never leaves a partial file behind.
template <typename F>
void write_file(const std::filesystem::path& path, F render) {
  std::ostringstream buf;
  render(buf);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << buf.str();
}

int cmd_train(const Overrides& o) {
  const RunConfig c = resolve_config(o, false);
  const PreparedData data = prepare_data(c);
  FoldResult fold = select_on_first_partition(c, data);
  if (c.model_path) save_artifact(*c.model_path, fold.artifact);
  const std::vector<FoldResult> folds{fold};
  if (c.report_path)
    write_file(*c.report_path, [&](std::ostream& out) { write_fold_csv(out, folds, std::nullopt); });
  write_fold_table(std::cout, folds, std::nullopt);
  return 0;
}

int cmd_predict(const Overrides& o, const std::string& data_path) {
  const RunConfig c = resolve_config(o, false);
  if (!c.model_path) throw ConfigError("predict needs --model or config key 'model'");
  const ModelArtifact artifact = load_artifact(*c.model_path);
  const RawDataset raw = parse_raw(data_path.empty() ? c.dataset : std::filesystem::path(data_path));
  std::vector<int> truth, pred;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    truth.push_back(artifact.pipeline.discretizer.rank(raw.targets[i]));
    pred.push_back(artifact.predict(raw.features[i]));
  }
  const auto render = [&](std::ostream& out) {
    out << kPredictionReportVersion << '\n' << "index,target,rank,predicted\n";
    for (std::size_t i = 0; i < raw.size(); ++i)
      out << i << ',' << format_double(raw.targets[i]) << ',' << truth[i] << ',' << pred[i] << '\n';
  };
  if (c.report_path) write_file(*c.report_path, render);
  else render(std::cout);
  char line[64];
  std::snprintf(line, sizeof line, "MAE %.4f over %zu rows\n", mean_absolute_error(truth, pred), raw.size());
  std::cerr << line;
  return 0;
}

int cmd_bench(const Overrides& o) {
  const RunConfig c = resolve_config(o, false);
  const PreparedData data = prepare_data(c);
  const BenchResult result = run_bench(c, data);
  if (c.report_path)
    write_file(*c.report_path, [&](std::ostream& out) { write_fold_csv(out, result.folds, result); });
  write_fold_table(std::cout, result.folds, result);
  return 0;
}

int cmd_verify(const Overrides& o, const std::string& ledger_path) {
  const RunConfig c = resolve_config(o, true);
  const BoundSuite suite = run_bound_suite(c);
  if (c.report_path)
    write_file(*c.report_path, [&](std::ostream& out) { write_bound_csv(out, c, suite); });
  if (!ledger_path.empty() && !suite.rows.empty())
    write_file(ledger_path, [&](std::ostream& out) { write_ledger_csv(out, suite.rows.front().report); });
  write_bound_table(std::cout, suite);
  return suite.violations == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ordinal regression with cumulative-sum perceptrons"};
  app.require_subcommand(1);

  Overrides train_o, predict_o, bench_o, verify_o;
  std::string predict_data, ledger_path;

  auto* train = app.add_subcommand("train", "train one model and report its MAE");
  add_common(train, train_o);
  train->add_option("--model", train_o.model, "where to write the model artifact");

  auto* predict = app.add_subcommand("predict", "predict ranks with a saved model");
  add_common(predict, predict_o);
  predict->add_option("--model", predict_o.model, "model artifact");
  predict->add_option("--data", predict_data, "dataset to predict (defaults to the config dataset)");

  auto* bench = app.add_subcommand("bench", "per-fold and aggregate MAE over partitions");
  add_common(bench, bench_o);

  auto* verify = app.add_subcommand("verify-bounds", "check mistake bounds on planted problems");
  add_common(verify, verify_o);
  verify->add_option("--ledger", ledger_path, "per-step ledger CSV for the first seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(train_o);
    if (*predict) return cmd_predict(predict_o, predict_data);
    if (*bench) return cmd_bench(bench_o);
    if (*verify) return cmd_verify(verify_o, ledger_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
