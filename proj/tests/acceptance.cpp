// Acceptance checks 1-6, 8 and 9. Prints one PASS/FAIL line per criterion
// and exits nonzero when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>

#include "ordinal/bench.hpp"
#include "ordinal/cusum.hpp"
#include "ordinal/features.hpp"
#include "ordinal/kernel.hpp"
#include "ordinal/prank.hpp"
#include "ordinal/synthlab.hpp"

using namespace ordinal;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = ORDINAL_SOURCE_DIR;
const fs::path kCli = ORDINAL_CLI;

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void guarded(int id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("error: ") + e.what());
  }
}

RankedDataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t d, int r) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> rank(1, r);
  std::vector<RankedExample> ex;
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(d);
    for (std::size_t j = 0; j + 1 < d; ++j) x[j] = u(rng);
    x[d - 1] = -1.0;
    ex.push_back({x, rank(rng)});
  }
  return RankedDataset(std::move(ex), r);
}

RankedDataset d0() {
  return RankedDataset({{{0, 0, -1}, 1}, {{0, 1, -1}, 2}, {{1, 1, -1}, 2}, {{1, 0, -1}, 3}}, 3);
}

std::string check_summary(const BoundSuite& suite, const std::string& name) {
  double worst = 0;
  for (const auto& row : suite.rows)
    for (const auto& c : row.report.checks)
      if (c.name == name && c.bound > 0) worst = std::max(worst, c.value / c.bound);
  char buf[96];
  std::snprintf(buf, sizeof buf, "max %s value/bound %.4f", name.c_str(), worst);
  return buf;
}

bool all_hold(const BoundSuite& suite, const std::string& name) {
  for (const auto& row : suite.rows) {
    if (!row.report.separable) return false;
    bool found = false;
    for (const auto& c : row.report.checks)
      if (c.name == name) {
        found = true;
        if (!c.holds) return false;
      }
    if (!found) return false;
  }
  return suite.violations == 0;
}

void bound_criteria() {
  guarded(1, [] {
    const auto config = load_config(kSource / "configs" / "verify-bounds.toml");
    const auto start = std::chrono::steady_clock::now();
    const auto suite = run_bound_suite(config);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool ok = suite.rows.size() == 100 && all_hold(suite, "C3") && secs < 60.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu problems, %zu violations, %s, %.2f s", suite.rows.size(),
                  suite.violations, check_summary(suite, "C3").c_str(), secs);
    report(1, ok, buf);
  });
  guarded(2, [] {
    auto config = load_config(kSource / "configs" / "verify-bounds.toml");
    config.bound_learner = "cusum-pa";
    const auto suite = run_bound_suite(config);
    bool converged = true;
    for (const auto& row : suite.rows) converged = converged && row.report.converged;
    const bool ok = suite.rows.size() == 100 && converged && all_hold(suite, "C4") && all_hold(suite, "T2");
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu problems, all converged: %s, %zu violations, %s", suite.rows.size(),
                  converged ? "yes" : "no", suite.violations, check_summary(suite, "C4").c_str());
    report(2, ok, buf);
  });
  guarded(3, [] {
    const auto config = load_config(kSource / "configs" / "verify-bounds-prank.toml");
    const auto suite = run_bound_suite(config);
    const bool ok = suite.rows.size() == 100 && all_hold(suite, "C1-prank");
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu problems, %zu violations, %s", suite.rows.size(), suite.violations,
                  check_summary(suite, "C1-prank").c_str());
    report(3, ok, buf);
  });
}

void d0_criterion() {
  guarded(4, [] {
    const auto data = d0();
    const auto cusum = cusum_fit_online(data, {100, true, std::nullopt});
    const auto prank = prank_fit_online(data, {10000, false});
    std::vector<int> truth, pc, pp;
    for (const auto& ex : data) {
      truth.push_back(ex.rank);
      pc.push_back(cusum_predict(cusum.model, ex.x()));
      pp.push_back(prank_predict(prank.model, ex.z()));
    }
    const double mc = mean_absolute_error(truth, pc), mp = mean_absolute_error(truth, pp);
    char buf[160];
    std::snprintf(buf, sizeof buf, "CuSum train MAE %.4f after %zu epochs; PRank train MAE %.4f after %zu epochs",
                  mc, cusum.trace.epochs(), mp, prank.trace.epochs());
    report(4, mc == 0.0 && cusum.trace.epochs() <= 100 && mp > 0.0 && prank.trace.epochs() == 10000, buf);
  });
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

void equivalence_criterion() {
  guarded(5, [] {
    std::mt19937_64 rng(2024);
    std::size_t mismatches = 0, steps = 0;
    for (int t = 0; t < 20; ++t) {
      const int r = 2 + t % 5;                               // 2..6
      const std::size_t d = 2 + static_cast<std::size_t>(t % 7);  // 2..8
      const std::size_t n = 20 + static_cast<std::size_t>(t) % 31;  // <= 50
      const auto data = random_dataset(rng, n, d, r);
      const std::size_t epochs = 4;
      TrainOptions opts;
      opts.epochs = epochs;

      CuSumProblem cp(r, d);
      const auto fig1 = cusum_fit_online(data, {epochs, false, std::nullopt});
      const auto eng1 = sp_train_online(cp, data, opts);
      for (std::size_t i = 0; i < fig1.trace.size(); ++i, ++steps)
        mismatches += fig1.trace.steps()[i].predicted != eng1.trace.steps()[i].predicted;
      for (const auto& ex : data)
        for (int k = 1; k <= r; ++k)
          mismatches += !close(cusum_score(fig1.model, ex.x(), k), cp.score(eng1.weights, ex.x(), k));

      const double delta = 0.1;
      TrainOptions pa = opts;
      pa.rule = UpdateRule::passive_aggressive(LossFn::scaled_zero_one(delta));
      const auto fig2 = cusum_fit_pa(data, delta, {epochs, false, std::nullopt});
      const auto eng2 = sp_train_online(cp, data, pa);
      for (std::size_t i = 0; i < fig2.trace.size(); ++i, ++steps)
        mismatches += fig2.trace.steps()[i].predicted != eng2.trace.steps()[i].predicted;
      for (const auto& ex : data)
        for (int k = 1; k <= r; ++k)
          mismatches += !close(cusum_score(fig2.model, ex.x(), k), cp.score(eng2.weights, ex.x(), k));

      PRankProblem pp(r, d);
      const auto direct = prank_fit_online(data, {epochs, false});
      const auto eng3 = sp_train_online(pp, data, opts);
      for (std::size_t i = 0; i < direct.trace.size(); ++i, ++steps)
        mismatches += direct.trace.steps()[i].predicted != eng3.trace.steps()[i].predicted;
      const Vector wd = pp.to_weights(direct.model);
      for (const auto& ex : data)
        for (int k = 1; k <= r; ++k)
          mismatches += !close(pp.score(wd, ex.x(), k), pp.score(eng3.weights, ex.x(), k));

      const auto dual = dual_fit_online(data, Kernel::linear(), {epochs, false, true});
      for (std::size_t i = 0; i < dual.trace.size(); ++i, ++steps)
        mismatches += dual.trace.steps()[i].predicted != fig1.trace.steps()[i].predicted;
      for (const auto& ex : data) {
        const auto s = dual.model.scores(ex.x());
        for (int k = 1; k <= r; ++k)
          mismatches += !close(s[static_cast<std::size_t>(k - 1)], cusum_score(fig1.model, ex.x(), k));
      }
      mismatches += fig1.trace.size() != eng1.trace.size() || fig2.trace.size() != eng2.trace.size() ||
                    direct.trace.size() != eng3.trace.size() || dual.trace.size() != fig1.trace.size();
    }
    report(5, mismatches == 0,
           std::to_string(steps) + " paired steps over 20 datasets, " + std::to_string(mismatches) + " mismatches");
  });
}

void gradient_criterion() {
  guarded(6, [] {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g;
    double worst = 0;
    for (int net = 0; net < 20; ++net) {
      const std::size_t d = 2 + static_cast<std::size_t>(net % 4), h = 2 + static_cast<std::size_t>(net % 5);
      MLPRegressor m(d, h, net % 2 ? Activation::tanh : Activation::relu);
      mlp_initialize(m, static_cast<std::uint64_t>(net));
      std::vector<Vector> rows(10, Vector(d));
      Vector t(10);
      for (auto& r : rows)
        for (auto& v : r) v = g(rng);
      for (auto& v : t) v = g(rng);
      const auto lg = mlp_loss_gradient(m, rows, t);
      const auto base = mlp_parameters(m);
      for (std::size_t i = 0; i < base.size(); ++i) {
        auto p = base;
        p[i] = base[i] + 1e-5;
        mlp_set_parameters(m, p);
        const double up = mlp_loss_gradient(m, rows, t).loss;
        p[i] = base[i] - 1e-5;
        mlp_set_parameters(m, p);
        const double down = mlp_loss_gradient(m, rows, t).loss;
        const double fd = (up - down) / 2e-5;
        const double denom = std::max({std::abs(fd), std::abs(lg.gradient[i]), 1e-6});
        worst = std::max(worst, std::abs(fd - lg.gradient[i]) / denom);
      }
      mlp_set_parameters(m, base);
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "20 networks, max relative error %.3g", worst);
    report(6, worst < 1e-4, buf);
  });
}

void threshold_criterion() {
  guarded(8, [] {
    std::mt19937_64 rng(8);
    std::size_t runs = 0, checks = 0, violations = 0;
    auto run = [&](const RankedDataset& data, std::size_t epochs) {
      try {
        const auto fit = prank_fit_online(data, {epochs, false});
        checks += fit.order_checks;
        violations += !fit.model.thresholds_sorted();
      } catch (const std::logic_error&) {
        ++violations;
      }
      ++runs;
    };
    for (int t = 0; t < 100; ++t)
      run(random_dataset(rng, 60, 2 + static_cast<std::size_t>(t % 8), 2 + t % 9), 20);
    for (std::uint64_t seed = 1; seed <= 100; ++seed)
      run(generate_prank_separable(seed, 200, 10, 5, 0.1, 1.0).dataset, 50);
    run(d0(), 10000);
    report(8, violations == 0,
           std::to_string(runs) + " runs, " + std::to_string(checks) + " in-loop order checks, " +
               std::to_string(violations) + " violations");
  });
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism_criterion() {
  guarded(9, [] {
    const auto dir = fs::temp_directory_path() / "ordinal_acceptance";
    fs::create_directories(dir);
    const auto small_bench = dir / "machine-small.toml";
    std::ofstream(small_bench) << "dataset = \"" << (kSource / "data" / "machine.data").string() << "\"\n"
                               << "binning = \"equal-width\"\nnormalization = [standardize, minmax]\n"
                               << "epochs = [5, 20]\naveraging = true\nfeatures = true\nhidden = 8\n"
                               << "feature_max_epochs = 100\npartitions = 4\ntrain_size = 150\n"
                               << "threads = 3\nseed = 4\n";
    const std::string d0cfg = (kSource / "configs" / "d0.toml").string();
    const std::string d0data = (kSource / "data" / "d0.data").string();
    const std::string bounds = (kSource / "configs" / "verify-bounds.toml").string();

    struct Command {
      std::string name, args;
    };
    const std::vector<Command> commands = {
        {"train", "train --config \"" + d0cfg + "\" --model \"" + (dir / "m.model").string() + "\""},
        {"predict", "predict --config \"" + d0cfg + "\" --model \"" + (dir / "m.model").string() +
                        "\" --data \"" + d0data + "\""},
        {"bench", "bench --config \"" + small_bench.string() + "\""},
        {"verify-bounds", "verify-bounds --config \"" + bounds + "\" --algo cusum-pa"},
    };
    std::string detail;
    bool ok = true;
    for (const auto& c : commands) {
      std::string outputs[2];
      for (int rep = 0; rep < 2; ++rep) {
        const auto csv = dir / (c.name + std::to_string(rep) + ".csv");
        fs::remove(csv);
        const std::string cmd = "\"" + kCli.string() + "\" " + c.args + " --report \"" + csv.string() +
                                "\" > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        if (status != 0) {
          ok = false;
          detail += c.name + " exited " + std::to_string(status) + "; ";
        }
        outputs[rep] = slurp(csv);
      }
      const bool same = !outputs[0].empty() && outputs[0] == outputs[1];
      ok = ok && same;
      detail += c.name + (same ? " identical" : " differs") + "; ";
    }
    detail.resize(detail.size() - 2);
    report(9, ok, detail);
  });
}

}  // namespace

int main() {
  bound_criteria();
  d0_criterion();
  equivalence_criterion();
  gradient_criterion();
  threshold_criterion();
  determinism_criterion();
  return failures == 0 ? 0 : 1;
}
