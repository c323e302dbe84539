#include "ordinal/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "ordinal/cusum.hpp"
#include "ordinal/prank.hpp"

namespace ordinal {

namespace {

constexpr double kNormTolerance = 1e-9;
constexpr double kBoundTolerance = 1e-9;

// Level task "y >= k": +1 when y >= k.
int level_sign(int y, int k) { return y >= k ? 1 : -1; }

Vector sample_z(std::mt19937_64& rng, std::size_t dim, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector z(dim);
  for (double& v : z) v = normal(rng);
  const double n = std::sqrt(squared_norm(z));
  // Uniform radius rather than uniform volume, so that projections spread
  // over the whole threshold range.
  const double scale = n > 0.0 ? radius * unit(rng) / n : 0.0;
  for (double& v : z) v *= scale;
  return z;
}

Vector with_bias(const Vector& z) {
  Vector x(z);
  x.push_back(-1.0);
  return x;
}

void check_generator_args(std::size_t n, std::size_t d, int r, double delta, double radius) {
  if (!(delta > 0.0)) throw Error("generator: delta must be > 0");
  if (r < 2) throw Error("generator: need r >= 2");
  if (d < 2) throw Error("generator: need d >= 2");
  if (n < 1) throw Error("generator: need n >= 1");
  if (!(radius > 0.0)) throw Error("generator: radius must be > 0");
}

// Evenly spread, ascending thresholds for levels 2..r.
Vector spread_thresholds(int r, double half_width) {
  Vector b(static_cast<std::size_t>(r - 1));
  for (int k = 0; k < r - 1; ++k)
    b[static_cast<std::size_t>(k)] =
        r == 2 ? 0.0 : -half_width + 2.0 * half_width * k / static_cast<double>(r - 2);
  return b;
}

}  // namespace

PlantedProblem generate_rank_separable(std::uint64_t seed, std::size_t n, std::size_t d, int r,
                                       double delta, double radius) {
  check_generator_args(n, d, r, delta, radius);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Levels share a loose common direction with independent perturbations
  // and ascending biases, so consistent label patterns are common without
  // the levels being tied to one direction.
  const std::size_t zdim = d - 1;
  Vector common(zdim);
  for (double& v : common) v = normal(rng);
  const double cn = std::sqrt(squared_norm(common));
  for (double& v : common) v /= cn;
  const Vector biases = spread_thresholds(r, 0.3 * radius);

  WeightStack w(r, d);
  for (int k = 2; k <= r; ++k) {
    auto level = w.level(k);
    for (std::size_t j = 0; j < zdim; ++j)
      level[j] = common[j] + 0.5 * normal(rng) / std::sqrt(static_cast<double>(zdim));
    level[zdim] = biases[static_cast<std::size_t>(k - 2)];
  }
  const double wn = w.norm();
  for (double& v : w.flat()) v /= wn;

  std::vector<RankedExample> examples;
  examples.reserve(n);
  double min_margin = std::numeric_limits<double>::infinity();
  const std::size_t budget = 1000 * n;
  std::size_t draws = 0;
  while (examples.size() < n) {
    if (++draws > budget) throw Error("generate_rank_separable: rejection budget exhausted");
    const Vector x = with_bias(sample_z(rng, zdim, radius));
    // y = 1 + length of the leading run of positive levels; everything
    // after it must be negative, and every level clear of the margin.
    int y = 1;
    while (y < r && dot(w.level(y + 1), x) >= delta) ++y;
    bool ok = true;
    double local_min = std::numeric_limits<double>::infinity();
    for (int k = 2; k <= r && ok; ++k) {
      const double m = level_sign(y, k) * dot(w.level(k), x);
      if (m < delta) ok = false;
      local_min = std::min(local_min, m);
    }
    if (!ok) continue;
    min_margin = std::min(min_margin, local_min);
    examples.push_back({x, y});
  }

  PlantedProblem out{RankedDataset(std::move(examples), r), w, delta, min_margin, 0.0,
                     PlantedFamily::rank_separable, {}, {}};
  out.radius = out.dataset.radius();
  return out;
}

PlantedProblem generate_prank_separable(std::uint64_t seed, std::size_t n, std::size_t d, int r,
                                        double delta, double radius) {
  check_generator_args(n, d, r, delta, radius);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t zdim = d - 1;

  Vector u(zdim);
  for (double& v : u) v = normal(rng);
  const double un = std::sqrt(squared_norm(u));
  for (double& v : u) v /= un;
  Vector b = spread_thresholds(r, 0.35 * radius);
  const double norm = std::sqrt(squared_norm(u) + squared_norm(b));
  for (double& v : u) v /= norm;
  for (double& v : b) v /= norm;

  Vector thresholds(static_cast<std::size_t>(r));
  thresholds[0] = -std::numeric_limits<double>::infinity();
  std::copy(b.begin(), b.end(), thresholds.begin() + 1);

  std::vector<RankedExample> examples;
  examples.reserve(n);
  double min_margin = std::numeric_limits<double>::infinity();
  double max_z = 0.0;
  const std::size_t budget = 1000 * n;
  std::size_t draws = 0;
  while (examples.size() < n) {
    if (++draws > budget) throw Error("generate_prank_separable: rejection budget exhausted");
    const Vector z = sample_z(rng, zdim, radius);
    const double a = dot(u, z);
    int y = 1;
    while (y < r && a >= thresholds[static_cast<std::size_t>(y)]) ++y;
    double m = std::numeric_limits<double>::infinity();
    if (y > 1) m = std::min(m, a - thresholds[static_cast<std::size_t>(y - 1)]);
    if (y < r) m = std::min(m, thresholds[static_cast<std::size_t>(y)] - a);
    if (m < delta) continue;
    min_margin = std::min(min_margin, m);
    max_z = std::max(max_z, std::sqrt(squared_norm(z)));
    examples.push_back({with_bias(z), y});
  }

  WeightStack w(r, d);
  for (int k = 2; k <= r; ++k) {
    auto level = w.level(k);
    std::copy(u.begin(), u.end(), level.begin());
    level[zdim] = thresholds[static_cast<std::size_t>(k - 1)];
  }
  const double wn = w.norm();
  for (double& v : w.flat()) v /= wn;

  return PlantedProblem{RankedDataset(std::move(examples), r), w, delta, min_margin, max_z,
                        PlantedFamily::prank_separable, u, thresholds};
}

double rank_margin(const RankedDataset& data, const WeightStack& weights) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& ex : data)
    for (int k = 2; k <= data.rank_count(); ++k)
      m = std::min(m, level_sign(ex.rank, k) * dot(weights.level(k), ex.x()));
  return m;
}

SeparabilityReport check_rank_separable(const RankedDataset& data, const WeightStack& weights,
                                        double delta) {
  if (std::abs(weights.norm() - 1.0) > kNormTolerance)
    throw Error("check_rank_separable: weights must have unit norm");
  if (weights.levels() != data.rank_count() || weights.dim() != data.dim())
    throw Error("check_rank_separable: weight shape mismatch");
  SeparabilityReport rep;
  rep.slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& ex = data[i];
    for (int k = 2; k <= data.rank_count(); ++k) {
      const double slack = level_sign(ex.rank, k) * dot(weights.level(k), ex.x()) - delta;
      if (slack < rep.slack) rep = {false, i, k, slack};
    }
  }
  rep.separable = rep.slack >= 0.0;
  return rep;
}

LossAugmentedReport check_loss_augmented(const RankedDataset& data,
                                         const StructuredProblem& problem,
                                         std::span<const double> wbar, const LossFn& loss) {
  if (std::abs(std::sqrt(squared_norm(wbar)) - 1.0) > kNormTolerance)
    throw Error("check_loss_augmented: wbar must have unit norm");
  LossAugmentedReport rep;
  rep.slack = std::numeric_limits<double>::infinity();
  double r2 = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& ex = data[i];
    for (int other : problem.feasible_outputs(ex.x())) {
      if (other == ex.rank) continue;
      Vector diff = problem.feature_map(ex.x(), ex.rank);
      axpy(-1.0, problem.feature_map(ex.x(), other), diff);
      const double l = loss(ex.rank, other);
      r2 = std::max(r2, squared_norm(diff) / l);
      const double slack = dot(wbar, diff) - l;
      if (slack < rep.slack) {
        rep.slack = slack;
        rep.example = i;
        rep.output = other;
      }
    }
  }
  rep.separable = rep.slack >= -kBoundTolerance;
  rep.radius = std::sqrt(r2);
  return rep;
}

namespace {

void require_two_features(const RankedDataset& data) {
  if (data.dim() != 3) throw Error("grid search supports two features plus bias (d = 3)");
}

}  // namespace

double grid_search_rank_margin(const RankedDataset& data, int angle_steps, int bias_steps,
                               double bias_range) {
  require_two_features(data);
  double worst_level = std::numeric_limits<double>::infinity();
  for (int k = 2; k <= data.rank_count(); ++k) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < angle_steps; ++a) {
      const double theta = 2.0 * M_PI * a / angle_steps;
      for (int bi = 0; bi <= bias_steps; ++bi) {
        const double bias = -bias_range + 2.0 * bias_range * bi / bias_steps;
        const double norm = std::sqrt(1.0 + bias * bias);
        const double w[3] = {std::cos(theta) / norm, std::sin(theta) / norm, bias / norm};
        double m = std::numeric_limits<double>::infinity();
        for (const auto& ex : data)
          m = std::min(m, level_sign(ex.rank, k) * dot(w, ex.x()));
        best = std::max(best, m);
      }
    }
    worst_level = std::min(worst_level, best);
  }
  return worst_level;
}

double grid_search_prank_margin(const RankedDataset& data, int angle_steps, int bias_steps,
                                double bias_range) {
  require_two_features(data);
  const int r = data.rank_count();
  const int free = r - 1;  // b_2..b_r
  std::vector<int> idx(static_cast<std::size_t>(free), 0);
  double best = -std::numeric_limits<double>::infinity();
  Vector b(static_cast<std::size_t>(r));
  for (;;) {
    // Sorted threshold grid points only.
    if (std::is_sorted(idx.begin(), idx.end())) {
      b[0] = -std::numeric_limits<double>::infinity();
      double bn2 = 0.0;
      for (int k = 0; k < free; ++k) {
        b[static_cast<std::size_t>(k + 1)] = -bias_range + 2.0 * bias_range * idx[static_cast<std::size_t>(k)] / bias_steps;
        bn2 += b[static_cast<std::size_t>(k + 1)] * b[static_cast<std::size_t>(k + 1)];
      }
      const double norm = std::sqrt(1.0 + bn2);
      for (int a = 0; a < angle_steps; ++a) {
        const double theta = 2.0 * M_PI * a / angle_steps;
        const double u[2] = {std::cos(theta), std::sin(theta)};
        double m = std::numeric_limits<double>::infinity();
        for (const auto& ex : data) {
          const double p = dot(u, ex.z());
          const auto y = static_cast<std::size_t>(ex.rank);
          if (ex.rank > 1) m = std::min(m, (p - b[y - 1]) / norm);
          if (ex.rank < r) m = std::min(m, (b[y] - p) / norm);
        }
        best = std::max(best, m);
      }
    }
    int pos = 0;
    while (pos < free && ++idx[static_cast<std::size_t>(pos)] > bias_steps) idx[static_cast<std::size_t>(pos++)] = 0;
    if (pos == free) break;
  }
  return best;
}

std::string to_string(BoundLearner learner) {
  switch (learner) {
    case BoundLearner::cusum_vanilla: return "cusum-vanilla";
    case BoundLearner::cusum_pa: return "cusum-pa";
    case BoundLearner::prank: return "prank";
    case BoundLearner::engine_generic: return "engine-generic";
  }
  return "?";
}

BoundLearner bound_learner_from_string(const std::string& name) {
  for (auto l : {BoundLearner::cusum_vanilla, BoundLearner::cusum_pa, BoundLearner::prank,
                 BoundLearner::engine_generic})
    if (to_string(l) == name) return l;
  throw Error("unknown bound learner '" + name + "'");
}

BoundLedger BoundLedger::make(BoundLearner learner, double radius, double delta, int rank_count) {
  BoundLedger l;
  l.radius = radius;
  l.delta = delta;
  l.rank_count = rank_count;
  const double r2 = radius * radius;
  const double levels = rank_count - 1;
  l.bound_C1 = r2 / (delta * delta);
  l.bound_C3 = r2 / (delta * delta);
  l.bound_C4 = r2 / (delta * delta * delta * delta);
  switch (learner) {
    case BoundLearner::cusum_vanilla:
    case BoundLearner::engine_generic:
      // l = delta |y-y'|: |dPhi|^2 = |y-y'| |x|^2 <= l R^2 / delta.
      l.bound_T1 = r2 / delta;
      break;
    case BoundLearner::cusum_pa:
      // l = delta 1[y!=y']: |dPhi|^2 <= (r-1) |x|^2 <= l (r-1) R^2 / delta.
      l.bound_T1 = levels * r2 / delta;
      break;
    case BoundLearner::prank:
      // l = delta |y-y'|: |dPhi|^2 <= |y-y'| (r-1) (|z|^2 + 1).
      l.bound_T1 = levels * (r2 + 1.0) / delta;
      l.bound_C1 = levels * (r2 + 1.0) / (delta * delta);
      break;
  }
  return l;
}

bool BoundReport::passed() const {
  return separable && std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.holds; });
}

namespace {

struct PrefixCheck {
  BoundCheck check;
  double running = 0.0;

  void add(double amount, std::size_t step) {
    running += amount;
    check.value = running;
    if (check.holds && running > check.bound + kBoundTolerance) {
      check.holds = false;
      check.violation_step = step;
    }
  }
};

}  // namespace

BoundReport verify_bounds(const PlantedProblem& problem, BoundLearner learner,
                          const VerifyOptions& options) {
  const auto& data = problem.dataset;
  const int r = data.rank_count();
  BoundReport report;
  report.learner = learner;

  // Separability margin relevant to the learner's family.
  double delta = problem.margin;
  if (learner == BoundLearner::prank) {
    report.separable = problem.family == PlantedFamily::prank_separable &&
                       prank_margin_check(data, problem.prank_direction,
                                          problem.prank_thresholds, delta);
  } else {
    if (problem.family == PlantedFamily::prank_separable)
      delta = rank_margin(data, problem.planted_weights);
    report.separable = delta > 0.0 && check_rank_separable(data, problem.planted_weights, delta).separable;
  }
  if (learner == BoundLearner::cusum_pa && delta > 1.0)
    throw Error("the PA absolute-loss bound R^2/delta^4 is only checked for delta <= 1");

  report.ledger = BoundLedger::make(learner, problem.radius, delta, r);
  if (!report.separable) return report;

  CuSumFitOptions fit_options{options.max_epochs, true, options.flip_update};
  switch (learner) {
    case BoundLearner::cusum_vanilla:
      report.trace = cusum_fit_online(data, fit_options).trace;
      break;
    case BoundLearner::cusum_pa:
      report.trace = cusum_fit_pa(data, delta, fit_options).trace;
      break;
    case BoundLearner::prank:
      report.trace = prank_fit_online(data, {options.max_epochs, true}).trace;
      break;
    case BoundLearner::engine_generic: {
      CuSumProblem sp(r, data.dim());
      TrainOptions t;
      t.epochs = options.max_epochs;
      t.stop_when_clean = true;
      report.trace = sp_train_online(sp, data, t).trace;
      break;
    }
  }
  report.epochs_run = report.trace.epochs();
  report.converged = report.epochs_run < options.max_epochs ||
                     (!report.trace.steps().empty() &&
                      std::none_of(report.trace.steps().end() - static_cast<std::ptrdiff_t>(data.size()),
                                   report.trace.steps().end(),
                                   [](const StepRecord& s) { return s.truth != s.predicted; }));

  auto& led = report.ledger;
  std::vector<PrefixCheck> checks;
  auto add = [&](const std::string& name, double bound) {
    checks.push_back({BoundCheck{name, 0.0, bound, true, std::nullopt}, 0.0});
  };
  // Index order matters below.
  const bool pa = learner == BoundLearner::cusum_pa;
  add(pa ? "T2" : "T1", led.bound_T1);
  if (pa) {
    add("C4", led.bound_C4);
  } else if (learner == BoundLearner::prank) {
    add("C1-prank", led.bound_C1);
  } else {
    add("C1", led.bound_C1);
    add("C3", led.bound_C3);
  }

  for (const auto& s : report.trace.steps()) {
    const int dist = absolute_loss(s.truth, s.predicted);
    const bool mistake = dist != 0;
    const double bound_loss = pa ? (mistake ? delta : 0.0) : delta * dist;
    led.cumulative_loss += dist;
    led.cumulative_squared_loss += bound_loss * bound_loss;
    if (mistake) ++led.mistakes;
    checks[0].add(pa ? bound_loss * bound_loss : bound_loss, s.visit);
    if (pa) {
      checks[1].add(dist, s.visit);
    } else if (learner == BoundLearner::prank) {
      checks[1].add(mistake ? 1.0 : 0.0, s.visit);
    } else {
      checks[1].add(mistake ? 1.0 : 0.0, s.visit);
      checks[2].add(dist, s.visit);
    }
  }
  for (auto& c : checks) report.checks.push_back(c.check);
  return report;
}

void write_ledger_csv(std::ostream& out, const BoundReport& report) {
  const auto& led = report.ledger;
  out << "step,cumulative_abs_loss,mistakes,bound_T1,bound_C1,bound_C3,bound_C4\n";
  double cum = 0.0;
  std::size_t mistakes = 0;
  char buf[256];
  for (const auto& s : report.trace.steps()) {
    cum += absolute_loss(s.truth, s.predicted);
    if (s.truth != s.predicted) ++mistakes;
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%zu,%.17g,%.17g,%.17g,%.17g\n", s.visit, cum,
                  mistakes, led.bound_T1, led.bound_C1, led.bound_C3, led.bound_C4);
    out << buf;
  }
}

}  // namespace ordinal
