#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ordinal/cusum.hpp"
#include "ordinal/synthlab.hpp"
#include "support.hpp"

using namespace ordinal;
using testing_support::d0;
using testing_support::random_dataset;

namespace {

WeightStack d0_unit_separator() {
  WeightStack w(3, 3);
  const Vector w2{1, 1, 0.5}, w3{1, -1, 0.5};
  std::copy(w2.begin(), w2.end(), w.level(2).begin());
  std::copy(w3.begin(), w3.end(), w.level(3).begin());
  const double n = w.norm();
  for (auto& v : w.flat()) v /= n;
  return w;
}

}  // namespace

TEST_CASE("generated problems pass their own check") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = generate_rank_separable(seed, 100, 6, 4, 0.1, 1.0);
    CHECK(p.dataset.size() == 100);
    CHECK(p.planted_weights.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.planted_weights.level_one_is_zero());
    CHECK(check_rank_separable(p.dataset, p.planted_weights, 0.1).separable);
    CHECK(p.empirical_margin >= 0.1);
    CHECK(p.empirical_margin == doctest::Approx(rank_margin(p.dataset, p.planted_weights)));
    CHECK(p.radius == doctest::Approx(p.dataset.radius()));
    for (const auto& ex : p.dataset) CHECK(ex.features.back() == -1.0);
  }
}

TEST_CASE("generators are pure functions of the seed") {
  const auto a = generate_rank_separable(7, 50, 4, 3, 0.1, 1.0);
  const auto b = generate_rank_separable(7, 50, 4, 3, 0.1, 1.0);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(a.dataset[i].features == b.dataset[i].features);
    CHECK(a.dataset[i].rank == b.dataset[i].rank);
  }
}

TEST_CASE("a problem generated at 0.3 fails the check just above its empirical margin") {
  const auto p = generate_rank_separable(3, 60, 3, 3, 0.3, 1.0);
  CHECK(check_rank_separable(p.dataset, p.planted_weights, 0.3).separable);
  CHECK_FALSE(check_rank_separable(p.dataset, p.planted_weights, p.empirical_margin + 1e-9).separable);
  CHECK_FALSE(check_rank_separable(p.dataset, p.planted_weights, 0.31).separable);
}

TEST_CASE("generator argument errors") {
  CHECK_THROWS_AS(generate_rank_separable(1, 10, 3, 3, 0.0, 1.0), Error);
  CHECK_THROWS_AS(generate_rank_separable(1, 10, 3, 1, 0.1, 1.0), Error);
  CHECK_THROWS_AS(generate_rank_separable(1, 10, 1, 3, 0.1, 1.0), Error);
  CHECK_THROWS_AS(generate_rank_separable(1, 10, 3, 3, 5.0, 1.0), Error);
}

TEST_CASE("D0 with the normalized separator") {
  const auto w = d0_unit_separator();
  const double delta = 0.5 / std::sqrt(4.5);
  const auto rep = check_rank_separable(d0(), w, delta);
  CHECK(rep.separable);
  CHECK(rep.slack == doctest::Approx(0.0).scale(1.0));
  CHECK(rank_margin(d0(), w) == doctest::Approx(delta));
  CHECK_FALSE(check_rank_separable(d0(), w, delta + 1e-6).separable);
}

TEST_CASE("separability check errors and trivial cases") {
  WeightStack zero(3, 3);
  CHECK_THROWS_AS(check_rank_separable(d0(), zero, 0.1), Error);
  WeightStack loose(3, 3);
  loose.level(2)[0] = 2;
  CHECK_THROWS_AS(check_rank_separable(d0(), loose, 0.1), Error);
}

TEST_CASE("D0 is rank separable but not PRank separable on the grid") {
  CHECK(grid_search_rank_margin(d0(), 360, 100, 2.0) > 0.0);
  CHECK(grid_search_prank_margin(d0(), 360, 100, 2.0) <= 0.0);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(grid_search_rank_margin(random_dataset(rng, 5, 4, 3), 8, 8, 1.0), Error);
}

TEST_CASE("loss-augmented separability of the CuSum instance") {
  const double delta = 0.1;
  const auto p = generate_rank_separable(11, 80, 5, 4, delta, 1.0);
  CuSumProblem sp(4, 5);
  const auto& w = p.planted_weights.flat();
  const auto rep = check_loss_augmented(p.dataset, sp, w, LossFn::scaled_absolute(delta));
  CHECK(rep.separable);
  CHECK(rep.radius * rep.radius == doctest::Approx(p.radius * p.radius / delta).epsilon(1e-9));

  const auto huge = check_loss_augmented(p.dataset, sp, w, LossFn::scaled_zero_one(1e6));
  CHECK_FALSE(huge.separable);
  CHECK(huge.slack < 0);
  CHECK_THROWS_AS(check_loss_augmented(p.dataset, sp, Vector(w.size(), 0.0), LossFn::absolute()), Error);
}

TEST_CASE("loss-augmented boundary case") {
  // One example, r = 2: the only wrong output gives dPhi = (0, x).
  RankedDataset data({{{2, -1}, 2}}, 2);
  CuSumProblem sp(2, 2);
  const Vector wbar{0, 0, 0.6, -0.8};
  const double margin = 0.6 * 2 + 0.8;
  const auto exact = check_loss_augmented(data, sp, wbar, LossFn::scaled_zero_one(margin));
  CHECK(exact.separable);
  CHECK(exact.slack == doctest::Approx(0.0).scale(1.0));
  CHECK_FALSE(check_loss_augmented(data, sp, wbar, LossFn::scaled_zero_one(margin + 1e-6)).separable);
}

TEST_CASE("bound ledger constants depend only on R, delta and r") {
  const auto v = BoundLedger::make(BoundLearner::cusum_vanilla, 2.0, 0.5, 4);
  CHECK(v.bound_T1 == doctest::Approx(8.0));
  CHECK(v.bound_C1 == doctest::Approx(16.0));
  CHECK(v.bound_C3 == doctest::Approx(16.0));
  CHECK(v.bound_C4 == doctest::Approx(64.0));
  const auto pa = BoundLedger::make(BoundLearner::cusum_pa, 2.0, 0.5, 4);
  CHECK(pa.bound_T1 == doctest::Approx(24.0));
  const auto pr = BoundLedger::make(BoundLearner::prank, 2.0, 0.5, 4);
  CHECK(pr.bound_C1 == doctest::Approx(3 * 5 / 0.25));
  CHECK(bound_learner_from_string(to_string(BoundLearner::cusum_pa)) == BoundLearner::cusum_pa);
  CHECK_THROWS_AS(bound_learner_from_string("svm"), Error);
}

TEST_CASE("bounds hold on planted problems") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto p = generate_rank_separable(seed, 200, 10, 5, 0.1, 1.0);
    for (auto learner : {BoundLearner::cusum_vanilla, BoundLearner::cusum_pa, BoundLearner::engine_generic}) {
      const auto rep = verify_bounds(p, learner);
      CHECK(rep.separable);
      CHECK(rep.converged);
      CHECK(rep.passed());
      CHECK(static_cast<double>(rep.ledger.mistakes) <= rep.ledger.cumulative_loss);
      for (const auto& c : rep.checks) CHECK(c.value <= c.bound);
    }
    const auto q = generate_prank_separable(seed, 200, 10, 5, 0.1, 1.0);
    const auto rep = verify_bounds(q, BoundLearner::prank);
    CHECK(rep.separable);
    CHECK(rep.passed());
  }
}

TEST_CASE("bound values are prefix monotone in the exported ledger") {
  const auto p = generate_rank_separable(2, 100, 5, 4, 0.1, 1.0);
  const auto rep = verify_bounds(p, BoundLearner::cusum_vanilla);
  std::ostringstream out;
  write_ledger_csv(out, rep);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("step,", 0) == 0);
  double last_loss = 0, last_mistakes = 0;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    double step, loss, mistakes;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &step, &loss, &mistakes) == 3);
    CHECK(loss >= last_loss);
    CHECK(mistakes >= last_mistakes);
    CHECK(mistakes <= loss);
    last_loss = loss;
    last_mistakes = mistakes;
    ++rows;
  }
  CHECK(rows == rep.trace.size());
}

TEST_CASE("unseparable data is reported, not asserted") {
  std::mt19937_64 rng(5);
  auto p = generate_rank_separable(5, 50, 3, 3, 0.1, 1.0);
  p.dataset = random_dataset(rng, 50, 3, 3);
  const auto rep = verify_bounds(p, BoundLearner::cusum_vanilla);
  CHECK_FALSE(rep.separable);
  CHECK_FALSE(rep.passed());
  CHECK(rep.checks.empty());
  CHECK(rep.trace.size() == 0);
}

TEST_CASE("the PA absolute-loss bound is refused for delta above one") {
  auto p = generate_rank_separable(1, 20, 3, 3, 0.1, 1.0);
  p.margin = 2.0;
  CHECK_THROWS_AS(verify_bounds(p, BoundLearner::cusum_pa), Error);
}

TEST_CASE("a violated bound reports its first violating step") {
  auto p = generate_rank_separable(1, 30, 2, 3, 0.2, 1.0);
  const auto honest = verify_bounds(p, BoundLearner::cusum_vanilla);
  REQUIRE(honest.passed());
  std::size_t first_mistake = 0;
  for (const auto& s : honest.trace.steps())
    if (s.truth != s.predicted) {
      first_mistake = s.visit;
      break;
    }
  p.radius = 0.01;  // understated radius: every bound collapses below one mistake
  const auto rep = verify_bounds(p, BoundLearner::cusum_vanilla);
  CHECK_FALSE(rep.passed());
  for (const auto& c : rep.checks) {
    CHECK_FALSE(c.holds);
    REQUIRE(c.violation_step.has_value());
    CHECK(*c.violation_step == first_mistake);
  }
}

TEST_CASE("a flipped update perturbs the run") {
  const auto p = generate_rank_separable(1, 30, 2, 3, 0.2, 1.0);
  const auto base = verify_bounds(p, BoundLearner::cusum_vanilla);
  const auto flipped = verify_bounds(p, BoundLearner::cusum_vanilla, {1000, 0});
  bool differs = base.trace.size() != flipped.trace.size();
  for (std::size_t i = 0; !differs && i < base.trace.size(); ++i)
    differs = base.trace.steps()[i].predicted != flipped.trace.steps()[i].predicted;
  CHECK(differs);
  CHECK(flipped.separable);
}
