#include <doctest.h>

#include <algorithm>
#include <random>

#include "ordinal/ensemble.hpp"
#include "support.hpp"

using namespace ordinal;
using testing_support::d0;
using testing_support::random_dataset;

TEST_CASE("prediction counts non-negative levels") {
  CHECK(counting_predict(CountingModel(4, 3), Vector{1, 2, -1}) == 4);

  CountingModel low(3, 2);
  low.weights.level(2)[0] = -1;
  low.weights.level(3)[0] = -2;
  CHECK(counting_predict(low, Vector{1, -1}) == 1);
  CHECK_THROWS_AS(counting_predict(low, Vector{1, 2, 3}), Error);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int t = 0; t < 200; ++t) {
    const int r = 2 + t % 6;
    CountingModel m(r, 3);
    for (int k = 2; k <= r; ++k)
      for (auto& v : m.weights.level(k)) v = g(rng);
    const Vector x{g(rng), g(rng), -1};
    int count = 0;
    for (int k = 1; k <= r; ++k) {
      double s = 0;
      for (std::size_t i = 0; i < 3; ++i) s += m.weights.level(k)[i] * x[i];
      count += s >= 0;
    }
    const int yhat = counting_predict(m, x);
    CHECK(yhat == count);
    CHECK(yhat >= 1);
    CHECK(yhat <= r);
  }
}

TEST_CASE("D0 binary subtasks converge") {
  const auto fit = counting_fit_online(d0(), {100, true});
  for (int k = 2; k <= 3; ++k) CHECK(fit.level_converged[static_cast<std::size_t>(k - 1)]);
  for (const auto& ex : d0()) CHECK(counting_predict(fit.model, ex.x()) == ex.rank);
  CHECK(fit.model.weights.level_one_is_zero());
  CHECK(fit.level_mistakes[0] == 0);
}

TEST_CASE("each level is an ordinary perceptron on its own task") {
  std::mt19937_64 rng(2);
  const auto data = random_dataset(rng, 50, 4, 4);
  const auto fit = counting_fit_online(data, {3, false});
  for (int k = 2; k <= 4; ++k) {
    Vector w(4, 0.0);
    std::size_t mistakes = 0;
    for (int e = 0; e < 3; ++e)
      for (const auto& ex : data) {
        const double target = ex.rank >= k ? 1 : -1;
        if ((dot(w, ex.x()) >= 0 ? 1 : -1) != target) {
          ++mistakes;
          axpy(target, ex.x(), w);
        }
      }
    const auto got = fit.model.weights.level(k);
    CHECK(Vector(got.begin(), got.end()) == w);
    CHECK(fit.level_mistakes[static_cast<std::size_t>(k - 1)] == mistakes);
  }
}

TEST_CASE("a single-class dataset trains every level to reject") {
  std::mt19937_64 rng(3);
  auto base = random_dataset(rng, 30, 3, 3);
  std::vector<RankedExample> ex;
  for (const auto& e : base) ex.push_back({e.features, 1});
  const RankedDataset data(std::move(ex), 3);
  const auto fit = counting_fit_online(data, {1000, true});
  for (const auto& e : data) CHECK(counting_predict(fit.model, e.x()) == 1);
}

TEST_CASE("monotone violations") {
  CountingModel m(4, 2);
  m.weights.level(2)[0] = -1;  // off
  m.weights.level(3)[0] = 1;   // on again
  m.weights.level(4)[0] = -1;
  CHECK(monotone_violations(m, Vector{1, -1}) == 1);
  CHECK(monotone_violations(CountingModel(4, 2), Vector{1, -1}) == 0);

  std::mt19937_64 rng(4);
  const auto data = random_dataset(rng, 80, 3, 5);
  const auto fit = counting_fit_online(data, {5, false});
  for (const auto& e : data) {
    std::size_t expected = 0;
    for (int k = 2; k <= 5; ++k)
      expected += dot(fit.model.weights.level(k - 1), e.x()) < 0 && dot(fit.model.weights.level(k), e.x()) >= 0;
    CHECK(monotone_violations(fit.model, e.x()) == expected);
  }
}

TEST_CASE("models converted from PRank never violate monotonicity") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int t = 0; t < 50; ++t) {
    const int r = 2 + t % 6;
    PRankModel p(r, 2);
    for (auto& v : p.direction) v = g(rng);
    for (int k = 2; k <= r; ++k) p.thresholds[static_cast<std::size_t>(k - 1)] = g(rng);
    std::sort(p.thresholds.begin() + 1, p.thresholds.end());
    const auto c = counting_from_prank(p);
    for (int q = 0; q < 20; ++q) {
      const Vector z{g(rng), g(rng)};
      const Vector x{z[0], z[1], -1};
      CHECK(monotone_violations(c, x) == 0);
      CHECK(counting_predict(c, x) == prank_predict(p, z));
    }
  }
}
