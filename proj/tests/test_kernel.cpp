#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <random>
#include <tuple>

#include "ordinal/cusum.hpp"
#include "ordinal/kernel.hpp"
#include "ordinal/synthlab.hpp"
#include "support.hpp"

using namespace ordinal;
using testing_support::d0;
using testing_support::random_dataset;

namespace {

// Three concentric rings: rank grows with the distance from the origin.
RankedDataset rings() {
  std::vector<RankedExample> ex;
  const double radii[3] = {0.3, 1.0, 1.7};
  for (int ring = 0; ring < 3; ++ring)
    for (int a = 0; a < 12; ++a) {
      const double t = 2 * M_PI * a / 12 + 0.1 * ring;
      ex.push_back({{radii[ring] * std::cos(t), radii[ring] * std::sin(t), -1}, ring + 1});
    }
  return RankedDataset(std::move(ex), 3);
}

// w_k = sum_i beta_{i,k} x_i
CuSumModel primal_of(const DualCuSumModel& m) {
  CuSumModel out(m.rank_count(), m.dim());
  for (const auto& s : m.support())
    for (int k = 2; k <= m.rank_count(); ++k)
      axpy(s.beta[static_cast<std::size_t>(k - 2)], s.features, out.weights.level(k));
  return out;
}

}  // namespace

TEST_CASE("kernels are symmetric with a positive semidefinite Gram matrix") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (const Kernel& k : {Kernel::linear(), Kernel::polynomial(3, 1.0), Kernel::rbf(0.5)}) {
    std::vector<Vector> pts(25, Vector(4));
    for (auto& p : pts)
      for (auto& v : p) v = g(rng);
    Eigen::MatrixXd gram(25, 25);
    for (int i = 0; i < 25; ++i)
      for (int j = 0; j < 25; ++j) {
        gram(i, j) = k(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
        CHECK(gram(i, j) == k(pts[static_cast<std::size_t>(j)], pts[static_cast<std::size_t>(i)]));
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
  }
  const Vector a{1, 2}, b{3, -1};
  CHECK(Kernel::linear()(a, b) == 1.0);
  CHECK(Kernel::polynomial(2, 1.0)(a, b) == 4.0);
  CHECK(Kernel::rbf(0.5)(a, b) == doctest::Approx(std::exp(-0.5 * 13)));
  CHECK(Kernel::rbf(0.5)(a, a) == 1.0);
}

TEST_CASE("non-finite kernel values are rejected") {
  const Vector big{1e200, -1};
  CHECK_THROWS_AS(Kernel::polynomial(3, 1.0)(big, big), Error);
  DualCuSumModel m(3, 2, Kernel::polynomial(3, 1.0));
  m.add_entry({0, big, {1, 0}});
  CHECK_THROWS_AS(dual_predict(m, big), Error);
}

TEST_CASE("empty support predicts the lowest rank") {
  DualCuSumModel m(4, 3, Kernel::rbf(1.0));
  CHECK(dual_predict(m, Vector{1, 2, -1}) == 1);
  CHECK(m.scores(Vector{1, 2, -1}) == Vector(4, 0.0));
}

TEST_CASE("one rbf support point queried at itself") {
  DualCuSumModel m(4, 2, Kernel::rbf(2.0));
  const Vector x{0.5, -1};
  m.add_entry({0, x, {2, -1, -3}});
  CHECK(m.scores(x) == Vector{0, 2, 1, -2});
  CHECK(dual_predict(m, x) == 2);
}

TEST_CASE("a single mistake creates one support entry") {
  RankedDataset data({{{0.2, 0.4, -1}, 3}}, 4);
  const auto fit = dual_fit_online(data, Kernel::rbf(1.0));
  REQUIRE(fit.model.support().size() == 1);
  CHECK(fit.model.support()[0].example == 0);
  CHECK(fit.model.support()[0].beta == std::vector<int>{1, 1, 0});
}

TEST_CASE("linear dual matches the primal learner step for step") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 15; ++t) {
    const int r = 2 + t % 5;
    const std::size_t d = 2 + static_cast<std::size_t>(t % 4);
    const auto data = random_dataset(rng, 30, d, r);
    const auto primal = cusum_fit_online(data, {4, false, std::nullopt});

    const auto dual = dual_fit_online(data, Kernel::linear(), {4, false, true});
    REQUIRE(dual.trace.size() == primal.trace.size());
    for (std::size_t i = 0; i < dual.trace.size(); ++i) {
      CHECK(dual.trace.steps()[i].predicted == primal.trace.steps()[i].predicted);
      CHECK(dual.trace.steps()[i].cumulative_loss == primal.trace.steps()[i].cumulative_loss);
    }
    CHECK(dual.model.support().size() <= dual.trace.mistakes());
    const auto back = primal_of(dual.model);
    for (const auto& ex : data) {
      const auto s = dual.model.scores(ex.x());
      for (int k = 1; k <= r; ++k)
        CHECK(s[static_cast<std::size_t>(k - 1)] ==
              doctest::Approx(cusum_score(primal.model, ex.x(), k)).epsilon(1e-9).scale(1.0));
      CHECK(dual_predict(dual.model, ex.x()) == cusum_predict(primal.model, ex.x()));
    }
    for (std::size_t i = 0; i < back.weights.flat().size(); ++i)
      CHECK(back.weights.flat()[i] == doctest::Approx(primal.model.weights.flat()[i]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("linear dual converges on D0 in lockstep with the primal") {
  const auto dual = dual_fit_online(d0(), Kernel::linear(), {100, true, true});
  const auto primal = cusum_fit_online(d0(), {100, true, std::nullopt});
  REQUIRE(dual.trace.size() == primal.trace.size());
  for (std::size_t i = 0; i < dual.trace.size(); ++i)
    CHECK(dual.trace.steps()[i].predicted == primal.trace.steps()[i].predicted);
  for (const auto& ex : d0()) CHECK(dual_predict(dual.model, ex.x()) == ex.rank);
}

TEST_CASE("the kernel cache does not change the result") {
  std::mt19937_64 rng(3);
  const auto data = random_dataset(rng, 40, 3, 4);
  for (const Kernel& k : {Kernel::rbf(1.5), Kernel::polynomial(2, 1.0)}) {
    const auto a = dual_fit_online(data, k, {5, false, true});
    const auto b = dual_fit_online(data, k, {5, false, false});
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i)
      CHECK(a.trace.steps()[i].predicted == b.trace.steps()[i].predicted);
    REQUIRE(a.model.support().size() == b.model.support().size());
    for (std::size_t i = 0; i < a.model.support().size(); ++i)
      CHECK(a.model.support()[i].beta == b.model.support()[i].beta);
  }
}

TEST_CASE("structure-pair coefficients expand to the same scores as atom coefficients") {
  std::mt19937_64 rng(4);
  const auto data = random_dataset(rng, 25, 3, 5);
  const Kernel k = Kernel::rbf(0.8);
  const auto fit = dual_fit_online(data, k, {3, false, true});

  // alpha over (example, truth, predicted) triples, one per mistake.
  std::map<std::tuple<std::size_t, int, int>, int> alpha;
  for (const auto& s : fit.trace.steps())
    if (s.truth != s.predicted) ++alpha[{s.example, s.truth, s.predicted}];

  std::normal_distribution<double> g;
  for (int q = 0; q < 20; ++q) {
    const Vector x{g(rng), g(rng), -1};
    const auto atom = fit.model.scores(x);
    for (int level = 1; level <= 5; ++level) {
      // <Phi(x_i,a), Phi(x,level)> = min(a, level) K(x_i, x)
      double s = 0;
      for (const auto& [key, count] : alpha) {
        const auto& [i, y, yhat] = key;
        s += count * (std::min(y, level) - std::min(yhat, level)) * k(data[i].x(), x);
      }
      CHECK(atom[static_cast<std::size_t>(level - 1)] == doctest::Approx(s).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("rbf kernel fits rings that no linear rank model separates") {
  const auto data = rings();
  CHECK(grid_search_rank_margin(data, 72, 40, 2.0) <= 0.0);
  const auto fit = dual_fit_online(data, Kernel::rbf(2.0), {500, true, true});
  CHECK(fit.trace.epochs() < 500);
  for (const auto& ex : data) CHECK(dual_predict(fit.model, ex.x()) == ex.rank);
}
