#include <random>

#include <doctest.h>

#include "convexpde/measures_ot.hpp"
#include "convexpde/transport_simplex.hpp"
#include "oracles.hpp"

using namespace cpde;

namespace {

DiscreteMeasure line(std::initializer_list<double> x, std::initializer_list<double> w) {
  Eigen::MatrixXd p(1, x.size());
  Eigen::VectorXd v(w.size());
  Eigen::Index i = 0;
  for (double a : x) p(0, i++) = a;
  i = 0;
  for (double a : w) v(i++) = a;
  return DiscreteMeasure(p, v);
}

DiscreteMeasure random_measure(std::mt19937_64& rng, int n, int d, bool integer_points) {
  std::uniform_real_distribution<double> u(-1, 1), wd(0.5, 1.5);
  std::uniform_int_distribution<int> iu(-20, 20);
  Eigen::MatrixXd x(d, n);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) x(k, i) = integer_points ? iu(rng) : u(rng);
    w(i) = wd(rng);
  }
  return DiscreteMeasure(x, w / w.sum());
}

}  // namespace

TEST_CASE("measure construction merges near duplicates and rejects bad weights") {
  Eigen::MatrixXd p(1, 3);
  p << 0.0, 1e-13, 1.0;
  DiscreteMeasure m(p, Eigen::Vector3d(0.2, 0.3, 0.5));
  CHECK(m.size() == 2);
  CHECK(m.weight(0) == doctest::Approx(0.5));
  CHECK(m.point(0)(0) == 0.0);
  CHECK(m.second_moment() == doctest::Approx(0.5));
  CHECK_THROWS_AS(DiscreteMeasure(p, Eigen::Vector3d(0.2, 0.0, 0.5)), InvalidMeasure);
  CHECK_THROWS_AS(DiscreteMeasure(p, Eigen::Vector2d(0.2, 0.5)), DimensionMismatch);
}

TEST_CASE("identity transport") {
  const DiscreteMeasure a = line({0, 1}, {1, 1});
  const OtSolution s = solve_discrete_ot(a, a);
  CHECK(s.plan.dense().isApprox(Eigen::Matrix2d::Identity()));
  CHECK(s.plan.quadratic_cost() == 0.0);
  // Young equality: J = sum w |x|^2
  CHECK(evaluate_J(s.potentials, a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(barycentric_map(s.plan).isApprox(a.points()));
}

TEST_CASE("two-point monotone matching") {
  const DiscreteMeasure a = line({0, 1}, {0.5, 0.5});
  const DiscreteMeasure b = line({2, 3}, {0.5, 0.5});
  const OtSolution s = solve_discrete_ot(a, b);
  Eigen::Matrix2d expect;
  expect << 0.5, 0, 0, 0.5;
  CHECK(s.plan.dense().isApprox(expect));
  CHECK(evaluate_J(s.potentials, a, b) == doctest::Approx(1.5).epsilon(1e-12));
  const Eigen::MatrixXd T = barycentric_map(s.plan);
  CHECK(T(0, 0) == doctest::Approx(2));
  CHECK(T(0, 1) == doctest::Approx(3));
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(solve_discrete_ot(line({0}, {1}), line({0}, {2})), MassMismatch);
  Eigen::MatrixXd p2(2, 1);
  p2 << 0, 0;
  CHECK_THROWS_AS(solve_discrete_ot(line({0}, {1}), DiscreteMeasure(p2, Eigen::VectorXd::Ones(1))),
                  DimensionMismatch);
  CHECK_THROWS_AS(legendre_transform(Eigen::MatrixXd(1, 0), Eigen::VectorXd(0), Eigen::MatrixXd::Zero(1, 1)),
                  EmptySupport);
}

TEST_CASE("random 1D instances match the sorted coupling and the permutation oracle") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + t % 6;
    const DiscreteMeasure a = random_measure(rng, n, 1, false);
    const DiscreteMeasure b = random_measure(rng, n, 1, false);
    const OtSolution s = solve_discrete_ot(a, b);
    std::vector<double> xa(a.points().data(), a.points().data() + a.size());
    std::vector<double> xb(b.points().data(), b.points().data() + b.size());
    std::vector<double> wa(a.weights().data(), a.weights().data() + a.size());
    std::vector<double> wb(b.weights().data(), b.weights().data() + b.size());
    CHECK(s.plan.quadratic_cost() == doctest::Approx(oracle::monotone_ot_cost_1d(xa, wa, xb, wb)).epsilon(1e-12));
    // barycentric map of a 1D optimal plan is nondecreasing
    const Eigen::MatrixXd T = barycentric_map(s.plan);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (a.point(i)(0) < a.point(j)(0)) CHECK(T(0, i) <= T(0, j) + 1e-12);
  }
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 5;
    Eigen::MatrixXd x(1, n), y(1, n);
    std::uniform_int_distribution<int> iu(-30, 30);
    for (int i = 0; i < n; ++i) {
      x(0, i) = iu(rng) + 0.5 * i;  // distinct atoms
      y(0, i) = iu(rng) + 0.25 * i;
    }
    const OtSolution s = solve_discrete_ot(DiscreteMeasure(x, Eigen::VectorXd::Ones(n)),
                                           DiscreteMeasure(y, Eigen::VectorXd::Ones(n)));
    CHECK(s.plan.quadratic_cost() == oracle::permutation_ot_cost(x, y));
  }
}

TEST_CASE("duality, slackness and cyclical monotonicity on random instances") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 40; ++t) {
    const int d = 1 + t % 3;
    const DiscreteMeasure a = random_measure(rng, 2 + t % 9, d, t % 4 == 0);
    const DiscreteMeasure b = random_measure(rng, 2 + (t * 7) % 9, d, t % 4 == 0);
    const OtSolution s = solve_discrete_ot(a, b);
    CHECK(s.plan.marginal_error() <= TransportPlan::kMarginalTolerance);
    CHECK(dual_feasibility_violation(s.potentials, a, b) <= 1e-9);
    CHECK(std::abs(evaluate_J(s.potentials, a, b) - s.plan.inner_product_value()) <= 1e-8);
    for (const auto& e : s.plan.entries())
      CHECK(std::abs(s.potentials.phi(e.source) + s.potentials.psi(e.target) -
                     a.point(e.source).dot(b.point(e.target))) <= 1e-8);
    const CycleReport c = check_cyclical_monotonicity(s.plan, 200, 4, 17 + t);
    CHECK(c.violations == 0);
    // any other feasible pair has a larger dual value
    PotentialSamples other = s.potentials;
    other.phi.array() += 0.3;
    other.phi(0) += 0.2;
    other.psi = legendre_transform(a.points(), other.phi, b.points());
    CHECK(evaluate_J(other, a, b) >= s.plan.inner_product_value() - 1e-12);
  }
}

TEST_CASE("non-affine bump on phi strictly increases J") {
  std::mt19937_64 rng(3);
  const DiscreteMeasure a = random_measure(rng, 8, 2, false);
  const DiscreteMeasure b = random_measure(rng, 8, 2, false);
  const OtSolution s = solve_discrete_ot(a, b);
  const double J0 = evaluate_J(s.potentials, a, b);
  PotentialSamples p = s.potentials;
  Eigen::VectorXd bump(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) bump(i) = std::exp(-a.point(i).squaredNorm() * 4.0);
  bump.array() -= a.weights().dot(bump) / a.total_mass();
  p.phi -= 0.05 * bump;
  p.psi = legendre_transform(a.points(), p.phi, b.points());
  CHECK(evaluate_J(p, a, b) > J0 + 1e-9);
}

TEST_CASE("evaluate_J rejects infeasible potentials") {
  const DiscreteMeasure a = line({0, 1}, {0.5, 0.5});
  const OtSolution s = solve_discrete_ot(a, a);
  PotentialSamples p = s.potentials;
  p.phi(1) -= 1.0;
  CHECK_THROWS_AS(evaluate_J(p, a, a), InfeasiblePotentials);
}

TEST_CASE("legendre transform examples") {
  Eigen::MatrixXd x(1, 3);
  x << -1, 0, 1;
  Eigen::MatrixXd q(1, 1);
  q << 2;
  CHECK(legendre_transform(x, Eigen::Vector3d::Zero(), q)(0) == 2.0);
  Eigen::MatrixXd one(1, 1);
  one << 3;
  Eigen::VectorXd phi1(1);
  phi1 << 7;
  q << 1;
  CHECK(legendre_transform(one, phi1, q)(0) == -4.0);
  // x^2 / 2 is self-dual
  const int n = 2001;
  Eigen::MatrixXd grid(1, n);
  Eigen::VectorXd phi(n);
  for (int i = 0; i < n; ++i) {
    grid(0, i) = -1.0 + 2.0 * i / (n - 1);
    phi(i) = 0.5 * grid(0, i) * grid(0, i);
  }
  q << 0.5;
  CHECK(legendre_transform(grid, phi, q)(0) == doctest::Approx(0.125).epsilon(1e-6));
}

TEST_CASE("pushforward residuals") {
  std::mt19937_64 rng(9);
  const DiscreteMeasure a = random_measure(rng, 6, 2, false);
  const DiscreteMeasure b = random_measure(rng, 5, 2, false);
  const OtSolution s = solve_discrete_ot(a, b);
  std::vector<TestFunction> fam{[](const Eigen::VectorXd&) { return 1.0; },
                                [](const Eigen::VectorXd& y) { return y.squaredNorm(); },
                                [](const Eigen::VectorXd& y) { return y(0); }};
  CHECK(pushforward_residual(s.plan, fam) <= 1e-12);
  // permutation plan: the barycentric map is exact
  Eigen::MatrixXd x(1, 4), y(1, 4);
  x << 0, 1, 2, 3;
  y << 5, -1, 2, 7;
  const OtSolution p = solve_discrete_ot(DiscreteMeasure::uniform(x), DiscreteMeasure::uniform(y));
  CHECK(pushforward_residual(p.plan, fam, PushforwardMode::BarycentricMap) <= 1e-12);
}

TEST_CASE("barycentric map of a split atom is the midpoint; empty rows throw") {
  const DiscreteMeasure a = line({0}, {1});
  const DiscreteMeasure b = line({0, 2}, {0.5, 0.5});
  TransportPlan plan(a, b, {{0, 0, 0.5}, {0, 1, 0.5}});
  CHECK(barycentric_map(plan)(0, 0) == doctest::Approx(1.0));
  const DiscreteMeasure two = line({0, 1}, {0.5, 0.5});
  TransportPlan gap(two, two, {{0, 0, 0.5}});
  CHECK_THROWS_AS(barycentric_map(gap), ZeroRowMass);
}

TEST_CASE("cyclical monotonicity detects a crossing plan") {
  const DiscreteMeasure a = line({0, 1}, {0.5, 0.5});
  const DiscreteMeasure b = line({2, 3}, {0.5, 0.5});
  TransportPlan crossed(a, b, {{0, 1, 0.5}, {1, 0, 0.5}});
  CHECK(check_cyclical_monotonicity(crossed, 100, 2, 1).violations > 0);
}

TEST_CASE("network simplex tree structure stays valid") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 30; ++t) {
    const DiscreteMeasure a = random_measure(rng, 3 + t % 10, 2, t % 3 == 0);
    const DiscreteMeasure b = random_measure(rng, 3 + (t * 5) % 10, 2, t % 3 == 0);
    detail::TransportSimplex s(a.points(), a.weights(), b.points(), b.weights());
    detail::TransportSimplex::Options o;
    o.validate = true;
    CHECK(s.run(o));
    CHECK(s.check_structure().empty());
    CHECK(s.min_reduced_cost() >= -1e-9 * s.cost_scale());
  }
}
