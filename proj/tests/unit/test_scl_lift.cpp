#include <random>

#include <doctest.h>

#include "convexpde/pav.hpp"
#include "convexpde/scl_lift.hpp"
#include "convexpde/scl_reference.hpp"
#include "oracles.hpp"

using namespace cpde;

TEST_CASE("flux laws") {
  const FluxLaw b = FluxLaw::burgers();
  CHECK(b.F(1.0) == 0.5);
  CHECK(b.Fprime(0.3) == doctest::Approx(0.3));
  CHECK(b.lipschitz_bound() == 1.0);
  CHECK(b.godunov(1.0, 0.0) == 0.5);   // shock: max over [0, 1]
  CHECK(b.godunov(0.0, 1.0) == 0.0);   // fan: min over [0, 1]
  const FluxLaw cc = FluxLaw::parse("concave-convex -2 3 0");
  CHECK(cc.F(0.5) == doctest::Approx(-0.25 + 0.75));
  const Eigen::VectorXd s = cc.derivative_samples(Eigen::VectorXd::LinSpaced(101, 0, 1));
  CHECK(s.cwiseAbs().maxCoeff() <= cc.lipschitz_bound() + 1e-12);
  CHECK(FluxLaw::parse("linear 0.5").is_linear());
  CHECK_THROWS(FluxLaw::parse("cubic"));
}

TEST_CASE("PAV agrees with the exhaustive block-partition oracle") {
  Eigen::Vector3d v(3, 1, 2);
  pav_project(v);
  CHECK(v.isApprox(Eigen::Vector3d(2, 2, 2)));
  Eigen::Vector2d p(1, 0);
  pav_project(p);
  CHECK(p.isApprox(Eigen::Vector2d(0.5, 0.5)));
  Eigen::Vector2d q(0, 1);
  CHECK_FALSE(pav_project(q));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1), w(0.2, 2);
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + t % 8;
    Eigen::VectorXd x(n), wt(n);
    for (int i = 0; i < n; ++i) {
      x(i) = u(rng);
      wt(i) = t % 2 ? w(rng) : 1.0;
    }
    const auto ref = oracle::isotonic_by_partitions(std::vector<double>(x.data(), x.data() + n),
                                                    std::vector<double>(wt.data(), wt.data() + n));
    pav_project(x, wt);
    for (int i = 0; i < n; ++i) CHECK(x(i) == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("lift and reconstruct") {
  const int n_a = 20;
  const auto zero = sample_cells_1d(8, [](double) { return 0.0; });
  CHECK(reconstruct(lift(zero, n_a)).u.isZero());
  const auto one = sample_cells_1d(8, [](double) { return 1.0; });
  CHECK((reconstruct(lift(one, n_a)).u.array() - 1.0).abs().maxCoeff() <= 1.0 / n_a);
  const auto ind = sample_cells_1d(10, [](double x) { return x < 0.5 ? 1.0 : 0.0; });
  CHECK(reconstruct(lift(ind, n_a)).u == ind.u);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  const auto r = sample_cells_1d(50, [&](double) { return u(rng); });
  CHECK((reconstruct(lift(r, n_a)).u - r.u).cwiseAbs().maxCoeff() <= 1.0 / n_a);
  CHECK(lift(r, n_a).is_monotone());
  const auto bad = sample_cells_1d(4, [](double) { return 1.5; });
  CHECK_THROWS_AS(lift(bad, n_a), RangeError);
}

TEST_CASE("reconstruct of a linear slice and of positive fields") {
  LevelField<1> y{{3}, Eigen::MatrixXd(10, 3)};
  for (int k = 0; k < 10; ++k) y.values.row(k).setConstant(y.level(k) - 0.3);
  CHECK((reconstruct(y).u.array() - 0.3).abs().maxCoeff() <= 0.5 / 10 + 1e-12);
  y.values.setConstant(1.0);
  CHECK(reconstruct(y).u.isZero());
  y.values(3, 1) = -1.0;
  CHECK_THROWS_AS(reconstruct(y), NotMonotone);
}

TEST_CASE("transport step shifts") {
  const auto u0 = sample_cells_1d(16, [](double x) { return x < 0.25 ? 1.0 : 0.0; });
  const LevelField<1> y = lift(u0, 8);
  CHECK(transport_step<1>(y, 0.3, {FluxLaw::linear(0.0)}).values == y.values);
  const LevelField<1> s = transport_step<1>(y, 1.0 / 16, {FluxLaw::linear(1.0)});
  for (int c = 0; c < 16; ++c) CHECK(s.values.col((c + 1) % 16) == y.values.col(c));
  // Burgers: slice a moves by t a; after t = 4 cells the top slice moved 4 cells
  const LevelField<1> yb = lift(u0, 2);
  const LevelField<1> sb = transport_step_aligned<1>(yb, 0.0, 4.0 / 16 / 0.75, {FluxLaw::burgers()});
  for (int c = 0; c < 16; ++c) CHECK(sb.values(1, (c + 4) % 16) == yb.values(1, c));
}

TEST_CASE("projection never increases L2 distance between level fields") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0, 1);
  for (int t = 0; t < 20; ++t) {
    LevelField<1> a{{6}, Eigen::MatrixXd(9, 6)}, b{{6}, Eigen::MatrixXd(9, 6)};
    for (Eigen::Index i = 0; i < a.values.size(); ++i) {
      a.values(i) = g(rng);
      b.values(i) = g(rng);
    }
    const double before = (a.values - b.values).norm();
    const double after = (monotone_project(a).values - monotone_project(b).values).norm();
    CHECK(after <= before + 1e-12);
    CHECK(monotone_project(a).is_monotone());
  }
}

TEST_CASE("evolve: linear flux translates") {
  const auto u0 = sample_cells_1d(40, [](double x) { return x >= 0.2 && x < 0.5 ? 0.8 : 0.1; });
  const auto u = evolve<1>(u0, {FluxLaw::linear(1.0)}, 0.25, 1.0 / 40, 32);
  for (int i = 0; i < 40; ++i) CHECK(u.u((i + 10) % 40) == doctest::Approx(u0.u(i)).epsilon(1.0 / 32));
}

TEST_CASE("evolve: Burgers shock and rarefaction") {
  const int n = 400;
  const double T = 0.4, h = 1.0 / n;
  const auto shock0 = sample_cells_1d(n, [](double x) { return x >= 0.25 && x < 0.75 ? 1.0 : 0.0; });
  const auto s = evolve<1>(shock0, {FluxLaw::burgers()}, T, h, 64);
  // jump from 1 to 0 near 0.75 + T / 2
  int jump = -1;
  for (int i = n / 2; i < n - 1; ++i)
    if (s.u(i) >= 0.5 && s.u(i + 1) < 0.5) jump = i;
  REQUIRE(jump >= 0);
  CHECK(std::abs((jump + 1) * h - (0.75 + 0.5 * T)) <= 2 * h);
  // rarefaction from the jump at 0.25: L1 error against the exact fan
  double err = 0.0;
  for (int i = 0; i < n / 2; ++i) {
    const double x = (i + 0.5) * h;
    err += std::abs(s.u(i) - oracle::burgers_box(x, T, 0.25, 0.75)) * h;
  }
  CHECK(err <= 2 * (h + 1.0 / 64));
}

TEST_CASE("evolve in two dimensions keeps range and lift monotonicity") {
  const auto u0 = sample_cells_2d(24, [](double x, double y) {
    return (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5) < 0.05 ? 0.9 : 0.2;
  });
  bool mono = true;
  EvolveOptions<2> opt;
  opt.observer = [&](int, double, const LevelField<2>& y) { mono = mono && y.is_monotone(); };
  const auto u = evolve<2>(u0, {FluxLaw::burgers(), FluxLaw::linear(0.5)}, 0.2, 1.0 / 24, 16, opt);
  CHECK(mono);
  CHECK(u.u.minCoeff() >= 0.2 - 1.0 / 16);
  CHECK(u.u.maxCoeff() <= 0.9 + 1.0 / 16);
}

TEST_CASE("comparison principle on ordered pairs") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 5; ++t) {
    const auto a = sample_cells_1d(60, [&](double) { return 0.6 * u(rng); });
    CellAverages<1> b = a;
    for (int i = 0; i < 60; ++i) b.u(i) = std::min(1.0, a.u(i) + 0.4 * u(rng));
    std::vector<Eigen::VectorXd> ua, ub;
    EvolveOptions<1> oa, ob;
    oa.observer = [&](int, double, const LevelField<1>& y) { ua.push_back(reconstruct(y).u); };
    ob.observer = [&](int, double, const LevelField<1>& y) { ub.push_back(reconstruct(y).u); };
    evolve<1>(a, {FluxLaw::burgers()}, 0.3, 1.0 / 60, 32, oa);
    evolve<1>(b, {FluxLaw::burgers()}, 0.3, 1.0 / 60, 32, ob);
    REQUIRE(ua.size() == ub.size());
    for (std::size_t k = 0; k < ua.size(); ++k) CHECK((ub[k] - ua[k]).minCoeff() >= 0.0);
  }
}

TEST_CASE("step count") {
  CHECK(step_count(0.4, 0.0025) == 160);
  CHECK(step_count(1.0, 0.3) == 4);
}
