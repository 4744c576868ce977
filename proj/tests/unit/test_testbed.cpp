#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "ldm/estimator.hpp"
#include "ldm/stats.hpp"
#include "ldm/testbed.hpp"

using namespace ldm;
namespace tb = ldm::testbed;
using std::numbers::pi;

TEST_CASE("disk samples lie in the unit disk") {
  Rng rng(1);
  const auto pts = tb::sample_disk(10000, rng);
  REQUIRE(pts.size() == 10000);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(std::hypot(pts[i][0], pts[i][1]) <= 1.0);
  CHECK_THROWS_AS(tb::sample_disk(0, rng), std::invalid_argument);
}

TEST_CASE("disk samples are uniform by area") {
  Rng rng(2);
  const auto pts = tb::sample_disk(100000, rng);
  double r2 = 0.0;
  std::size_t inner = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double s = pts[i][0] * pts[i][0] + pts[i][1] * pts[i][1];
    r2 += s;
    inner += s <= 0.25 ? 1 : 0;
  }
  CHECK(std::abs(r2 / 100000.0 - 0.5) <= 0.01);
  CHECK(std::abs(static_cast<double>(inner) / 100000.0 - 0.25) <= 0.01);
}

TEST_CASE("analytic rho") {
  const tb::Vec2 v{0.3, -1.1};
  CHECK(tb::analytic_rho(v, v) == 0.0);
  CHECK(tb::analytic_rho({-0.3, 1.1}, v) == doctest::Approx(1.0));
  CHECK(tb::analytic_rho({1.1, 0.3}, v) == doctest::Approx(0.5));
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const tb::Vec2 a{rng.normal(), rng.normal()}, b{rng.normal(), rng.normal()};
    CHECK(tb::analytic_rho(a, b) == tb::analytic_rho(b, a));
  }
  CHECK_THROWS_AS(tb::analytic_rho({0.0, 0.0}, v), std::invalid_argument);
}

TEST_CASE("true LDM") {
  const tb::Vec2 v = tb::unit(0.2);
  CHECK(tb::true_ldm(v, tb::unit(0.2 + pi / 2)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(tb::true_ldm(v, tb::unit(0.2)) == doctest::Approx(0.5));
  CHECK(tb::true_ldm(v, tb::unit(0.2 + pi / 4)) == doctest::Approx(0.25));
  CHECK(tb::true_ldm(v, tb::unit(0.2 - 3 * pi / 4)) == doctest::Approx(0.25));
  CHECK_THROWS_AS(tb::true_ldm(v, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("true LDM is scale invariant") {
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const tb::Vec2 v{rng.normal(), rng.normal()}, x{rng.normal(), rng.normal()};
    const double c = std::exp(rng.normal());
    const double base = tb::true_ldm(v, x);
    CHECK(tb::true_ldm({c * v[0], c * v[1]}, x) == doctest::Approx(base).epsilon(1e-12));
    CHECK(tb::true_ldm(v, {c * x[0], c * x[1]}) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("Monte-Carlo disagreement converges to the analytic value") {
  Rng rng(5);
  const auto mc = tb::sample_disk(100000, rng);
  for (int i = 0; i < 20; ++i) {
    const tb::Vec2 w{rng.normal(), rng.normal()}, v{rng.normal(), rng.normal()};
    const double rho = tb::analytic_rho(w, v);
    const double est = disagree_fraction(tb::linear_model(w), tb::linear_model(v), mc);
    CHECK(std::abs(est - rho) <= 3.0 * std::sqrt(rho * (1.0 - rho) / 100000.0) + 1e-12);
  }
}

TEST_CASE("flip probability") {
  const tb::Vec2 v = tb::unit(0.5);
  Rng rng(6);
  CHECK(std::abs(tb::flip_probability(v, tb::unit(0.5 + pi / 2), 0.3, 10000, rng) - 0.5) <= 0.02);
  CHECK(tb::flip_probability(v, tb::unit(0.5), 0.01, 10000, rng) <= 0.001);
  CHECK_THROWS_AS(tb::flip_probability(v, v, 0.0, 10, rng), std::invalid_argument);
  CHECK_THROWS_AS(tb::flip_probability(v, v, 0.1, 0, rng), std::invalid_argument);
}

TEST_CASE("flip probability orders points opposite to LDM") {
  const tb::Vec2 v = tb::unit(0.5);
  Rng rng(7);
  const auto pts = tb::sample_disk(50, rng);
  std::vector<double> ldm, flip;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const tb::Vec2 x{pts[i][0], pts[i][1]};
    ldm.push_back(tb::true_ldm(v, x));
    flip.push_back(tb::flip_probability(v, x, 0.3, 20000, rng));
  }
  CHECK(stats::spearman(ldm, flip) <= -0.95);
}

TEST_CASE("mean rho against sigma") {
  const tb::Vec2 v = tb::unit(1.0);
  Rng rng(8);
  const auto tiny = tb::mean_rho_vs_sigma(v, {1e-6}, 5000, rng);
  CHECK(tiny[0].y <= 1e-4);
  const auto huge = tb::mean_rho_vs_sigma(v, {1e4}, 5000, rng);
  CHECK(std::abs(huge[0].y - 0.5) <= 0.02);
  const auto grid = tb::log_grid(1e-3, 1e2, 20);
  const auto curve = tb::mean_rho_vs_sigma(v, grid, 5000, rng);
  std::vector<double> means;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    CHECK(curve[i].x == grid[i]);
    if (i > 0) CHECK(curve[i].y > curve[i - 1].y);
    means.push_back(curve[i].y);
  }
  CHECK(stats::spearman(grid, means) == 1.0);
  CHECK_THROWS_AS(tb::mean_rho_vs_sigma(v, {0.2, 0.1}, 10, rng), std::invalid_argument);
  CHECK_THROWS_AS(tb::mean_rho_vs_sigma(v, {}, 10, rng), std::invalid_argument);
}

TEST_CASE("log grid endpoints") {
  const auto g = tb::log_grid(1e-3, 1e2, 6);
  REQUIRE(g.size() == 6);
  CHECK(g.front() == doctest::Approx(1e-3));
  CHECK(g[1] == doctest::Approx(1e-2));
  CHECK(g.back() == doctest::Approx(1e2));
}

TEST_CASE("reference target and linear model") {
  const auto v = tb::reference_target();
  CHECK(std::hypot(v[0], v[1]) == doctest::Approx(0.01));
  const auto g = tb::linear_model(v);
  CHECK(g.spec().kind == ModelKind::Linear2D);
  CHECK(g.params().values == std::vector<double>{v[0], v[1]});
}

TEST_CASE("curve csv") {
  std::ostringstream out;
  tb::write_curve_csv(out, {{0.5, 0.25, 0.01}});
  CHECK(out.str() == "x,y,stderr\n0.5,0.25,0.01\n");
}
