#include "ldm/testbed.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace ldm::testbed {

namespace {

void require_nonzero(const Vec2& a, const char* what) {
  if (a[0] == 0.0 && a[1] == 0.0) throw std::invalid_argument(std::string(what) + " is the zero vector");
}

double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }

}  // namespace

PointSet sample_disk(std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sample_disk: n must be positive");
  std::vector<double> values;
  values.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::sqrt(rng.uniform());
    const double t = 2.0 * std::numbers::pi * rng.uniform();
    values.push_back(r * std::cos(t));
    values.push_back(r * std::sin(t));
  }
  return PointSet(2, std::move(values));
}

double angle_between(const Vec2& a, const Vec2& b) {
  const double cross = a[0] * b[1] - a[1] * b[0];
  return std::atan2(std::abs(cross), dot(a, b));
}

double analytic_rho(const Vec2& w, const Vec2& v) {
  require_nonzero(w, "w");
  require_nonzero(v, "v");
  return angle_between(w, v) / std::numbers::pi;
}

double true_ldm(const Vec2& v, const Vec2& x0) {
  require_nonzero(v, "v");
  require_nonzero(x0, "x0");
  return std::abs(std::numbers::pi / 2.0 - angle_between(v, x0)) / std::numbers::pi;
}

double flip_probability(const Vec2& v, const Vec2& x0, double sigma, std::size_t n_draws, Rng& rng) {
  if (!(sigma > 0.0)) throw std::invalid_argument("flip_probability: sigma must be positive");
  if (n_draws == 0) throw std::invalid_argument("flip_probability: n_draws must be positive");
  const bool base = dot(x0, v) > 0.0;
  std::size_t flips = 0;
  for (std::size_t i = 0; i < n_draws; ++i) {
    const Vec2 w{v[0] + sigma * rng.normal(), v[1] + sigma * rng.normal()};
    flips += (dot(x0, w) > 0.0) != base ? 1 : 0;
  }
  return static_cast<double>(flips) / static_cast<double>(n_draws);
}

std::vector<CurvePoint> mean_rho_vs_sigma(const Vec2& v, const std::vector<double>& sigma_grid,
                                          std::size_t n_draws, Rng& rng) {
  require_nonzero(v, "v");
  if (sigma_grid.empty()) throw std::invalid_argument("mean_rho_vs_sigma: empty grid");
  if (n_draws < 2) throw std::invalid_argument("mean_rho_vs_sigma: need at least 2 draws");
  for (std::size_t i = 0; i < sigma_grid.size(); ++i) {
    if (!(sigma_grid[i] > 0.0)) throw std::invalid_argument("mean_rho_vs_sigma: sigma must be positive");
    if (i > 0 && !(sigma_grid[i - 1] < sigma_grid[i])) {
      throw std::invalid_argument("mean_rho_vs_sigma: grid must be strictly ascending");
    }
  }
  // The same standard-normal directions are reused at every scale, so the
  // curve compares scales on identical draws.
  std::vector<Vec2> xi(n_draws);
  for (auto& e : xi) e = {rng.normal(), rng.normal()};

  std::vector<CurvePoint> out;
  out.reserve(sigma_grid.size());
  for (double sigma : sigma_grid) {
    double sum = 0.0, sum_sq = 0.0;
    std::size_t used = 0;
    for (const Vec2& e : xi) {
      const Vec2 w{v[0] + sigma * e[0], v[1] + sigma * e[1]};
      if (w[0] == 0.0 && w[1] == 0.0) continue;
      const double r = analytic_rho(w, v);
      sum += r;
      sum_sq += r * r;
      ++used;
    }
    const double n = static_cast<double>(used);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    out.push_back({sigma, mean, std::sqrt(var / n)});
  }
  return out;
}

Vec2 unit(double theta) { return {std::cos(theta), std::sin(theta)}; }

Vec2 reference_target() {
  const Vec2 u = unit(0.3);
  return {0.01 * u[0], 0.01 * u[1]};
}

TrainedModel linear_model(const Vec2& v) {
  ModelSpec spec{ModelKind::Linear2D, 2, 2, std::nullopt, 0};
  ParamVector p = make_layout(spec);
  p.values = {v[0], v[1]};
  return TrainedModel(spec, std::move(p));
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("log_grid: need 0 < lo < hi, n >= 2");
  std::vector<double> out(n);
  const double a = std::log10(lo), b = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return out;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "x,y,stderr\n" << std::setprecision(17);
  for (const auto& p : curve) out << p.x << ',' << p.y << ',' << p.stderr_ << '\n';
}

}  // namespace ldm::testbed
