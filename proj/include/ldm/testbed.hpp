#pragma once

// Closed-form world for binary sign classifiers h_w(x) = [x.w > 0] on the
// uniform unit disk. Here the disagree metric between two classifiers is the
// angle between their parameters over pi, which gives exact oracles for the
// estimator.

#include <array>
#include <iosfwd>
#include <vector>

#include "ldm/model.hpp"
#include "ldm/points.hpp"
#include "ldm/random.hpp"

namespace ldm::testbed {

using Vec2 = std::array<double, 2>;

/// n i.i.d. uniform points on the closed unit disk.
PointSet sample_disk(std::size_t n, Rng& rng);

/// Unsigned angle between a and b in [0, pi], via atan2(|cross|, dot).
double angle_between(const Vec2& a, const Vec2& b);

/// Exact disagree metric of two sign classifiers: angle(w, v) / pi.
double analytic_rho(const Vec2& w, const Vec2& v);

/// Exact LDM of x0 under g_v: |pi/2 - angle(v, x0)| / pi, in [0, 0.5].
double true_ldm(const Vec2& v, const Vec2& x0);

/// Monte-Carlo P[sign(x0.w) != sign(x0.v)] for w ~ N(v, sigma^2 I).
double flip_probability(const Vec2& v, const Vec2& x0, double sigma, std::size_t n_draws, Rng& rng);

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
  double stderr_ = 0.0;
};

/// Empirical mean of analytic_rho(w, v), w ~ N(v, sigma^2 I), per grid value.
std::vector<CurvePoint> mean_rho_vs_sigma(const Vec2& v, const std::vector<double>& sigma_grid,
                                          std::size_t n_draws, Rng& rng);

/// Unit vector at angle theta (radians) from the positive x axis.
Vec2 unit(double theta);

/// Bias-free linear classifier with parameter v.
TrainedModel linear_model(const Vec2& v);

/// Reference classifier for testbed studies: direction 0.3 rad, norm 0.01.
/// The norm sits near the geometric middle of the default sigma ladder, so the
/// ladder sweeps from near-identity perturbations to near-uniform directions.
Vec2 reference_target();

/// n log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// CSV: x,y,stderr
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

}  // namespace ldm::testbed
