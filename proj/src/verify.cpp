#include "ldm/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

#include "ldm/acquisition.hpp"
#include "ldm/dataset.hpp"
#include "ldm/estimator.hpp"
#include "ldm/stats.hpp"
#include "ldm/testbed.hpp"

namespace ldm::verify {

namespace {

Metric check(std::string name, double value, std::string_view cmp, double threshold) {
  bool ok = false;
  if (cmp == "<=") ok = value <= threshold;
  else if (cmp == ">=") ok = value >= threshold;
  else if (cmp == "==") ok = value == threshold;
  else if (cmp == ">") ok = value > threshold;
  else throw std::logic_error("unknown comparison");
  return {std::move(name), value, std::string(cmp), threshold, ok};
}

// Target classifier used by the 2D suites.
const testbed::Vec2 kTarget = testbed::reference_target();

// Point at angle alpha from kTarget, i.e. true LDM |pi/2 - alpha| / pi.
testbed::Vec2 point_with_ldm(double ldm, double radius) {
  const double alpha = std::numbers::pi / 2.0 - ldm * std::numbers::pi;
  const auto u = testbed::unit(0.3 + alpha);
  return {radius * u[0], radius * u[1]};
}

Report consistency(const Options& o) {
  Report r;
  r.suite = Suite::Consistency;
  EstimatorConfig cfg;
  cfg.sigma_ladder = default_sigma_ladder();
  cfg.stop_condition = o.stop_condition.value_or(20);
  cfg.mc_size = o.mc_size.value_or(10000);
  const std::size_t n_points = o.points.value_or(50);

  Rng data_rng = Rng::substream(o.seed, 1);
  const PointSet mc = testbed::sample_disk(cfg.mc_size, data_rng);
  const PointSet points = testbed::sample_disk(n_points, data_rng);
  const TrainedModel g = testbed::linear_model(kTarget);

  double sum_err = 0.0, max_err = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    cfg.seed = mix64(o.seed ^ (i + 1));
    const testbed::Vec2 x{points[i][0], points[i][1]};
    const double truth = testbed::true_ldm(kTarget, x);
    const double err = std::abs(estimate_ldm(points[i], g, mc, cfg).value - truth);
    sum_err += err;
    max_err = std::max(max_err, err);
  }
  r.metrics.push_back(check("mean_abs_error", sum_err / static_cast<double>(n_points), "<=", 0.01));
  r.metrics.push_back(check("max_abs_error", max_err, "<=", 0.03));

  const testbed::Vec2 x_star = point_with_ldm(0.01, 0.7);
  cfg.seed = mix64(o.seed ^ 0xabcdefULL);
  const double est = estimate_ldm(std::span<const double>(x_star.data(), 2), g, mc, cfg).value;
  r.metrics.push_back(check("abs_error_at_true_ldm_0.01", std::abs(est - 0.01), "<=", 1e-3));
  return r;
}

Report flip_ordering(const Options& o) {
  Report r;
  r.suite = Suite::FlipOrdering;
  const std::size_t n = o.points.value_or(200);
  const std::size_t draws = o.draws.value_or(20000);
  const double sigma = 0.3 * std::hypot(kTarget[0], kTarget[1]);
  Rng rng = Rng::substream(o.seed, 2);
  const PointSet pts = testbed::sample_disk(n, rng);
  std::vector<double> ldm(n), flip(n);
  for (std::size_t i = 0; i < n; ++i) {
    const testbed::Vec2 x{pts[i][0], pts[i][1]};
    ldm[i] = testbed::true_ldm(kTarget, x);
    Rng draw_rng = Rng::substream(o.seed, 3, i);
    flip[i] = testbed::flip_probability(kTarget, x, sigma, draws, draw_rng);
  }
  r.metrics.push_back(check("spearman_true_ldm_vs_flip_probability", stats::spearman(ldm, flip), "<=", -0.95));
  return r;
}

Report rho_monotone(const Options& o) {
  Report r;
  r.suite = Suite::RhoMonotone;
  const double scale = std::hypot(kTarget[0], kTarget[1]);
  const auto grid = testbed::log_grid(1e-3 * scale, 1e2 * scale, o.points.value_or(20));
  Rng rng = Rng::substream(o.seed, 4);
  const auto curve = testbed::mean_rho_vs_sigma(kTarget, grid, o.draws.value_or(5000), rng);
  std::vector<double> means;
  std::size_t increases = 0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    means.push_back(curve[i].y);
    if (i > 0 && curve[i].y > curve[i - 1].y) ++increases;
  }
  r.metrics.push_back(check("spearman_sigma_vs_mean_rho", stats::spearman(grid, means), "==", 1.0));
  r.metrics.push_back(check("strict_increases", static_cast<double>(increases), "==",
                            static_cast<double>(curve.size() - 1)));
  return r;
}

Report rank_stability(const Options& o) {
  Report r;
  r.suite = Suite::RankStability;
  GeneratorParams gen;
  gen.kind = GeneratorKind::Blobs;
  gen.classes = 3;
  gen.dim = 2;
  gen.cluster_std = 1.0;
  gen.spread = 2.0;
  gen.n = 300;
  const Dataset train_set = generate(gen, mix64(o.seed ^ 5));
  gen.n = o.points.value_or(500);
  const Dataset pool = generate(gen, mix64(o.seed ^ 6));

  ModelSpec spec{ModelKind::Logistic, 2, 3, std::nullopt, 0};
  TrainConfig tcfg{100, 32, Optimizer::Adam, 0.05, mix64(o.seed ^ 7)};
  const TrainedModel g = train(train_set, spec, tcfg);

  EstimatorConfig cfg{default_sigma_ladder(), 10, pool.size(), mix64(o.seed ^ 8), true};
  const auto low = estimate_ldm_pool(pool.x, g, cfg);
  cfg.stop_condition = o.stop_condition.value_or(200);
  cfg.seed = mix64(o.seed ^ 9);
  const auto high = estimate_ldm_pool(pool.x, g, cfg);
  std::vector<double> a, b;
  for (std::size_t i = 0; i < low.size(); ++i) {
    a.push_back(low[i].value);
    b.push_back(high[i].value);
  }
  r.metrics.push_back(check("spearman_s10_vs_s200", stats::spearman(a, b), ">=", 0.95));
  return r;
}

// Fixed five-point pool: unit features spread over the upper half-plane.
struct SeedingFixture {
  std::vector<std::vector<double>> features{{1.0, 0.0}, {0.8, 0.6}, {0.0, 1.0}, {-0.6, 0.8}, {0.6, -0.8}};
  std::vector<double> ldm{0.05, 0.1, 0.2, 0.3, 0.5};
  std::size_t q = 2;
};

Report seeding_dist(const Options& o) {
  Report r;
  r.suite = Suite::SeedingDist;
  const SeedingFixture fx;
  const std::size_t trials = o.trials.value_or(100000);
  const PointSet feats = PointSet::from_rows(fx.features);
  std::vector<std::size_t> counts(fx.ldm.size(), 0);
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = Rng::substream(o.seed, 10, t);
    const auto batch = ldm_seeded_select(feats, fx.ldm, fx.q, rng);
    ++counts[batch.indices.at(1)];
  }
  const auto expected = exact_second_pick_distribution(fx.features, fx.ldm, fx.q);
  r.metrics.push_back(check("chi_square_p_value", chi_square_p_value(counts, expected), ">", 0.01));
  return r;
}

}  // namespace

std::string_view to_string(Suite s) {
  switch (s) {
    case Suite::Consistency: return "consistency";
    case Suite::FlipOrdering: return "flip-ordering";
    case Suite::RhoMonotone: return "rho-monotone";
    case Suite::RankStability: return "rank-stability";
    case Suite::SeedingDist: return "seeding-dist";
  }
  return "?";
}

Suite parse_suite(std::string_view name) {
  for (Suite s : all_suites()) {
    if (name == to_string(s)) return s;
  }
  if (name == "Consistency") return Suite::Consistency;
  if (name == "FlipOrdering") return Suite::FlipOrdering;
  if (name == "RhoMonotone") return Suite::RhoMonotone;
  if (name == "RankStability") return Suite::RankStability;
  if (name == "SeedingDist") return Suite::SeedingDist;
  throw std::invalid_argument("unknown suite '" + std::string(name) + "'");
}

std::vector<Suite> all_suites() {
  return {Suite::Consistency, Suite::FlipOrdering, Suite::RhoMonotone, Suite::RankStability, Suite::SeedingDist};
}

Report run(Suite suite, const Options& options) {
  const auto started = std::chrono::steady_clock::now();
  Report r;
  switch (suite) {
    case Suite::Consistency: r = consistency(options); break;
    case Suite::FlipOrdering: r = flip_ordering(options); break;
    case Suite::RhoMonotone: r = rho_monotone(options); break;
    case Suite::RankStability: r = rank_stability(options); break;
    case Suite::SeedingDist: r = seeding_dist(options); break;
  }
  r.passed = std::all_of(r.metrics.begin(), r.metrics.end(), [](const Metric& m) { return m.passed; });
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return r;
}

std::vector<double> exact_second_pick_distribution(const std::vector<std::vector<double>>& features,
                                                   const std::vector<double>& ldm_values, std::size_t q) {
  const std::size_t n = ldm_values.size();
  if (features.size() != n || q < 2 || q > n) throw std::invalid_argument("bad seeding fixture");

  // Partition by rank: the q smallest LDMs (ties to the lower index).
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t before = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (ldm_values[j] < ldm_values[i] || (ldm_values[j] == ldm_values[i] && j < i)) ++before;
    }
    rank[i] = before;
  }
  double lq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (rank[i] < q) lq = std::max(lq, ldm_values[i]);
  }
  std::vector<double> gamma(n);
  double mass_q = 0.0, mass_c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    gamma[i] = std::exp(-std::max(0.0, ldm_values[i] - lq) / lq);
    (rank[i] < q ? mass_q : mass_c) += gamma[i];
  }
  for (std::size_t i = 0; i < n; ++i) gamma[i] /= rank[i] < q ? mass_q : mass_c;

  const std::size_t first = static_cast<std::size_t>(
      std::find(rank.begin(), rank.end(), std::size_t{0}) - rank.begin());
  auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      ab += a[k] * b[k];
      aa += a[k] * a[k];
      bb += b[k] * b[k];
    }
    return (aa == 0.0 || bb == 0.0) ? 1.0 : 1.0 - ab / std::sqrt(aa * bb);
  };
  std::vector<double> prob(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == first) continue;
    const double p = gamma[i] * cosine(features[i], features[first]);
    prob[i] = p * p;
    total += prob[i];
  }
  for (double& p : prob) p /= total;
  return prob;
}

double chi_square_p_value(const std::vector<std::size_t>& observed, const std::vector<double>& probabilities) {
  if (observed.size() != probabilities.size()) throw std::invalid_argument("chi-square: size mismatch");
  double n = 0.0;
  for (std::size_t c : observed) n += static_cast<double>(c);
  double stat = 0.0;
  int categories = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (probabilities[i] <= 0.0) {
      if (observed[i] > 0) return 0.0;
      continue;
    }
    const double e = n * probabilities[i];
    stat += (static_cast<double>(observed[i]) - e) * (static_cast<double>(observed[i]) - e) / e;
    ++categories;
  }
  if (categories < 2) return 1.0;
  const boost::math::chi_squared dist(categories - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

void print_report(std::ostream& out, const Report& report) {
  out << (report.passed ? "PASS " : "FAIL ") << to_string(report.suite) << " (" << std::fixed
      << std::setprecision(2) << report.seconds << " s)\n";
  out.unsetf(std::ios::fixed);
  for (const auto& m : report.metrics) {
    out << "  " << (m.passed ? "ok   " : "FAIL ") << m.name << " = " << std::setprecision(6) << m.value << "  (required "
        << m.comparison << ' ' << m.threshold << ")\n";
  }
  if (!report.note.empty()) out << "  " << report.note << '\n';
}

}  // namespace ldm::verify
