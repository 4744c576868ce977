#include "ldm/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace ldm {

void EstimatorConfig::validate() const {
  if (sigma_ladder.empty()) throw std::invalid_argument("EstimatorConfig: sigma ladder is empty");
  for (std::size_t k = 0; k < sigma_ladder.size(); ++k) {
    if (!(sigma_ladder[k] > 0.0) || !std::isfinite(sigma_ladder[k])) {
      throw std::invalid_argument("EstimatorConfig: sigma values must be positive and finite");
    }
    if (k > 0 && !(sigma_ladder[k - 1] < sigma_ladder[k])) {
      throw std::invalid_argument("EstimatorConfig: sigma ladder must be strictly ascending");
    }
  }
  if (stop_condition < 1) throw std::invalid_argument("EstimatorConfig: stop condition must be >= 1");
  if (mc_size < 1) throw std::invalid_argument("EstimatorConfig: mc_size must be >= 1");
}

std::vector<double> default_sigma_ladder(double step, int count) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 1; k <= count; ++k) out.push_back(std::pow(10.0, step * k - 5.0));
  return out;
}

namespace {

void require_same_spec(const TrainedModel& h, const TrainedModel& g) {
  if (!(h.spec() == g.spec())) throw std::invalid_argument("hypotheses have different model specs");
}

// Predictions of g over a set, cached together with the set's features.
// Perturbed hypotheses differ from g only in the head, so features are shared.
struct Reference {
  PointSet feats;
  std::vector<int> labels;

  Reference(const TrainedModel& g, const PointSet& points) : feats(features_all(g, points)) {
    labels.resize(feats.size());
    for (std::size_t i = 0; i < feats.size(); ++i) labels[i] = g.head_predict(feats[i]);
  }

  std::size_t count_disagreements(const TrainedModel& h) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < feats.size(); ++i) n += h.head_predict(feats[i]) != labels[i] ? 1 : 0;
    return n;
  }
};

// Smallest reportable metric: a hypothesis that flips x disagrees on at least
// x itself, so the value stays strictly positive even when no Monte-Carlo
// point falls in the disagreement region.
double floor_rho(double rho, std::size_t m) { return std::max(rho, 1.0 / static_cast<double>(m)); }

}  // namespace

double disagree_fraction(const TrainedModel& h, const TrainedModel& g, const PointSet& mc_set) {
  require_same_spec(h, g);
  if (mc_set.empty()) throw std::invalid_argument("Monte-Carlo set is empty");
  const auto ph = predict_all(h, mc_set);
  const auto pg = predict_all(g, mc_set);
  std::size_t n = 0;
  for (std::size_t i = 0; i < ph.size(); ++i) n += ph[i] != pg[i] ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(mc_set.size());
}

LdmEstimate estimate_ldm(std::span<const double> x, const TrainedModel& g, const PointSet& mc_set,
                         const EstimatorConfig& cfg, const DrawObserver& observer) {
  cfg.validate();
  if (mc_set.empty()) throw std::invalid_argument("Monte-Carlo set is empty");
  if (mc_set.size() != cfg.mc_size) {
    throw std::invalid_argument("Monte-Carlo set has " + std::to_string(mc_set.size()) +
                                " points but mc_size is " + std::to_string(cfg.mc_size));
  }
  const Reference ref(g, mc_set);
  const std::vector<double> zx = features(g, x);
  const int gx = g.head_predict(zx);
  const double m = static_cast<double>(mc_set.size());

  LdmEstimate est;
  for (std::size_t k = 0; k < cfg.sigma_ladder.size(); ++k) {
    int c = 0;
    std::uint64_t j = 0;
    while (c < cfg.stop_condition) {
      Rng rng = Rng::substream(cfg.seed, k, j);
      const TrainedModel h = perturb_last_layer(g, cfg.sigma_ladder[k], rng, cfg.perturb_bias);
      ++c;
      ++est.hypotheses_drawn;
      DrawEvent ev{k, j, false, 0.0, est.value};
      ++j;
      if (h.head_predict(zx) != gx) {
        ++est.disagreements_found;
        ev.disagrees = true;
        ev.rho = floor_rho(static_cast<double>(ref.count_disagreements(h)) / m, mc_set.size());
        if (est.value > ev.rho) {
          est.value = ev.rho;
          c = 0;
        }
      }
      ev.running_value = est.value;
      if (observer) observer(ev);
    }
  }
  return est;
}

std::vector<LdmEstimate> estimate_ldm_pool(
    const PointSet& pool, const TrainedModel& g, const EstimatorConfig& cfg,
    const std::optional<PointSet>& mc_set,
    const std::function<void(std::size_t, const DrawEvent&)>& observer) {
  cfg.validate();
  if (pool.empty()) throw std::invalid_argument("pool is empty");
  if (mc_set) {
    if (mc_set->empty()) throw std::invalid_argument("Monte-Carlo set is empty");
    if (mc_set->size() != cfg.mc_size) {
      throw std::invalid_argument("Monte-Carlo set has " + std::to_string(mc_set->size()) +
                                  " points but mc_size is " + std::to_string(cfg.mc_size));
    }
  }
  const Reference pool_ref(g, pool);
  const std::optional<Reference> mc_ref =
      mc_set ? std::optional<Reference>(std::in_place, g, *mc_set) : std::nullopt;
  const std::size_t m = mc_set ? mc_set->size() : pool.size();
  const std::size_t n = pool.size();

  std::vector<LdmEstimate> est(n);
  std::vector<int> counter(n);
  std::vector<char> flips(n);
  for (std::size_t k = 0; k < cfg.sigma_ladder.size(); ++k) {
    std::fill(counter.begin(), counter.end(), 0);
    int min_counter = 0;
    std::uint64_t j = 0;
    while (min_counter < cfg.stop_condition) {
      Rng rng = Rng::substream(cfg.seed, k, j);
      const TrainedModel h = perturb_last_layer(g, cfg.sigma_ladder[k], rng, cfg.perturb_bias);
      std::size_t pool_flips = 0;
      for (std::size_t i = 0; i < n; ++i) {
        flips[i] = h.head_predict(pool_ref.feats[i]) != pool_ref.labels[i];
        pool_flips += flips[i] ? 1 : 0;
      }
      const std::size_t mc_flips = mc_ref ? mc_ref->count_disagreements(h) : pool_flips;
      const double rho = floor_rho(static_cast<double>(mc_flips) / static_cast<double>(m), m);

      min_counter = cfg.stop_condition;
      for (std::size_t i = 0; i < n; ++i) {
        LdmEstimate& e = est[i];
        ++e.hypotheses_drawn;
        ++counter[i];
        if (flips[i]) {
          ++e.disagreements_found;
          if (e.value > rho) {
            e.value = rho;
            counter[i] = 0;
          }
        }
        min_counter = std::min(min_counter, counter[i]);
        if (observer) observer(i, DrawEvent{k, j, flips[i] != 0, rho, e.value});
      }
      ++j;
    }
  }
  return est;
}

std::vector<LdmEstimate> estimate_ldm_independent(const PointSet& pool, const TrainedModel& g,
                                                  const EstimatorConfig& cfg,
                                                  const std::optional<PointSet>& mc_set) {
  if (pool.empty()) throw std::invalid_argument("pool is empty");
  const PointSet& mc = mc_set ? *mc_set : pool;
  EstimatorConfig point_cfg = cfg;
  if (!mc_set) point_cfg.mc_size = pool.size();
  std::vector<LdmEstimate> out;
  out.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    point_cfg.seed = mix64(cfg.seed ^ mix64(i + 0x5851f42d4c957f2dULL));
    out.push_back(estimate_ldm(pool[i], g, mc, point_cfg));
  }
  return out;
}

void write_estimates_csv(std::ostream& out, const std::vector<LdmEstimate>& estimates) {
  out << "pool_index,ldm_value,hypotheses_drawn,disagreements_found\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const auto& e = estimates[i];
    out << i << ',' << e.value << ',' << e.hypotheses_drawn << ',' << e.disagreements_found << '\n';
  }
}

}  // namespace ldm
