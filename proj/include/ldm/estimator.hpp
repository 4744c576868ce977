#pragma once

// Monte-Carlo disagree metric and the empirical least-disagree-metric (LDM)
// estimator. Hypotheses are sampled by Gaussian perturbation of the target
// model's final layer over an ascending ladder of scales; for each sample x
// the smallest disagree metric among hypotheses that flip x is kept.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ldm/model.hpp"
#include "ldm/points.hpp"

namespace ldm {

struct EstimatorConfig {
  /// Strictly ascending perturbation scales sigma_1 < ... < sigma_K.
  std::vector<double> sigma_ladder;
  /// Consecutive non-improving draws before moving to the next scale.
  int stop_condition = 10;
  /// Monte-Carlo set size. Checked against caller-supplied sets; the pool
  /// itself is used (whatever its size) when no set is supplied.
  std::size_t mc_size = 1;
  std::uint64_t seed = 0;
  bool perturb_bias = true;

  void validate() const;
};

/// sigma_k = 10^(step * k - 5) for k = 1..count (defaults: 0.1, 51).
std::vector<double> default_sigma_ladder(double step = 0.1, int count = 51);

struct LdmEstimate {
  double value = 1.0;
  std::uint64_t hypotheses_drawn = 0;
  std::uint64_t disagreements_found = 0;
};

/// One hypothesis draw as seen by a single sample.
struct DrawEvent {
  std::size_t level = 0;       // index into sigma_ladder
  std::uint64_t draw = 0;      // draw index within the level
  bool disagrees = false;      // h(x) != g(x)
  double rho = 0.0;            // disagree metric of h (only meaningful when disagrees)
  double running_value = 1.0;  // L_x after this draw
};
using DrawObserver = std::function<void(const DrawEvent&)>;

/// Fraction of `mc_set` on which h and g predict differently.
double disagree_fraction(const TrainedModel& h, const TrainedModel& g, const PointSet& mc_set);

/// Single-sample estimator. Draw j at level k uses the substream (seed, k, j),
/// so two runs with the same seed see the same hypotheses.
LdmEstimate estimate_ldm(std::span<const double> x, const TrainedModel& g, const PointSet& mc_set,
                         const EstimatorConfig& cfg, const DrawObserver& observer = {});

/// Shared-draw pool estimator: every hypothesis is scored once and applied to
/// all pool points. A level ends once every point has gone `stop_condition`
/// draws without improvement. `mc_set` defaults to the pool.
std::vector<LdmEstimate> estimate_ldm_pool(const PointSet& pool, const TrainedModel& g,
                                           const EstimatorConfig& cfg,
                                           const std::optional<PointSet>& mc_set = std::nullopt,
                                           const std::function<void(std::size_t, const DrawEvent&)>&
                                               observer = {});

/// Independent per-point estimates; point i uses seed mix(cfg.seed, i).
std::vector<LdmEstimate> estimate_ldm_independent(const PointSet& pool, const TrainedModel& g,
                                                  const EstimatorConfig& cfg,
                                                  const std::optional<PointSet>& mc_set = std::nullopt);

/// CSV: pool_index,ldm_value,hypotheses_drawn,disagreements_found
void write_estimates_csv(std::ostream& out, const std::vector<LdmEstimate>& estimates);

}  // namespace ldm
