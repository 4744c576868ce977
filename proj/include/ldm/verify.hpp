#pragma once

// Property suites that check the estimator and the seeding rule against
// independent oracles. Each suite reports the measured statistics next to
// the thresholds it was judged by.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ldm::verify {

enum class Suite { Consistency, FlipOrdering, RhoMonotone, RankStability, SeedingDist };

std::string_view to_string(Suite s);
Suite parse_suite(std::string_view name);
std::vector<Suite> all_suites();

struct Metric {
  std::string name;
  double value = 0.0;
  std::string comparison;  // "<=", ">=", "=="
  double threshold = 0.0;
  bool passed = false;
};

struct Report {
  Suite suite = Suite::Consistency;
  bool passed = false;
  std::vector<Metric> metrics;
  double seconds = 0.0;
  std::string note;
};

/// Overrides for the documented scale. Unset fields keep the defaults.
struct Options {
  std::optional<int> stop_condition;
  std::optional<std::size_t> mc_size;
  std::optional<std::size_t> points;
  std::optional<std::size_t> draws;
  std::optional<std::size_t> trials;
  std::uint64_t seed = 20240501;
};

Report run(Suite suite, const Options& options = {});

/// Exact second-pick distribution of LDM seeding for a fixed pool, computed
/// directly from the weighting and seeding formulas without the selector.
std::vector<double> exact_second_pick_distribution(const std::vector<std::vector<double>>& features,
                                                   const std::vector<double>& ldm_values, std::size_t q);

/// Pearson chi-square goodness of fit; categories with zero expected mass must
/// have zero observations (otherwise p = 0). Returns the p-value.
double chi_square_p_value(const std::vector<std::size_t>& observed, const std::vector<double>& probabilities);

void print_report(std::ostream& out, const Report& report);

}  // namespace ldm::verify
