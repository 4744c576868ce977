#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ldm::stats {

/// Mean ranks (1-based); tied values share the average of their ranks.
std::vector<double> rank_average(std::span<const double> v);

/// Spearman's rho: Pearson correlation of mean ranks. Throws when lengths
/// differ, fewer than two values are given, or either input is constant.
double spearman(std::span<const double> a, std::span<const double> b);

/// sqrt(R) * mean(d) / sd(d), d = a - b, sd with R - 1 denominator.
/// Zero spread gives +/-infinity by the sign of the mean, or 0 if the mean is 0.
double paired_t_score(std::span<const double> a, std::span<const double> b);

/// One accuracy measurement of an algorithm.
struct Cell {
  std::string algorithm;
  std::string dataset;
  int repetition = 0;
  int step = 0;
  double accuracy = 0.0;
};

/// Accuracy grid keyed by (dataset, algorithm, repetition, step). Complete
/// when every (dataset, algorithm) pair covers the same repetitions and steps
/// and all algorithms appear on every dataset.
class ResultTable {
 public:
  void add(const Cell& cell);

  std::vector<std::string> algorithms() const;
  std::vector<std::string> datasets() const;
  std::vector<int> repetitions(const std::string& dataset) const;
  std::vector<int> steps(const std::string& dataset) const;
  double at(const std::string& dataset, const std::string& algorithm, int repetition, int step) const;
  bool empty() const noexcept { return cells_.empty(); }

  /// Human-readable descriptions of missing cells; empty when complete.
  std::vector<std::string> missing_cells() const;
  /// Throws std::invalid_argument listing missing cells.
  void require_complete() const;

 private:
  struct Key {
    std::string dataset, algorithm;
    int repetition, step;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, double> cells_;
};

struct PenaltyMatrix {
  std::vector<std::string> algorithms;
  std::vector<std::vector<double>> entries;  // entries[i][j]: i beat j
  std::vector<double> column_means;
};

PenaltyMatrix penalty_matrix(const ResultTable& table, double threshold = 2.776);

struct ProfileCurve {
  std::string algorithm;
  std::vector<double> deltas;
  std::vector<double> values;
};

std::vector<ProfileCurve> performance_profile(const ResultTable& table, std::span<const double> deltas);

/// Mean accuracy per (dataset, algorithm, step) across repetitions.
struct CurveRow {
  std::string dataset, algorithm;
  int step = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
};
std::vector<CurveRow> accuracy_curves(const ResultTable& table);

void write_profile_csv(std::ostream& out, const std::vector<ProfileCurve>& curves);
void write_penalty_csv(std::ostream& out, const PenaltyMatrix& p);
void write_penalty_text(std::ostream& out, const PenaltyMatrix& p);
void write_curves_csv(std::ostream& out, const std::vector<CurveRow>& rows);

}  // namespace ldm::stats
