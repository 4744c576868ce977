#include "ldm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ldm::stats {

std::vector<double> rank_average(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("spearman: need at least two values");
  const auto ra = rank_average(a);
  const auto rb = rank_average(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw std::invalid_argument("spearman: constant input, correlation undefined");
  return sab / std::sqrt(saa * sbb);
}

double paired_t_score(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_t_score: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("paired_t_score: need R >= 2");
  const double r = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= r;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / (r - 1.0));
  if (sd == 0.0) {
    if (mean == 0.0) return 0.0;
    return mean > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return std::sqrt(r) * mean / sd;
}

void ResultTable::add(const Cell& cell) {
  if (!(cell.accuracy >= 0.0 && cell.accuracy <= 1.0)) {
    throw std::invalid_argument("accuracy must lie in [0, 1]");
  }
  const Key key{cell.dataset, cell.algorithm, cell.repetition, cell.step};
  if (!cells_.emplace(key, cell.accuracy).second) {
    throw std::invalid_argument("duplicate cell for " + cell.dataset + "/" + cell.algorithm +
                                " repetition " + std::to_string(cell.repetition) + " step " +
                                std::to_string(cell.step));
  }
}

std::vector<std::string> ResultTable::algorithms() const {
  std::set<std::string> s;
  for (const auto& [k, v] : cells_) s.insert(k.algorithm);
  return {s.begin(), s.end()};
}

std::vector<std::string> ResultTable::datasets() const {
  std::set<std::string> s;
  for (const auto& [k, v] : cells_) s.insert(k.dataset);
  return {s.begin(), s.end()};
}

std::vector<int> ResultTable::repetitions(const std::string& dataset) const {
  std::set<int> s;
  for (const auto& [k, v] : cells_) {
    if (k.dataset == dataset) s.insert(k.repetition);
  }
  return {s.begin(), s.end()};
}

std::vector<int> ResultTable::steps(const std::string& dataset) const {
  std::set<int> s;
  for (const auto& [k, v] : cells_) {
    if (k.dataset == dataset) s.insert(k.step);
  }
  return {s.begin(), s.end()};
}

double ResultTable::at(const std::string& dataset, const std::string& algorithm, int repetition,
                       int step) const {
  const auto it = cells_.find(Key{dataset, algorithm, repetition, step});
  if (it == cells_.end()) {
    throw std::out_of_range("missing cell " + dataset + "/" + algorithm + " repetition " +
                            std::to_string(repetition) + " step " + std::to_string(step));
  }
  return it->second;
}

std::vector<std::string> ResultTable::missing_cells() const {
  std::vector<std::string> out;
  const auto algs = algorithms();
  for (const auto& d : datasets()) {
    for (const auto& a : algs) {
      for (int r : repetitions(d)) {
        for (int t : steps(d)) {
          if (!cells_.contains(Key{d, a, r, t})) {
            out.push_back("dataset=" + d + " algorithm=" + a + " repetition=" + std::to_string(r) +
                          " step=" + std::to_string(t));
          }
        }
      }
    }
  }
  return out;
}

void ResultTable::require_complete() const {
  if (cells_.empty()) throw std::invalid_argument("result table is empty");
  const auto missing = missing_cells();
  if (missing.empty()) return;
  std::ostringstream msg;
  msg << "incomplete result grid (" << missing.size() << " missing cells):";
  const std::size_t shown = std::min<std::size_t>(missing.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) msg << "\n  " << missing[i];
  if (shown < missing.size()) msg << "\n  ...";
  throw std::invalid_argument(msg.str());
}

PenaltyMatrix penalty_matrix(const ResultTable& table, double threshold) {
  table.require_complete();
  PenaltyMatrix out;
  out.algorithms = table.algorithms();
  const std::size_t k = out.algorithms.size();
  out.entries.assign(k, std::vector<double>(k, 0.0));
  for (const auto& d : table.datasets()) {
    const auto reps = table.repetitions(d);
    if (reps.size() < 2) throw std::invalid_argument("penalty matrix needs at least 2 repetitions");
    const auto steps = table.steps(d);
    std::vector<std::vector<std::size_t>> wins(k, std::vector<std::size_t>(k, 0));
    std::vector<double> ai(reps.size()), aj(reps.size());
    for (int t : steps) {
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
          for (std::size_t r = 0; r < reps.size(); ++r) {
            ai[r] = table.at(d, out.algorithms[i], reps[r], t);
            aj[r] = table.at(d, out.algorithms[j], reps[r], t);
          }
          const double score = paired_t_score(ai, aj);
          if (score > threshold) ++wins[i][j];
          if (score < -threshold) ++wins[j][i];
        }
      }
    }
    // Each dataset contributes at most 1 per ordered pair.
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        out.entries[i][j] += static_cast<double>(wins[i][j]) / static_cast<double>(steps.size());
      }
    }
  }
  out.column_means.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < k; ++i) out.column_means[j] += out.entries[i][j];
    out.column_means[j] /= static_cast<double>(k);
  }
  return out;
}

std::vector<ProfileCurve> performance_profile(const ResultTable& table, std::span<const double> deltas) {
  table.require_complete();
  for (std::size_t i = 1; i < deltas.size(); ++i) {
    if (deltas[i] < deltas[i - 1]) throw std::invalid_argument("deltas must be ascending");
  }
  const auto algs = table.algorithms();
  const auto datasets = table.datasets();
  std::vector<ProfileCurve> out;
  for (const auto& a : algs) out.push_back({a, {deltas.begin(), deltas.end()}, std::vector<double>(deltas.size(), 0.0)});

  for (const auto& d : datasets) {
    const auto reps = table.repetitions(d);
    const auto steps = table.steps(d);
    const double cases = static_cast<double>(reps.size() * steps.size());
    std::vector<std::vector<std::size_t>> hits(algs.size(), std::vector<std::size_t>(deltas.size(), 0));
    std::vector<double> acc(algs.size());
    for (int r : reps) {
      for (int t : steps) {
        for (std::size_t a = 0; a < algs.size(); ++a) acc[a] = table.at(d, algs[a], r, t);
        const double best = *std::max_element(acc.begin(), acc.end());
        for (std::size_t a = 0; a < algs.size(); ++a) {
          const double gap = best - acc[a];
          for (std::size_t k = 0; k < deltas.size(); ++k) {
            if (gap <= deltas[k]) ++hits[a][k];
          }
        }
      }
    }
    for (std::size_t a = 0; a < algs.size(); ++a) {
      for (std::size_t k = 0; k < deltas.size(); ++k) {
        out[a].values[k] += static_cast<double>(hits[a][k]) / cases;
      }
    }
  }
  const double nd = static_cast<double>(datasets.size());
  for (auto& c : out) {
    for (double& v : c.values) v /= nd;
  }
  return out;
}

std::vector<CurveRow> accuracy_curves(const ResultTable& table) {
  table.require_complete();
  std::vector<CurveRow> out;
  for (const auto& d : table.datasets()) {
    const auto reps = table.repetitions(d);
    for (const auto& a : table.algorithms()) {
      for (int t : table.steps(d)) {
        double s = 0.0, ss = 0.0;
        for (int r : reps) {
          const double v = table.at(d, a, r, t);
          s += v;
          ss += v * v;
        }
        const double n = static_cast<double>(reps.size());
        const double mean = s / n;
        const double var = n > 1 ? std::max(0.0, (ss - n * mean * mean) / (n - 1.0)) : 0.0;
        out.push_back({d, a, t, mean, std::sqrt(var / n)});
      }
    }
  }
  return out;
}

void write_profile_csv(std::ostream& out, const std::vector<ProfileCurve>& curves) {
  out << "algorithm,delta,fraction\n" << std::setprecision(17);
  for (const auto& c : curves) {
    for (std::size_t k = 0; k < c.deltas.size(); ++k) out << c.algorithm << ',' << c.deltas[k] << ',' << c.values[k] << '\n';
  }
}

void write_penalty_csv(std::ostream& out, const PenaltyMatrix& p) {
  out << "row";
  for (const auto& a : p.algorithms) out << ',' << a;
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < p.algorithms.size(); ++i) {
    out << p.algorithms[i];
    for (double v : p.entries[i]) out << ',' << v;
    out << '\n';
  }
  out << "column_mean";
  for (double v : p.column_means) out << ',' << v;
  out << '\n';
}

void write_penalty_text(std::ostream& out, const PenaltyMatrix& p) {
  std::size_t width = 11;  // "column mean"
  for (const auto& a : p.algorithms) width = std::max(width, a.size());
  const std::size_t cell = std::max<std::size_t>(width, 8) + 2;
  out << std::setw(static_cast<int>(width)) << "" << ' ';
  for (const auto& a : p.algorithms) out << std::setw(static_cast<int>(cell)) << a;
  out << '\n' << std::fixed << std::setprecision(2);
  for (std::size_t i = 0; i < p.algorithms.size(); ++i) {
    out << std::setw(static_cast<int>(width)) << p.algorithms[i] << ' ';
    for (double v : p.entries[i]) out << std::setw(static_cast<int>(cell)) << v;
    out << '\n';
  }
  out << std::setw(static_cast<int>(width)) << "column mean" << ' ';
  for (double v : p.column_means) out << std::setw(static_cast<int>(cell)) << v;
  out << '\n';
  out.unsetf(std::ios::fixed);
}

void write_curves_csv(std::ostream& out, const std::vector<CurveRow>& rows) {
  out << "dataset,algorithm,step,mean_accuracy,stderr\n" << std::setprecision(17);
  for (const auto& r : rows) out << r.dataset << ',' << r.algorithm << ',' << r.step << ',' << r.mean << ',' << r.stderr_ << '\n';
}

}  // namespace ldm::stats
