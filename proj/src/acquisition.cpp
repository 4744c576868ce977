#include "ldm/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace ldm {

namespace {

constexpr double kThresholdFloor = 1e-12;

void require_q(std::size_t q, std::size_t pool_size) {
  if (pool_size == 0) throw std::invalid_argument("pool is empty");
  if (q == 0) throw std::invalid_argument("query size must be positive");
  if (q > pool_size) {
    throw std::invalid_argument("query size " + std::to_string(q) + " exceeds pool size " +
                                std::to_string(pool_size));
  }
}

void check_probas(const std::vector<std::vector<double>>& probas) {
  for (std::size_t i = 0; i < probas.size(); ++i) {
    const auto& p = probas[i];
    if (p.empty()) throw std::invalid_argument("empty probability vector at " + std::to_string(i));
    double s = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) throw std::invalid_argument("negative probability at " + std::to_string(i));
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-6) {
      throw std::invalid_argument("probabilities at " + std::to_string(i) + " do not sum to 1");
    }
  }
}

// Indices sorted by key ascending, ties by index.
std::vector<std::size_t> order_by(const std::vector<double>& key) {
  std::vector<std::size_t> idx(key.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  return idx;
}

double norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::LdmS: return "ldm-s";
    case Strategy::Random: return "random";
    case Strategy::Entropy: return "entropy";
    case Strategy::Margin: return "margin";
    case Strategy::Coreset: return "coreset";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "ldm-s" || name == "ldms" || name == "ldm" || name == "LdmS") return Strategy::LdmS;
  if (name == "random" || name == "Random") return Strategy::Random;
  if (name == "entropy" || name == "Entropy") return Strategy::Entropy;
  if (name == "margin" || name == "Margin") return Strategy::Margin;
  if (name == "coreset" || name == "Coreset") return Strategy::Coreset;
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

WeightAssignment compute_weights(std::span<const double> ldm_values, std::size_t q) {
  require_q(q, ldm_values.size());
  const std::size_t n = ldm_values.size();
  for (double v : ldm_values) {
    if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("LDM values must lie in (0, 1]");
  }
  const std::vector<double> values(ldm_values.begin(), ldm_values.end());
  const std::vector<std::size_t> order = order_by(values);

  WeightAssignment out;
  out.q_partition.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(q));
  out.threshold = values[out.q_partition.back()];
  out.gamma.assign(n, 0.0);

  std::vector<char> in_q(n, 0);
  for (std::size_t i : out.q_partition) in_q[i] = 1;

  // eta = (L - L_q)_+ / L_q is zero throughout the q partition, so its weights
  // are uniform. The complement is normalized on its own.
  for (std::size_t i : out.q_partition) out.gamma[i] = 1.0 / static_cast<double>(q);
  if (q == n) return out;

  const double lq = std::max(out.threshold, kThresholdFloor);
  // Subtracting the smallest eta before exponentiating leaves the normalized
  // weights unchanged and keeps them representable.
  double eta_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_q[i]) eta_min = std::min(eta_min, std::max(0.0, values[i] - out.threshold) / lq);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_q[i]) continue;
    const double eta = std::max(0.0, values[i] - out.threshold) / lq;
    out.gamma[i] = std::exp(-(eta - eta_min));
    total += out.gamma[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_q[i]) out.gamma[i] /= total;
  }
  return out;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_distance: length mismatch");
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 1.0;
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] * b[i];
  return 1.0 - d / (na * nb);
}

SelectionBatch ldm_seeded_select(const PointSet& features, std::span<const double> ldm_values,
                                 std::size_t q, Rng& rng) {
  const std::size_t n = ldm_values.size();
  require_q(q, n);
  if (features.size() != n) throw std::invalid_argument("features and LDM values are not aligned");

  const WeightAssignment w = compute_weights(ldm_values, q);
  SelectionBatch batch{{}, Strategy::LdmS, {}};
  batch.indices.reserve(q);

  std::size_t first = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (ldm_values[i] < ldm_values[first]) first = i;
  }
  std::vector<char> taken(n, 0);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  auto take = [&](std::size_t idx) {
    taken[idx] = 1;
    batch.indices.push_back(idx);
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i]) min_dist[i] = std::min(min_dist[i], cosine_distance(features[i], features[idx]));
    }
  };
  take(first);

  std::vector<double> weight(n);
  while (batch.indices.size() < q) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = taken[i] ? 0.0 : w.gamma[i] * min_dist[i];
      weight[i] = p * p;
      total += weight[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (weight[i] == 0.0) continue;
        acc += weight[i];
        pick = i;
        if (u < acc) break;
      }
    } else {
      std::vector<std::size_t> remaining;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i]) remaining.push_back(i);
      }
      pick = remaining[rng.index(remaining.size())];
      batch.warnings.push_back("seeding weights all zero after " + std::to_string(batch.indices.size()) +
                               " picks; drew uniformly among remaining points");
    }
    take(pick);
  }
  return batch;
}

SelectionBatch random_select(std::size_t pool_size, std::size_t q, Rng& rng) {
  require_q(q, pool_size);
  std::vector<std::size_t> idx(pool_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < q; ++i) {
    const std::size_t j = i + rng.index(pool_size - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(q);
  return {std::move(idx), Strategy::Random, {}};
}

double entropy(std::span<const double> proba) {
  double h = 0.0;
  for (double p : proba) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

SelectionBatch entropy_select(const std::vector<std::vector<double>>& probas, std::size_t q) {
  require_q(q, probas.size());
  check_probas(probas);
  std::vector<double> key(probas.size());
  for (std::size_t i = 0; i < probas.size(); ++i) key[i] = -entropy(probas[i]);
  auto order = order_by(key);
  order.resize(q);
  return {std::move(order), Strategy::Entropy, {}};
}

SelectionBatch margin_select(const std::vector<std::vector<double>>& probas, std::size_t q) {
  require_q(q, probas.size());
  check_probas(probas);
  std::vector<double> key(probas.size());
  for (std::size_t i = 0; i < probas.size(); ++i) {
    std::vector<double> p = probas[i];
    if (p.size() < 2) {
      key[i] = 1.0;
      continue;
    }
    std::partial_sort(p.begin(), p.begin() + 2, p.end(), std::greater<>());
    key[i] = p[0] - p[1];
  }
  auto order = order_by(key);
  order.resize(q);
  return {std::move(order), Strategy::Margin, {}};
}

SelectionBatch coreset_select(const PointSet& features, const PointSet& labeled_features,
                              std::size_t q) {
  const std::size_t n = features.size();
  require_q(q, n);
  if (!labeled_features.empty() && labeled_features.dim() != features.dim()) {
    throw std::invalid_argument("labeled and pool features differ in dimension");
  }
  auto dist = [](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };

  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  for (std::size_t l = 0; l < labeled_features.size(); ++l) {
    for (std::size_t i = 0; i < n; ++i) min_dist[i] = std::min(min_dist[i], dist(features[i], labeled_features[l]));
  }
  std::vector<char> taken(n, 0);
  SelectionBatch batch{{}, Strategy::Coreset, {}};
  auto take = [&](std::size_t idx) {
    taken[idx] = 1;
    batch.indices.push_back(idx);
    for (std::size_t i = 0; i < n; ++i) min_dist[i] = std::min(min_dist[i], dist(features[i], features[idx]));
  };
  if (labeled_features.empty()) take(0);
  while (batch.indices.size() < q) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best == n || min_dist[i] > min_dist[best]) best = i;
    }
    take(best);
  }
  return batch;
}

void write_batch_csv_header(std::ostream& out) {
  out << "step,strategy,pool_index,ldm_value,weight,selection_order\n";
}

void write_batch_csv_rows(std::ostream& out, int step, const SelectionBatch& batch,
                          std::span<const std::size_t> pool_indices,
                          std::span<const double> ldm_values, std::span<const double> weights) {
  out << std::setprecision(17);
  for (std::size_t order = 0; order < batch.indices.size(); ++order) {
    const std::size_t local = batch.indices[order];
    out << step << ',' << to_string(batch.strategy) << ','
        << (pool_indices.empty() ? local : pool_indices[local]) << ',';
    if (!ldm_values.empty()) out << ldm_values[local];
    out << ',';
    if (!weights.empty()) out << weights[local];
    out << ',' << order << '\n';
  }
}

}  // namespace ldm
