#pragma once

// Batch selection strategies. LDM-S combines a preference for small LDM
// (exponential weights over two equal-mass partitions of the pool) with
// k-means++-style seeding on cosine distance between penultimate features.

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ldm/points.hpp"
#include "ldm/random.hpp"

namespace ldm {

enum class Strategy { LdmS, Random, Entropy, Margin, Coreset };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

struct WeightAssignment {
  std::vector<double> gamma;                 // aligned with the pool
  std::vector<std::size_t> q_partition;      // indices of the q smallest LDMs
  double threshold = 0.0;                    // max LDM inside the q partition
};

struct SelectionBatch {
  std::vector<std::size_t> indices;  // in selection order
  Strategy strategy = Strategy::Random;
  std::vector<std::string> warnings;
};

/// Exponential weights normalized to unit mass inside the q smallest-LDM
/// points and, separately, inside the rest of the pool. When q equals the pool
/// size every point gets 1/q.
WeightAssignment compute_weights(std::span<const double> ldm_values, std::size_t q);

/// 1 - cosine similarity. Zero-norm vectors are at distance 1 from everything.
double cosine_distance(std::span<const double> a, std::span<const double> b);

SelectionBatch ldm_seeded_select(const PointSet& features, std::span<const double> ldm_values,
                                 std::size_t q, Rng& rng);

SelectionBatch random_select(std::size_t pool_size, std::size_t q, Rng& rng);

double entropy(std::span<const double> proba);
SelectionBatch entropy_select(const std::vector<std::vector<double>>& probas, std::size_t q);
SelectionBatch margin_select(const std::vector<std::vector<double>>& probas, std::size_t q);

/// Greedy k-center over Euclidean distance. With no labeled points the first
/// pick is index 0.
SelectionBatch coreset_select(const PointSet& features, const PointSet& labeled_features,
                              std::size_t q);

/// CSV rows: step,strategy,pool_index,ldm_value,weight,selection_order.
/// `ldm_values` and `weights` may be empty when the strategy has none.
void write_batch_csv_header(std::ostream& out);
void write_batch_csv_rows(std::ostream& out, int step, const SelectionBatch& batch,
                          std::span<const std::size_t> pool_indices,
                          std::span<const double> ldm_values, std::span<const double> weights);

}  // namespace ldm
