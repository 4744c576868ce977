#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ldm/points.hpp"

namespace ldm {

struct SplitDataset {
  Dataset train;
  Dataset test;
  /// original_labels[k] is the raw label that was mapped to class k.
  std::vector<long long> original_labels;
};

/// Reads a headered numeric CSV. `label_column` names the label column (or is
/// its zero-based index when numeric). Labels are remapped to 0..K-1 in
/// ascending order of their raw values; rows are shuffled with `seed` and the
/// first round(split_fraction * n) go to the training split.
SplitDataset load_dataset_csv(const std::filesystem::path& path, const std::string& label_column,
                              double split_fraction, std::uint64_t seed);
SplitDataset read_dataset_csv(std::istream& in, const std::string& label_column, double split_fraction,
                              std::uint64_t seed);

/// Reads a headered numeric CSV as feature rows, in file order. A column named
/// `drop_column` (if present) is skipped.
PointSet read_points_csv(std::istream& in, const std::string& drop_column = "");
PointSet load_points_csv(const std::filesystem::path& path, const std::string& drop_column = "");

enum class GeneratorKind { Disk2D, Blobs };

struct GeneratorParams {
  GeneratorKind kind = GeneratorKind::Disk2D;
  std::size_t n = 1000;
  // Disk2D: labels are [x . (cos angle, sin angle) > 0], each flipped with
  // probability label_noise.
  double separator_angle = 0.7853981633974483;
  double label_noise = 0.0;
  // Blobs: `classes` isotropic Gaussians in `dim` dimensions. Centers sit on a
  // circle of radius `spread` in the first two coordinates unless explicit
  // `centers` (classes x dim, row-major) are given.
  int classes = 3;
  std::size_t dim = 2;
  double cluster_std = 1.0;
  double spread = 3.0;
  std::vector<double> centers;

  void validate() const;
};

GeneratorKind parse_generator_kind(std::string_view name);
std::string_view to_string(GeneratorKind kind);

Dataset generate(const GeneratorParams& params, std::uint64_t seed);

/// Blob centers actually used by `generate` (classes x dim, row-major).
std::vector<double> blob_centers(const GeneratorParams& params);

/// Header x0..x{d-1},label then one row per point.
void write_dataset_csv(std::ostream& out, const Dataset& data);

}  // namespace ldm
