#pragma once

// Pool-based active-learning loop: train on the labeled set, draw a random
// pool from the unlabeled set, score it with a strategy, reveal the labels of
// the selected batch, repeat.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ldm/acquisition.hpp"
#include "ldm/dataset.hpp"
#include "ldm/estimator.hpp"
#include "ldm/model.hpp"

namespace ldm {

struct DatasetSource {
  enum class Kind { Csv, Synthetic } kind = Kind::Synthetic;
  std::string id = "disk2d";
  // Csv
  std::filesystem::path path;
  std::string label_column = "label";
  double split_fraction = 0.8;
  // Synthetic: train and test splits are drawn independently.
  GeneratorParams generator;
  std::size_t n_test = 1000;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  DatasetSource dataset;
  ModelSpec model;  // input_dim and num_classes are taken from the data
  TrainConfig train;
  bool warm_start = false;
  EstimatorConfig estimator{default_sigma_ladder(), 10, 1, 0, true};
  Strategy strategy = Strategy::LdmS;
  std::size_t initial_labeled = 20;
  /// When positive, the initial set takes this many samples from every class
  /// and `initial_labeled` is ignored.
  std::size_t initial_per_class = 0;
  std::size_t pool_size = 500;
  std::size_t query_size = 10;
  int steps = 10;
  int repetitions = 5;
  std::uint64_t master_seed = 0;
  bool record_wall_time = false;
  bool audit_labels = false;

  void validate() const;
};

/// Flat `section.key = value` text. Blank lines and lines starting with '#'
/// are ignored.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);

/// Applies key-values on top of `base`; unknown keys throw.
ExperimentConfig apply_config(ExperimentConfig base, const KeyValues& kv);
/// Canonical key-value form covering every field; round-trips through apply_config.
KeyValues to_key_values(const ExperimentConfig& cfg);
/// FNV-1a over the canonical form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

struct ExperimentRecord {
  std::string algorithm;
  std::string dataset;
  int repetition = 0;
  int step = 0;
  std::size_t labeled_count = 0;
  double test_accuracy = 0.0;
  double wall_time_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

struct ExperimentResult {
  std::vector<ExperimentRecord> records;
  std::vector<std::string> warnings;
};

/// Loads or synthesizes the train/test split described by `source`.
SplitDataset materialize(const DatasetSource& source);

/// Per-step selection trace, used by tests and the batch log.
struct StepTrace {
  int repetition = 0;
  int step = 0;
  std::vector<std::size_t> labeled;     // dataset indices in L_t
  std::vector<std::size_t> unlabeled;   // dataset indices in U_t
  std::vector<std::size_t> pool;        // dataset indices in P
  SelectionBatch batch;                 // indices into `pool`
  std::vector<double> ldm_values;       // LDM-S only
  std::vector<double> weights;          // LDM-S only
};
using StepObserver = std::function<void(const StepTrace&)>;

ExperimentResult al_experiment(const ExperimentConfig& cfg, const StepObserver& observer = {});
ExperimentResult al_experiment(const ExperimentConfig& cfg, const SplitDataset& data,
                               const StepObserver& observer = {});

/// One JSON object per line with a fixed key order.
void write_record_jsonl(std::ostream& out, const ExperimentRecord& record);
ExperimentRecord parse_record_json(const std::string& line);
std::vector<ExperimentRecord> read_records_jsonl(std::istream& in);

}  // namespace ldm
