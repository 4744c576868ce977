#pragma once

// Parametric classifiers used throughout the library: a bias-free binary
// linear classifier on R^d (the 2D testbed family), multinomial logistic
// regression, and a one-hidden-layer ReLU MLP. All three end in an affine
// "head" over a feature vector; LDM estimation perturbs that head only.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ldm/points.hpp"
#include "ldm/random.hpp"

namespace ldm {

enum class ModelKind { Linear2D, Logistic, Mlp };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::Logistic;
  std::size_t input_dim = 2;
  int num_classes = 2;
  std::optional<std::size_t> hidden_dim;  // set iff kind == Mlp
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;
  std::size_t param_count() const;
  std::size_t feature_dim() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Half-open index range [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return end <= begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct ParamSegment {
  std::string name;
  IndexRange range;
};

struct ParamVector {
  std::vector<double> values;
  std::vector<ParamSegment> layout;

  const ParamSegment& segment(std::string_view name) const;
  bool all_finite() const;
};

enum class Optimizer { Sgd, Adam };

std::string_view to_string(Optimizer opt);
Optimizer parse_optimizer(std::string_view name);

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 32;
  Optimizer optimizer = Optimizer::Adam;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Raised when the training loss becomes non-finite.
class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(int epoch);
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class TrainedModel {
 public:
  TrainedModel(ModelSpec spec, ParamVector params);

  const ModelSpec& spec() const noexcept { return spec_; }
  const ParamVector& params() const noexcept { return params_; }

  /// Final-layer weights followed by the final-layer bias (if any).
  IndexRange last_layer_span() const noexcept { return {head_weights_.begin, head_bias_.empty() ? head_weights_.end : head_bias_.end}; }
  IndexRange head_weight_span() const noexcept { return head_weights_; }
  IndexRange head_bias_span() const noexcept { return head_bias_; }

  /// Penultimate representation: the input itself for linear models.
  void features_into(std::span<const double> x, std::span<double> out) const;

  /// Class scores computed from a feature vector (not from raw input).
  void head_logits(std::span<const double> feature, std::span<double> logits) const;
  int head_predict(std::span<const double> feature) const;

  /// Replaces the parameters; the layout must be unchanged.
  TrainedModel with_values(std::vector<double> values) const;

 private:
  ModelSpec spec_;
  ParamVector params_;
  IndexRange head_weights_;
  IndexRange head_bias_;
};

/// Parameter layout for a spec, all zeros.
ParamVector make_layout(const ModelSpec& spec);

/// He-normal weights (std sqrt(2 / fan_in)), zero biases.
TrainedModel initialize(const ModelSpec& spec, std::uint64_t seed);

TrainedModel train(const Dataset& data, const ModelSpec& spec, const TrainConfig& cfg);

/// Continues training from an existing model's parameters.
TrainedModel train_from(const TrainedModel& start, const Dataset& data, const TrainConfig& cfg);

/// Argmax of class scores, ties resolved towards the lowest class index.
int predict(const TrainedModel& model, std::span<const double> x);
std::vector<double> predict_proba(const TrainedModel& model, std::span<const double> x);
std::vector<double> features(const TrainedModel& model, std::span<const double> x);

std::vector<int> predict_all(const TrainedModel& model, const PointSet& xs);
PointSet features_all(const TrainedModel& model, const PointSet& xs);
double accuracy(const TrainedModel& model, const Dataset& data);

/// Copy of `model` whose head entries are v_i + sigma * xi_i, xi_i ~ N(0, 1).
/// The bias is included unless `include_bias` is false.
TrainedModel perturb_last_layer(const TrainedModel& model, double sigma, Rng& rng,
                                bool include_bias = true);

/// Mean cross-entropy over `batch` rows of `data`; gradient written to `grad`
/// (same length as the parameter vector).
double loss_and_gradient(const TrainedModel& model, const Dataset& data,
                         std::span<const std::size_t> batch, std::span<double> grad);

void save_checkpoint(const TrainedModel& model, std::ostream& out);
TrainedModel load_checkpoint(std::istream& in);

int argmax(std::span<const double> scores);
void softmax_inplace(std::span<double> scores);

}  // namespace ldm
