#include "ldm/model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ldm {

namespace {

void require_dim(const ModelSpec& spec, std::span<const double> x) {
  if (x.size() != spec.input_dim) {
    throw std::invalid_argument("dimension mismatch: model expects " +
                                std::to_string(spec.input_dim) + " features, got " +
                                std::to_string(x.size()));
  }
}

std::size_t hidden(const ModelSpec& spec) { return spec.hidden_dim.value_or(0); }

// Number of score rows in the head. The binary linear model keeps a single
// row for class 1 and treats class 0's score as the constant 0.
std::size_t head_rows(const ModelSpec& spec) {
  return spec.kind == ModelKind::Linear2D ? 1 : static_cast<std::size_t>(spec.num_classes);
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Linear2D: return "linear2d";
    case ModelKind::Logistic: return "logistic";
    case ModelKind::Mlp: return "mlp";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "linear2d" || name == "Linear2D") return ModelKind::Linear2D;
  if (name == "logistic" || name == "Logistic") return ModelKind::Logistic;
  if (name == "mlp" || name == "Mlp" || name == "MLP") return ModelKind::Mlp;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

std::string_view to_string(Optimizer opt) { return opt == Optimizer::Sgd ? "sgd" : "adam"; }

Optimizer parse_optimizer(std::string_view name) {
  if (name == "sgd" || name == "Sgd" || name == "SGD") return Optimizer::Sgd;
  if (name == "adam" || name == "Adam") return Optimizer::Adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (input_dim == 0) throw std::invalid_argument("ModelSpec: input_dim must be positive");
  if (num_classes < 2) throw std::invalid_argument("ModelSpec: num_classes must be >= 2");
  if (kind == ModelKind::Linear2D && num_classes != 2) {
    throw std::invalid_argument("ModelSpec: linear2d is binary (num_classes = 2)");
  }
  if ((kind == ModelKind::Mlp) != hidden_dim.has_value()) {
    throw std::invalid_argument("ModelSpec: hidden_dim must be set exactly for mlp");
  }
  if (hidden_dim && *hidden_dim == 0) {
    throw std::invalid_argument("ModelSpec: hidden_dim must be positive");
  }
}

std::size_t ModelSpec::feature_dim() const {
  return kind == ModelKind::Mlp ? hidden(*this) : input_dim;
}

std::size_t ModelSpec::param_count() const {
  const auto c = static_cast<std::size_t>(num_classes);
  switch (kind) {
    case ModelKind::Linear2D: return input_dim;
    case ModelKind::Logistic: return c * input_dim + c;
    case ModelKind::Mlp: return hidden(*this) * input_dim + hidden(*this) + c * hidden(*this) + c;
  }
  return 0;
}

const ParamSegment& ParamVector::segment(std::string_view name) const {
  for (const auto& s : layout) {
    if (s.name == name) return s;
  }
  throw std::out_of_range("no parameter segment named '" + std::string(name) + "'");
}

bool ParamVector::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
}

TrainingDiverged::TrainingDiverged(int epoch)
    : std::runtime_error("training diverged: non-finite loss at epoch " + std::to_string(epoch)),
      epoch_(epoch) {}

ParamVector make_layout(const ModelSpec& spec) {
  spec.validate();
  ParamVector p;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::size_t n) {
    p.layout.push_back({std::move(name), {offset, offset + n}});
    offset += n;
  };
  const auto c = static_cast<std::size_t>(spec.num_classes);
  switch (spec.kind) {
    case ModelKind::Linear2D:
      add("w", spec.input_dim);
      break;
    case ModelKind::Logistic:
      add("w", c * spec.input_dim);
      add("b", c);
      break;
    case ModelKind::Mlp:
      add("w1", hidden(spec) * spec.input_dim);
      add("b1", hidden(spec));
      add("w2", c * hidden(spec));
      add("b2", c);
      break;
  }
  p.values.assign(offset, 0.0);
  return p;
}

TrainedModel::TrainedModel(ModelSpec spec, ParamVector params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  if (params_.values.size() != spec_.param_count()) {
    throw std::invalid_argument("parameter count " + std::to_string(params_.values.size()) +
                                " does not match spec (" + std::to_string(spec_.param_count()) + ")");
  }
  if (!params_.all_finite()) throw std::invalid_argument("parameters must be finite");
  switch (spec_.kind) {
    case ModelKind::Linear2D:
      head_weights_ = params_.segment("w").range;
      head_bias_ = {head_weights_.end, head_weights_.end};
      break;
    case ModelKind::Logistic:
      head_weights_ = params_.segment("w").range;
      head_bias_ = params_.segment("b").range;
      break;
    case ModelKind::Mlp:
      head_weights_ = params_.segment("w2").range;
      head_bias_ = params_.segment("b2").range;
      break;
  }
}

TrainedModel TrainedModel::with_values(std::vector<double> values) const {
  ParamVector p{std::move(values), params_.layout};
  return TrainedModel(spec_, std::move(p));
}

void TrainedModel::features_into(std::span<const double> x, std::span<double> out) const {
  require_dim(spec_, x);
  if (spec_.kind != ModelKind::Mlp) {
    std::copy(x.begin(), x.end(), out.begin());
    return;
  }
  const std::size_t h = hidden(spec_);
  const std::size_t d = spec_.input_dim;
  const double* w1 = params_.values.data() + params_.segment("w1").range.begin;
  const double* b1 = params_.values.data() + params_.segment("b1").range.begin;
  for (std::size_t j = 0; j < h; ++j) {
    double a = b1[j];
    for (std::size_t i = 0; i < d; ++i) a += w1[j * d + i] * x[i];
    out[j] = a > 0.0 ? a : 0.0;
  }
}

void TrainedModel::head_logits(std::span<const double> feature, std::span<double> logits) const {
  const std::size_t f = spec_.feature_dim();
  const double* w = params_.values.data() + head_weights_.begin;
  if (spec_.kind == ModelKind::Linear2D) {
    double s = 0.0;
    for (std::size_t i = 0; i < f; ++i) s += w[i] * feature[i];
    logits[0] = 0.0;
    logits[1] = s;
    return;
  }
  const double* b = params_.values.data() + head_bias_.begin;
  for (std::size_t c = 0; c < static_cast<std::size_t>(spec_.num_classes); ++c) {
    double s = b[c];
    for (std::size_t i = 0; i < f; ++i) s += w[c * f + i] * feature[i];
    logits[c] = s;
  }
}

int TrainedModel::head_predict(std::span<const double> feature) const {
  if (spec_.kind == ModelKind::Linear2D) {
    const double* w = params_.values.data() + head_weights_.begin;
    double s = 0.0;
    for (std::size_t i = 0; i < feature.size(); ++i) s += w[i] * feature[i];
    return s > 0.0 ? 1 : 0;
  }
  const std::size_t f = spec_.feature_dim();
  const double* w = params_.values.data() + head_weights_.begin;
  const double* b = params_.values.data() + head_bias_.begin;
  int best = 0;
  double best_score = 0.0;
  for (int c = 0; c < spec_.num_classes; ++c) {
    const double* row = w + static_cast<std::size_t>(c) * f;
    double s = b[c];
    for (std::size_t i = 0; i < f; ++i) s += row[i] * feature[i];
    if (c == 0 || s > best_score) {
      best = c;
      best_score = s;
    }
  }
  return best;
}

int argmax(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return static_cast<int>(best);
}

void softmax_inplace(std::span<double> scores) {
  const double mx = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (double& s : scores) {
    s = std::exp(s - mx);
    total += s;
  }
  for (double& s : scores) s /= total;
}

TrainedModel initialize(const ModelSpec& spec, std::uint64_t seed) {
  ParamVector p = make_layout(spec);
  Rng rng(seed);
  auto fill = [&](std::string_view name, std::size_t fan_in) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    const auto r = p.segment(name).range;
    for (std::size_t i = r.begin; i < r.end; ++i) p.values[i] = stddev * rng.normal();
  };
  switch (spec.kind) {
    case ModelKind::Linear2D:
    case ModelKind::Logistic:
      fill("w", spec.input_dim);
      break;
    case ModelKind::Mlp:
      fill("w1", spec.input_dim);
      fill("w2", hidden(spec));
      break;
  }
  return TrainedModel(spec, std::move(p));
}

namespace {

void check_data(const Dataset& data, const ModelSpec& spec) {
  if (data.size() != data.x.size()) {
    throw std::invalid_argument("dataset has " + std::to_string(data.x.size()) + " rows but " +
                                std::to_string(data.size()) + " labels");
  }
  if (data.size() > 0 && data.x.dim() != spec.input_dim) {
    throw std::invalid_argument("dimension mismatch: data has " + std::to_string(data.x.dim()) +
                                " features, model expects " + std::to_string(spec.input_dim));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.y[i] < 0 || data.y[i] >= spec.num_classes) {
      throw std::invalid_argument("label " + std::to_string(data.y[i]) + " at row " +
                                  std::to_string(i) + " out of range [0, " +
                                  std::to_string(spec.num_classes) + ")");
    }
  }
}

}  // namespace

double loss_and_gradient(const TrainedModel& model, const Dataset& data,
                         std::span<const std::size_t> batch, std::span<double> grad) {
  const ModelSpec& spec = model.spec();
  const auto& p = model.params();
  if (grad.size() != p.values.size()) throw std::invalid_argument("gradient buffer size mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  if (batch.empty()) return 0.0;

  const std::size_t d = spec.input_dim;
  const std::size_t f = spec.feature_dim();
  const std::size_t rows = head_rows(spec);
  const auto c = static_cast<std::size_t>(spec.num_classes);
  const double* w = p.values.data();
  const IndexRange hw = model.head_weight_span();
  const IndexRange hb = model.head_bias_span();

  std::vector<double> feat(f), logits(c), dlogits(c), dh(f);
  double loss = 0.0;
  for (std::size_t idx : batch) {
    const auto x = data.x[idx];
    const int y = data.y[idx];
    model.features_into(x, feat);
    model.head_logits(feat, logits);

    // Cross-entropy through a numerically stable log-softmax.
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    const double log_z = mx + std::log(z);
    loss += log_z - logits[static_cast<std::size_t>(y)];
    for (std::size_t k = 0; k < c; ++k) {
      dlogits[k] = std::exp(logits[k] - log_z) - (static_cast<int>(k) == y ? 1.0 : 0.0);
    }

    if (spec.kind == ModelKind::Linear2D) {
      for (std::size_t i = 0; i < f; ++i) grad[hw.begin + i] += dlogits[1] * feat[i];
      continue;
    }
    for (std::size_t k = 0; k < rows; ++k) {
      for (std::size_t i = 0; i < f; ++i) grad[hw.begin + k * f + i] += dlogits[k] * feat[i];
      grad[hb.begin + k] += dlogits[k];
    }
    if (spec.kind == ModelKind::Mlp) {
      const auto w1 = p.segment("w1").range;
      const auto b1 = p.segment("b1").range;
      for (std::size_t j = 0; j < f; ++j) {
        if (feat[j] <= 0.0) {
          dh[j] = 0.0;
          continue;
        }
        double s = 0.0;
        for (std::size_t k = 0; k < rows; ++k) s += w[hw.begin + k * f + j] * dlogits[k];
        dh[j] = s;
      }
      for (std::size_t j = 0; j < f; ++j) {
        if (dh[j] == 0.0) continue;
        for (std::size_t i = 0; i < d; ++i) grad[w1.begin + j * d + i] += dh[j] * x[i];
        grad[b1.begin + j] += dh[j];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : grad) g *= inv;
  return loss * inv;
}

TrainedModel train_from(const TrainedModel& start, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  const ModelSpec& spec = start.spec();
  check_data(data, spec);
  if (cfg.epochs == 0) return start;
  if (data.size() == 0) throw std::invalid_argument("cannot train on an empty dataset");

  std::vector<double> values = start.params().values;
  const std::size_t n = values.size();
  std::vector<double> grad(n), m1(n, 0.0), m2(n, 0.0);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle = Rng::substream(cfg.seed, 1);

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  long step = 0;
  TrainedModel current = start;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle.engine());
    double epoch_loss = 0.0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + lo, hi - lo);
      const double loss = loss_and_gradient(current, data, batch, grad);
      if (!std::isfinite(loss)) throw TrainingDiverged(epoch);
      epoch_loss += loss * static_cast<double>(batch.size());
      ++step;
      if (cfg.optimizer == Optimizer::Sgd) {
        for (std::size_t i = 0; i < n; ++i) values[i] -= cfg.learning_rate * grad[i];
      } else {
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
        for (std::size_t i = 0; i < n; ++i) {
          m1[i] = kBeta1 * m1[i] + (1.0 - kBeta1) * grad[i];
          m2[i] = kBeta2 * m2[i] + (1.0 - kBeta2) * grad[i] * grad[i];
          values[i] -= cfg.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + kEps);
        }
      }
      for (double v : values) {
        if (!std::isfinite(v)) throw TrainingDiverged(epoch);
      }
      current = current.with_values(values);
    }
    if (!std::isfinite(epoch_loss)) throw TrainingDiverged(epoch);
  }
  return current;
}

TrainedModel train(const Dataset& data, const ModelSpec& spec, const TrainConfig& cfg) {
  cfg.validate();
  check_data(data, spec);
  return train_from(initialize(spec, cfg.seed), data, cfg);
}

int predict(const TrainedModel& model, std::span<const double> x) {
  require_dim(model.spec(), x);
  std::vector<double> feat(model.spec().feature_dim());
  model.features_into(x, feat);
  return model.head_predict(feat);
}

std::vector<double> predict_proba(const TrainedModel& model, std::span<const double> x) {
  require_dim(model.spec(), x);
  std::vector<double> feat(model.spec().feature_dim());
  std::vector<double> out(static_cast<std::size_t>(model.spec().num_classes));
  model.features_into(x, feat);
  model.head_logits(feat, out);
  softmax_inplace(out);
  return out;
}

std::vector<double> features(const TrainedModel& model, std::span<const double> x) {
  std::vector<double> feat(model.spec().feature_dim());
  model.features_into(x, feat);
  return feat;
}

std::vector<int> predict_all(const TrainedModel& model, const PointSet& xs) {
  std::vector<int> out(xs.size());
  std::vector<double> feat(model.spec().feature_dim());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    model.features_into(xs[i], feat);
    out[i] = model.head_predict(feat);
  }
  return out;
}

PointSet features_all(const TrainedModel& model, const PointSet& xs) {
  const std::size_t f = model.spec().feature_dim();
  PointSet out(f, std::vector<double>(xs.size() * f));
  for (std::size_t i = 0; i < xs.size(); ++i) model.features_into(xs[i], out[i]);
  return out;
}

double accuracy(const TrainedModel& model, const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("accuracy of an empty dataset");
  const auto pred = predict_all(model, data.x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == data.y[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

TrainedModel perturb_last_layer(const TrainedModel& model, double sigma, Rng& rng,
                                bool include_bias) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("perturbation sigma must be a positive finite number");
  }
  std::vector<double> values = model.params().values;
  const IndexRange span = include_bias ? model.last_layer_span() : model.head_weight_span();
  for (std::size_t i = span.begin; i < span.end; ++i) values[i] += sigma * rng.normal();
  return model.with_values(std::move(values));
}

void save_checkpoint(const TrainedModel& model, std::ostream& out) {
  const ModelSpec& s = model.spec();
  out << "ldm-checkpoint 1\n";
  out << "kind " << to_string(s.kind) << " input_dim " << s.input_dim << " num_classes "
      << s.num_classes << " hidden_dim " << s.hidden_dim.value_or(0) << " seed " << s.seed << '\n';
  out << "params " << model.params().values.size() << '\n';
  out << std::setprecision(17);
  for (double v : model.params().values) out << v << '\n';
}

TrainedModel load_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "ldm-checkpoint") {
    throw std::runtime_error("not an ldm checkpoint");
  }
  if (version != 1) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  std::string k1, kind, k2, k3, k4, k5;
  ModelSpec spec;
  std::size_t hidden_dim = 0;
  if (!(in >> k1 >> kind >> k2 >> spec.input_dim >> k3 >> spec.num_classes >> k4 >> hidden_dim >>
        k5 >> spec.seed) ||
      k1 != "kind" || k2 != "input_dim" || k3 != "num_classes" || k4 != "hidden_dim" || k5 != "seed") {
    throw std::runtime_error("malformed checkpoint header");
  }
  spec.kind = parse_model_kind(kind);
  if (spec.kind == ModelKind::Mlp) spec.hidden_dim = hidden_dim;
  std::string kp;
  std::size_t count = 0;
  if (!(in >> kp >> count) || kp != "params") throw std::runtime_error("malformed checkpoint header");
  ParamVector p = make_layout(spec);
  if (count != p.values.size()) throw std::runtime_error("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < count; ++i) {
    if (!(in >> p.values[i])) {
      throw std::runtime_error("checkpoint truncated at parameter " + std::to_string(i));
    }
  }
  return TrainedModel(spec, std::move(p));
}

}  // namespace ldm
