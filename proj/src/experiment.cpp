#include "ldm/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ldm {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt_double(v[i]);
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v.front() == '-') throw std::invalid_argument(v);
    const auto d = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int d = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': expected an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

std::uint64_t derive(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(base ^ mix64(a + 0x9e3779b97f4a7c15ULL)) ^ mix64(b + 0xd1b54a32d192ed03ULL));
}

enum Purpose : std::uint64_t { kInitial = 1, kTrain, kPool, kSelect, kEstimate };

// Holds the training labels. Strategies only see features; a label becomes
// readable once its index has been moved into the labeled set.
class LabelOracle {
 public:
  LabelOracle(const std::vector<int>& labels, bool audit) : labels_(labels), audit_(audit), revealed_(labels.size(), 0) {}

  void reveal(std::size_t i) { revealed_[i] = 1; }

  int label(std::size_t i) const {
    if (audit_ && !revealed_[i]) {
      throw std::logic_error("label audit: label of unlabeled index " + std::to_string(i) + " read");
    }
    return labels_[i];
  }

 private:
  const std::vector<int>& labels_;
  bool audit_;
  std::vector<char> revealed_;
};

std::vector<std::size_t> initial_labeled_set(const ExperimentConfig& cfg, const Dataset& train, Rng& rng) {
  const auto k = static_cast<std::size_t>(train.num_classes);
  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < train.size(); ++i) by_class[static_cast<std::size_t>(train.y[i])].push_back(i);
  for (auto& members : by_class) std::shuffle(members.begin(), members.end(), rng.engine());

  std::vector<std::size_t> quota(k, 0);
  if (cfg.initial_per_class > 0) {
    std::fill(quota.begin(), quota.end(), cfg.initial_per_class);
  } else {
    // Largest-remainder allocation proportional to class frequency.
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double exact = static_cast<double>(cfg.initial_labeled) * static_cast<double>(by_class[c].size()) /
                           static_cast<double>(train.size());
      quota[c] = static_cast<std::size_t>(std::floor(exact));
      assigned += quota[c];
      remainders.emplace_back(exact - std::floor(exact), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < cfg.initial_labeled && i < remainders.size(); ++i, ++assigned) {
      ++quota[remainders[i].second];
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < k; ++c) {
    if (quota[c] > by_class[c].size()) {
      throw std::invalid_argument("class " + std::to_string(c) + " has only " + std::to_string(by_class[c].size()) +
                                  " training samples, " + std::to_string(quota[c]) + " requested for the initial set");
    }
    out.insert(out.end(), by_class[c].begin(), by_class[c].begin() + static_cast<std::ptrdiff_t>(quota[c]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  train.validate();
  estimator.validate();
  if (query_size == 0) throw std::invalid_argument("query size must be positive");
  if (pool_size == 0) throw std::invalid_argument("pool size must be positive");
  if (query_size > pool_size) throw std::invalid_argument("query size exceeds pool size");
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (initial_per_class == 0 && initial_labeled == 0) throw std::invalid_argument("initial labeled set is empty");
  if (model.kind == ModelKind::Mlp && !model.hidden_dim) throw std::invalid_argument("mlp needs model.hidden_dim");
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected 'section.key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.find('.') == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": key '" + key + "' has no section");
    }
    kv[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_key_values(in);
}

ExperimentConfig apply_config(ExperimentConfig cfg, const KeyValues& kv) {
  for (const auto& [key, v] : kv) {
    auto& ds = cfg.dataset;
    auto& gen = ds.generator;
    if (key == "dataset.kind") {
      if (v == "csv") {
        ds.kind = DatasetSource::Kind::Csv;
      } else {
        ds.kind = DatasetSource::Kind::Synthetic;
        gen.kind = parse_generator_kind(v);
      }
    } else if (key == "dataset.id") ds.id = v;
    else if (key == "dataset.path") ds.path = v;
    else if (key == "dataset.label_column") ds.label_column = v;
    else if (key == "dataset.split_fraction") ds.split_fraction = to_double(key, v);
    else if (key == "dataset.n") gen.n = to_u64(key, v);
    else if (key == "dataset.n_test") ds.n_test = to_u64(key, v);
    else if (key == "dataset.seed") ds.seed = to_u64(key, v);
    else if (key == "dataset.separator_angle") gen.separator_angle = to_double(key, v);
    else if (key == "dataset.label_noise") gen.label_noise = to_double(key, v);
    else if (key == "dataset.classes") gen.classes = to_int(key, v);
    else if (key == "dataset.dim") gen.dim = to_u64(key, v);
    else if (key == "dataset.cluster_std") gen.cluster_std = to_double(key, v);
    else if (key == "dataset.spread") gen.spread = to_double(key, v);
    else if (key == "dataset.centers") gen.centers = to_list(key, v);
    else if (key == "model.kind") cfg.model.kind = parse_model_kind(v);
    else if (key == "model.hidden_dim") {
      const auto h = to_u64(key, v);
      cfg.model.hidden_dim = h == 0 ? std::nullopt : std::optional<std::size_t>(h);
    } else if (key == "model.seed") cfg.model.seed = to_u64(key, v);
    else if (key == "train.epochs") cfg.train.epochs = to_int(key, v);
    else if (key == "train.batch_size") cfg.train.batch_size = to_u64(key, v);
    else if (key == "train.optimizer") cfg.train.optimizer = parse_optimizer(v);
    else if (key == "train.learning_rate") cfg.train.learning_rate = to_double(key, v);
    else if (key == "train.seed") cfg.train.seed = to_u64(key, v);
    else if (key == "train.warm_start") cfg.warm_start = to_bool(key, v);
    else if (key == "estimator.sigma_ladder") cfg.estimator.sigma_ladder = to_list(key, v);
    else if (key == "estimator.stop_condition") cfg.estimator.stop_condition = to_int(key, v);
    else if (key == "estimator.mc_size") cfg.estimator.mc_size = to_u64(key, v);
    else if (key == "estimator.seed") cfg.estimator.seed = to_u64(key, v);
    else if (key == "estimator.perturb_bias") cfg.estimator.perturb_bias = to_bool(key, v);
    else if (key == "experiment.strategy") cfg.strategy = parse_strategy(v);
    else if (key == "experiment.initial_labeled") cfg.initial_labeled = to_u64(key, v);
    else if (key == "experiment.initial_per_class") cfg.initial_per_class = to_u64(key, v);
    else if (key == "experiment.pool_size") cfg.pool_size = to_u64(key, v);
    else if (key == "experiment.query_size") cfg.query_size = to_u64(key, v);
    else if (key == "experiment.steps") cfg.steps = to_int(key, v);
    else if (key == "experiment.repetitions") cfg.repetitions = to_int(key, v);
    else if (key == "experiment.master_seed") cfg.master_seed = to_u64(key, v);
    else if (key == "experiment.record_wall_time") cfg.record_wall_time = to_bool(key, v);
    else if (key == "experiment.audit_labels") cfg.audit_labels = to_bool(key, v);
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
  return cfg;
}

KeyValues to_key_values(const ExperimentConfig& cfg) {
  const auto& ds = cfg.dataset;
  const auto& gen = ds.generator;
  KeyValues kv;
  kv["dataset.kind"] = ds.kind == DatasetSource::Kind::Csv ? "csv" : std::string(to_string(gen.kind));
  kv["dataset.id"] = ds.id;
  kv["dataset.path"] = ds.path.string();
  kv["dataset.label_column"] = ds.label_column;
  kv["dataset.split_fraction"] = fmt_double(ds.split_fraction);
  kv["dataset.n"] = std::to_string(gen.n);
  kv["dataset.n_test"] = std::to_string(ds.n_test);
  kv["dataset.seed"] = std::to_string(ds.seed);
  kv["dataset.separator_angle"] = fmt_double(gen.separator_angle);
  kv["dataset.label_noise"] = fmt_double(gen.label_noise);
  kv["dataset.classes"] = std::to_string(gen.classes);
  kv["dataset.dim"] = std::to_string(gen.dim);
  kv["dataset.cluster_std"] = fmt_double(gen.cluster_std);
  kv["dataset.spread"] = fmt_double(gen.spread);
  kv["dataset.centers"] = fmt_list(gen.centers);
  kv["model.kind"] = std::string(to_string(cfg.model.kind));
  kv["model.hidden_dim"] = std::to_string(cfg.model.hidden_dim.value_or(0));
  kv["model.seed"] = std::to_string(cfg.model.seed);
  kv["train.epochs"] = std::to_string(cfg.train.epochs);
  kv["train.batch_size"] = std::to_string(cfg.train.batch_size);
  kv["train.optimizer"] = std::string(to_string(cfg.train.optimizer));
  kv["train.learning_rate"] = fmt_double(cfg.train.learning_rate);
  kv["train.seed"] = std::to_string(cfg.train.seed);
  kv["train.warm_start"] = cfg.warm_start ? "true" : "false";
  kv["estimator.sigma_ladder"] = fmt_list(cfg.estimator.sigma_ladder);
  kv["estimator.stop_condition"] = std::to_string(cfg.estimator.stop_condition);
  kv["estimator.mc_size"] = std::to_string(cfg.estimator.mc_size);
  kv["estimator.seed"] = std::to_string(cfg.estimator.seed);
  kv["estimator.perturb_bias"] = cfg.estimator.perturb_bias ? "true" : "false";
  kv["experiment.strategy"] = std::string(to_string(cfg.strategy));
  kv["experiment.initial_labeled"] = std::to_string(cfg.initial_labeled);
  kv["experiment.initial_per_class"] = std::to_string(cfg.initial_per_class);
  kv["experiment.pool_size"] = std::to_string(cfg.pool_size);
  kv["experiment.query_size"] = std::to_string(cfg.query_size);
  kv["experiment.steps"] = std::to_string(cfg.steps);
  kv["experiment.repetitions"] = std::to_string(cfg.repetitions);
  kv["experiment.master_seed"] = std::to_string(cfg.master_seed);
  kv["experiment.record_wall_time"] = cfg.record_wall_time ? "true" : "false";
  kv["experiment.audit_labels"] = cfg.audit_labels ? "true" : "false";
  return kv;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : to_key_values(cfg)) {
    for (unsigned char c : k + "=" + v + "\n") {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

SplitDataset materialize(const DatasetSource& source) {
  if (source.kind == DatasetSource::Kind::Csv) {
    return load_dataset_csv(source.path, source.label_column, source.split_fraction, source.seed);
  }
  SplitDataset out;
  out.train = generate(source.generator, derive(source.seed, 0, 0));
  GeneratorParams test_params = source.generator;
  test_params.n = source.n_test;
  out.test = generate(test_params, derive(source.seed, 0, 1));
  for (int k = 0; k < out.train.num_classes; ++k) out.original_labels.push_back(k);
  return out;
}

ExperimentResult al_experiment(const ExperimentConfig& cfg, const StepObserver& observer) {
  return al_experiment(cfg, materialize(cfg.dataset), observer);
}

ExperimentResult al_experiment(const ExperimentConfig& cfg, const SplitDataset& data,
                               const StepObserver& observer) {
  cfg.validate();
  const Dataset& train_set = data.train;
  if (train_set.size() == 0 || data.test.size() == 0) throw std::invalid_argument("empty train or test split");
  if (data.test.x.dim() != train_set.x.dim()) throw std::invalid_argument("train/test dimension mismatch");

  ModelSpec spec = cfg.model;
  spec.input_dim = train_set.x.dim();
  spec.num_classes = std::max(train_set.num_classes, data.test.num_classes);
  spec.validate();

  const std::size_t initial =
      cfg.initial_per_class > 0 ? cfg.initial_per_class * static_cast<std::size_t>(spec.num_classes) : cfg.initial_labeled;
  const std::size_t budget = initial + static_cast<std::size_t>(cfg.steps) * cfg.query_size;
  if (budget > train_set.size()) {
    throw std::invalid_argument("pool exhaustion: " + std::to_string(budget) + " labels requested from a training split of " +
                                std::to_string(train_set.size()));
  }

  const std::string hash = config_hash(cfg);
  const std::string algorithm(to_string(cfg.strategy));
  ExperimentResult result;

  for (int r = 0; r < cfg.repetitions; ++r) {
    const std::uint64_t rep_seed = derive(cfg.master_seed, static_cast<std::uint64_t>(r), 0);
    Rng init_rng = Rng::substream(rep_seed, kInitial);
    std::vector<std::size_t> labeled = initial_labeled_set(cfg, train_set, init_rng);
    std::vector<std::size_t> unlabeled;
    {
      std::size_t li = 0;
      for (std::size_t i = 0; i < train_set.size(); ++i) {
        if (li < labeled.size() && labeled[li] == i) {
          ++li;
        } else {
          unlabeled.push_back(i);
        }
      }
    }
    LabelOracle oracle(train_set.y, cfg.audit_labels);
    for (std::size_t i : labeled) oracle.reveal(i);

    std::optional<TrainedModel> previous;
    for (int t = 0; t <= cfg.steps; ++t) {
      const auto started = std::chrono::steady_clock::now();
      const auto ut = static_cast<std::uint64_t>(t);

      Dataset labeled_data{train_set.x.subset(labeled), {}, spec.num_classes};
      labeled_data.y.reserve(labeled.size());
      for (std::size_t i : labeled) labeled_data.y.push_back(oracle.label(i));

      TrainConfig tcfg = cfg.train;
      tcfg.seed = derive(cfg.train.seed ^ rep_seed, kTrain, ut);
      std::optional<TrainedModel> model;
      try {
        model = (cfg.warm_start && previous) ? train_from(*previous, labeled_data, tcfg)
                                             : train(labeled_data, spec, tcfg);
      } catch (const TrainingDiverged& e) {
        result.warnings.push_back("repetition " + std::to_string(r) + " aborted at step " + std::to_string(t) +
                                  ": " + e.what());
        break;
      }
      previous = model;
      const double acc = accuracy(*model, data.test);

      StepTrace trace;
      if (t < cfg.steps) {
        trace.repetition = r;
        trace.step = t;
        // Pool: uniform without replacement from U_t.
        std::vector<std::size_t> pool = unlabeled;
        Rng pool_rng = Rng::substream(rep_seed, kPool, ut);
        if (pool.size() > cfg.pool_size) {
          for (std::size_t i = 0; i < cfg.pool_size; ++i) {
            std::swap(pool[i], pool[i + pool_rng.index(pool.size() - i)]);
          }
          pool.resize(cfg.pool_size);
        } else if (pool.size() < cfg.pool_size) {
          result.warnings.push_back("repetition " + std::to_string(r) + " step " + std::to_string(t) +
                                    ": only " + std::to_string(pool.size()) + " unlabeled samples, pool size " +
                                    std::to_string(cfg.pool_size) + " clamped");
        }
        if (pool.size() < cfg.query_size) {
          throw std::runtime_error("pool exhaustion: " + std::to_string(pool.size()) +
                                   " unlabeled samples left, query size " + std::to_string(cfg.query_size));
        }
        const PointSet pool_x = train_set.x.subset(pool);
        Rng select_rng = Rng::substream(rep_seed, kSelect, ut);

        SelectionBatch batch;
        switch (cfg.strategy) {
          case Strategy::LdmS: {
            EstimatorConfig ecfg = cfg.estimator;
            ecfg.mc_size = pool_x.size();
            ecfg.seed = derive(cfg.estimator.seed ^ rep_seed, kEstimate, ut);
            const auto estimates = estimate_ldm_pool(pool_x, *model, ecfg);
            trace.ldm_values.reserve(estimates.size());
            for (const auto& e : estimates) trace.ldm_values.push_back(e.value);
            trace.weights = compute_weights(trace.ldm_values, cfg.query_size).gamma;
            batch = ldm_seeded_select(features_all(*model, pool_x), trace.ldm_values, cfg.query_size, select_rng);
            break;
          }
          case Strategy::Random:
            batch = random_select(pool_x.size(), cfg.query_size, select_rng);
            break;
          case Strategy::Entropy:
          case Strategy::Margin: {
            std::vector<std::vector<double>> probas;
            probas.reserve(pool_x.size());
            for (std::size_t i = 0; i < pool_x.size(); ++i) probas.push_back(predict_proba(*model, pool_x[i]));
            batch = cfg.strategy == Strategy::Entropy ? entropy_select(probas, cfg.query_size)
                                                      : margin_select(probas, cfg.query_size);
            break;
          }
          case Strategy::Coreset:
            batch = coreset_select(features_all(*model, pool_x), features_all(*model, train_set.x.subset(labeled)),
                                   cfg.query_size);
            break;
        }
        for (const auto& w : batch.warnings) {
          result.warnings.push_back("repetition " + std::to_string(r) + " step " + std::to_string(t) + ": " + w);
        }
        trace.labeled = labeled;
        trace.unlabeled = unlabeled;
        trace.pool = pool;
        trace.batch = batch;
        if (observer) observer(trace);

        // Reveal and move the batch: L <- L u Q, U <- U \ Q.
        std::vector<std::size_t> chosen;
        for (std::size_t local : batch.indices) chosen.push_back(pool[local]);
        std::sort(chosen.begin(), chosen.end());
        for (std::size_t i : chosen) oracle.reveal(i);
        std::vector<std::size_t> next_unlabeled;
        std::set_difference(unlabeled.begin(), unlabeled.end(), chosen.begin(), chosen.end(),
                            std::back_inserter(next_unlabeled));
        unlabeled = std::move(next_unlabeled);
        std::vector<std::size_t> next_labeled;
        std::merge(labeled.begin(), labeled.end(), chosen.begin(), chosen.end(), std::back_inserter(next_labeled));
        labeled = std::move(next_labeled);
      }

      ExperimentRecord rec;
      rec.algorithm = algorithm;
      rec.dataset = cfg.dataset.id;
      rec.repetition = r;
      rec.step = t;
      rec.labeled_count = initial + ut * cfg.query_size;
      rec.test_accuracy = acc;
      if (cfg.record_wall_time) {
        rec.wall_time_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      }
      rec.seed = rep_seed;
      rec.config_hash = hash;
      result.records.push_back(std::move(rec));
    }
  }
  return result;
}

void write_record_jsonl(std::ostream& out, const ExperimentRecord& r) {
  nlohmann::ordered_json j;
  j["algorithm"] = r.algorithm;
  j["dataset"] = r.dataset;
  j["repetition"] = r.repetition;
  j["step"] = r.step;
  j["labeled_count"] = r.labeled_count;
  j["test_accuracy"] = r.test_accuracy;
  j["wall_time_seconds"] = r.wall_time_seconds;
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  out << j.dump() << '\n';
}

ExperimentRecord parse_record_json(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("malformed record: ") + e.what());
  }
  try {
    ExperimentRecord r;
    r.algorithm = j.at("algorithm").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.repetition = j.at("repetition").get<int>();
    r.step = j.at("step").get<int>();
    r.labeled_count = j.at("labeled_count").get<std::size_t>();
    r.test_accuracy = j.at("test_accuracy").get<double>();
    r.wall_time_seconds = j.value("wall_time_seconds", 0.0);
    r.seed = j.value("seed", std::uint64_t{0});
    r.config_hash = j.value("config_hash", std::string{});
    if (!(r.test_accuracy >= 0.0 && r.test_accuracy <= 1.0)) {
      throw std::runtime_error("test_accuracy outside [0, 1]");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed record: ") + e.what());
  }
}

std::vector<ExperimentRecord> read_records_jsonl(std::istream& in) {
  std::vector<ExperimentRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(parse_record_json(line));
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ldm
